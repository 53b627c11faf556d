#include "hopper/topology.h"

#include <zlib.h>

#include <array>
#include <string>

#include "hopper/errors.h"

namespace hopper {

std::uint32_t ecmp_hash(const FiveTuple& t) {
  std::array<unsigned char, 13> buf{};
  auto put32 = [&](std::size_t at, std::uint32_t v) {
    buf[at] = static_cast<unsigned char>(v >> 24);
    buf[at + 1] = static_cast<unsigned char>(v >> 16);
    buf[at + 2] = static_cast<unsigned char>(v >> 8);
    buf[at + 3] = static_cast<unsigned char>(v);
  };
  put32(0, t.src_addr);
  put32(4, t.dst_addr);
  buf[8] = static_cast<unsigned char>(t.src_port >> 8);
  buf[9] = static_cast<unsigned char>(t.src_port);
  buf[10] = static_cast<unsigned char>(t.dst_port >> 8);
  buf[11] = static_cast<unsigned char>(t.dst_port);
  buf[12] = t.protocol;
  return static_cast<std::uint32_t>(crc32(0L, buf.data(), static_cast<uInt>(buf.size())));
}

// 10.0.0.0/8, host 0 at 10.0.0.1.
std::uint32_t host_address(HostId h) { return 0x0A000001u + h; }

std::string bandwidth_label(std::uint64_t bps) {
  if (bps % 1'000'000'000ull == 0) return std::to_string(bps / 1'000'000'000ull) + "G";
  if (bps % 1'000'000ull == 0) return std::to_string(bps / 1'000'000ull) + "M";
  return std::to_string(bps) + "bps";
}

LinkId Topology::add_link(NodeId from, NodeId to, const LinkTemplate& t,
                          std::string link_class) {
  if (t.bandwidth_bps == 0) throw ConfigError("link bandwidth must be positive");
  if (t.latency.ns == 0) throw ConfigError("link latency must be positive");
  if (t.ecn.kmin_bytes > t.ecn.kmax_bytes || t.ecn.kmax_bytes > t.queue_capacity_bytes) {
    throw ConfigError("link ECN thresholds must satisfy kmin <= kmax <= queue capacity");
  }
  if (t.ecn.pmax < 0.0 || t.ecn.pmax > 1.0) throw ConfigError("ECN pmax must lie in [0, 1]");
  const auto id = static_cast<LinkId>(links_.size());
  links_.push_back(Link{from, to, t.bandwidth_bps, t.latency, t.queue_capacity_bytes, t.ecn,
                        std::move(link_class)});
  return id;
}

Topology build_leaf_spine(std::size_t n_hosts, std::size_t n_leaf, std::size_t n_spine,
                          const LinkTemplate& host_link, const LinkTemplate& fabric_link) {
  if (n_hosts == 0 || n_leaf == 0 || n_spine == 0) {
    throw ConfigError("leaf-spine needs at least one host, leaf and spine");
  }
  if (n_hosts % n_leaf != 0) {
    throw ConfigError(std::to_string(n_hosts) + " hosts cannot be split evenly over " +
                      std::to_string(n_leaf) + " leaves");
  }
  Topology t;
  t.name_ = "leaf-spine-" + std::to_string(n_hosts) + "h-" + std::to_string(n_leaf) + "l-" +
            std::to_string(n_spine) + "s";
  const std::size_t per_leaf = n_hosts / n_leaf;
  for (std::size_t h = 0; h < n_hosts; ++h) {
    t.nodes_.push_back(Node{NodeKind::kHost, static_cast<std::uint32_t>(h)});
  }
  for (std::size_t l = 0; l < n_leaf; ++l) {
    t.nodes_.push_back(Node{NodeKind::kLeaf, static_cast<std::uint32_t>(l)});
  }
  for (std::size_t s = 0; s < n_spine; ++s) {
    t.nodes_.push_back(Node{NodeKind::kSpine, static_cast<std::uint32_t>(s)});
  }
  t.host_to_leaf_.resize(n_hosts);
  t.host_uplink_.resize(n_hosts);
  t.host_downlink_.resize(n_hosts);
  t.leaf_uplinks_.assign(n_leaf, std::vector<LinkId>(n_spine));
  t.spine_downlinks_.assign(n_spine, std::vector<LinkId>(n_leaf));

  const std::string host_class = "host-" + bandwidth_label(host_link.bandwidth_bps);
  const std::string fabric_class = "fabric-" + bandwidth_label(fabric_link.bandwidth_bps);
  for (std::size_t h = 0; h < n_hosts; ++h) {
    const auto leaf = static_cast<std::uint32_t>(h / per_leaf);
    t.host_to_leaf_[h] = leaf;
    t.host_uplink_[h] = t.add_link(t.host_node(static_cast<HostId>(h)), t.leaf_node(leaf),
                                   host_link, host_class);
    t.host_downlink_[h] = t.add_link(t.leaf_node(leaf), t.host_node(static_cast<HostId>(h)),
                                     host_link, host_class);
  }
  for (std::size_t l = 0; l < n_leaf; ++l) {
    for (std::size_t s = 0; s < n_spine; ++s) {
      const auto leaf = static_cast<std::uint32_t>(l);
      const auto spine = static_cast<std::uint32_t>(s);
      t.leaf_uplinks_[l][s] =
          t.add_link(t.leaf_node(leaf), t.spine_node(spine), fabric_link, fabric_class);
      t.spine_downlinks_[s][l] =
          t.add_link(t.spine_node(spine), t.leaf_node(leaf), fabric_link, fabric_class);
    }
  }
  return t;
}

Topology build_asymmetric_testbed() {
  LinkTemplate host;
  host.bandwidth_bps = 25'000'000'000ull;
  LinkTemplate fast;
  fast.bandwidth_bps = 10'000'000'000ull;
  LinkTemplate slow;
  slow.bandwidth_bps = 1'000'000'000ull;

  Topology t = build_leaf_spine(8, 2, 6, host, fast);
  t.name_ = "asymmetric-testbed";
  for (std::uint32_t l = 0; l < 2; ++l) {
    for (std::uint32_t s = 4; s < 6; ++s) {
      for (LinkId id : {t.leaf_uplinks_[l][s], t.spine_downlinks_[s][l]}) {
        Link& link = t.links_[id];
        link.bandwidth_bps = slow.bandwidth_bps;
        link.link_class = "fabric-" + bandwidth_label(slow.bandwidth_bps);
      }
    }
  }
  return t;
}

std::vector<LinkId> Topology::path_links(HostId src, HostId dst, PathId path) const {
  const std::uint32_t ls = leaf_of(src);
  const std::uint32_t ld = leaf_of(dst);
  if (ls == ld) {
    if (path != 0) throw ConfigError("intra-leaf pair has only path 0");
    return {host_uplink(src), host_downlink(dst)};
  }
  if (path >= num_spines()) throw ConfigError("path id beyond spine count");
  return {host_uplink(src), leaf_uplinks_[ls][path], spine_downlinks_[path][ld],
          host_downlink(dst)};
}

PathId Topology::route(HostId src, HostId dst, std::uint16_t src_port) const {
  if (same_leaf(src, dst)) return 0;
  FiveTuple t{host_address(src), host_address(dst), src_port, kRoceDstPort, kUdpProtocol};
  return static_cast<PathId>(ecmp_hash(t) % num_spines());
}

SimTime Topology::unloaded_rtt(HostId src, HostId dst, std::uint16_t src_port,
                               std::uint64_t data_bytes, std::uint64_t ack_bytes) const {
  SimTime total;
  for (LinkId id : path_links(src, dst, route(src, dst, src_port))) {
    total += serialization_time(data_bytes, links_[id].bandwidth_bps) + links_[id].latency;
  }
  // The reverse tuple swaps ports: src port 4791, dst port = steering port.
  PathId back = 0;
  if (!same_leaf(src, dst)) {
    FiveTuple r{host_address(dst), host_address(src), kRoceDstPort, src_port, kUdpProtocol};
    back = static_cast<PathId>(ecmp_hash(r) % num_spines());
  }
  for (LinkId id : path_links(dst, src, back)) {
    total += serialization_time(ack_bytes, links_[id].bandwidth_bps) + links_[id].latency;
  }
  return total;
}

std::optional<std::size_t> PathProfileEntry::index_of_path(PathId p) const {
  for (std::size_t i = 0; i < paths.size(); ++i) {
    if (paths[i] == p) return i;
  }
  return std::nullopt;
}

PathProfileEntry profile_source_ports(const Topology& topo, HostId src, HostId dst,
                                      std::size_t k) {
  PathProfileEntry entry{src, dst, {}, {}};
  if (k == 0) return entry;
  const std::size_t n_paths = topo.path_count(src, dst);
  std::vector<bool> seen(n_paths, false);
  for (std::uint32_t i = 0; i < 65536 && entry.size() < k; ++i) {
    const auto port = static_cast<std::uint16_t>((kProfilePortBase + i) & 0xffffu);
    const PathId p = topo.route(src, dst, port);
    if (!seen[p]) {
      seen[p] = true;
      entry.ports.push_back(port);
      entry.paths.push_back(p);
    }
  }
  if (entry.size() < k) {
    throw ConfigError("requested " + std::to_string(k) + " distinct paths from host " +
                      std::to_string(src) + " to host " + std::to_string(dst) + " but only " +
                      std::to_string(entry.size()) + " are reachable");
  }
  return entry;
}

const PathProfileEntry& PathProfile::entry(HostId src, HostId dst) {
  auto key = std::make_pair(src, dst);
  auto it = cache_.find(key);
  if (it == cache_.end()) {
    it = cache_
             .emplace(key, profile_source_ports(*topo_, src, dst, topo_->path_count(src, dst)))
             .first;
  }
  return it->second;
}

}  // namespace hopper
