#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hopper/sim_time.h"

namespace hopper {

using NodeId = std::uint32_t;
using LinkId = std::uint32_t;
using HostId = std::uint32_t;
using PathId = std::uint32_t;

inline constexpr std::uint16_t kRoceDstPort = 4791;
inline constexpr std::uint8_t kUdpProtocol = 17;

enum class NodeKind : std::uint8_t { kHost, kLeaf, kSpine };

struct EcnParams {
  std::uint64_t kmin_bytes = 100'000;
  std::uint64_t kmax_bytes = 400'000;
  double pmax = 0.05;
};

// Parameters shared by every directed link of one tier.
struct LinkTemplate {
  std::uint64_t bandwidth_bps = 100'000'000'000ull;
  SimTime latency = microseconds(1);
  std::uint64_t queue_capacity_bytes = 1'000'000;
  EcnParams ecn;
};

// A directed link: one output queue at `from` feeding `to`.
struct Link {
  NodeId from = 0;
  NodeId to = 0;
  std::uint64_t bandwidth_bps = 0;
  SimTime latency;
  std::uint64_t queue_capacity_bytes = 0;
  EcnParams ecn;
  // Utilization aggregation key, e.g. "host-100G" or "fabric-1G".
  std::string link_class;
};

struct Node {
  NodeKind kind = NodeKind::kHost;
  std::uint32_t index = 0;  // position within its tier
};

struct FiveTuple {
  std::uint32_t src_addr = 0;
  std::uint32_t dst_addr = 0;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = kRoceDstPort;
  std::uint8_t protocol = kUdpProtocol;
};

// CRC32 over the big-endian encoding src_addr|dst_addr|src_port|dst_port|protocol.
std::uint32_t ecmp_hash(const FiveTuple& t);

std::uint32_t host_address(HostId h);

// Time to clock `bytes` onto a link, rounded up to whole nanoseconds.
constexpr SimTime serialization_time(std::uint64_t bytes, std::uint64_t bandwidth_bps) {
  return SimTime{(bytes * 8ull * 1'000'000'000ull + bandwidth_bps - 1) / bandwidth_bps};
}

// Two-tier leaf-spine fabric. Node ids: hosts first, then leaves, then
// spines. Every leaf has exactly one uplink to every spine.
class Topology {
 public:
  std::size_t num_hosts() const { return host_uplink_.size(); }
  std::size_t num_leaves() const { return leaf_uplinks_.size(); }
  std::size_t num_spines() const { return spine_downlinks_.size(); }

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Link>& links() const { return links_; }
  const Link& link(LinkId id) const { return links_.at(id); }

  NodeId host_node(HostId h) const { return h; }
  NodeId leaf_node(std::uint32_t leaf) const {
    return static_cast<NodeId>(num_hosts() + leaf);
  }
  NodeId spine_node(std::uint32_t spine) const {
    return static_cast<NodeId>(num_hosts() + num_leaves() + spine);
  }

  std::uint32_t leaf_of(HostId h) const { return host_to_leaf_.at(h); }
  bool same_leaf(HostId a, HostId b) const { return leaf_of(a) == leaf_of(b); }

  LinkId host_uplink(HostId h) const { return host_uplink_.at(h); }
  LinkId host_downlink(HostId h) const { return host_downlink_.at(h); }
  const std::vector<LinkId>& leaf_uplinks(std::uint32_t leaf) const {
    return leaf_uplinks_.at(leaf);
  }
  LinkId spine_downlink(std::uint32_t spine, std::uint32_t leaf) const {
    return spine_downlinks_.at(spine).at(leaf);
  }

  // Number of distinct routes between two hosts.
  std::size_t path_count(HostId src, HostId dst) const {
    return same_leaf(src, dst) ? 1 : num_spines();
  }

  // Ordered links for a route. Path id is the spine index for cross-leaf
  // pairs and 0 for the single intra-leaf route.
  std::vector<LinkId> path_links(HostId src, HostId dst, PathId path) const;

  // Path a five-tuple takes under ECMP forwarding.
  PathId route(HostId src, HostId dst, std::uint16_t src_port) const;

  // Two-way propagation plus per-hop serialization for a packet of
  // `data_bytes` forward and `ack_bytes` back along `path`, with the reverse
  // direction taking the ECMP route of the reversed tuple.
  SimTime unloaded_rtt(HostId src, HostId dst, std::uint16_t src_port, std::uint64_t data_bytes,
                       std::uint64_t ack_bytes) const;

  const std::string& name() const { return name_; }

  friend Topology build_leaf_spine(std::size_t, std::size_t, std::size_t, const LinkTemplate&,
                                   const LinkTemplate&);
  friend Topology build_asymmetric_testbed();

 private:
  LinkId add_link(NodeId from, NodeId to, const LinkTemplate& t, std::string link_class);

  std::string name_;
  std::vector<Node> nodes_;
  std::vector<Link> links_;
  std::vector<std::uint32_t> host_to_leaf_;
  std::vector<LinkId> host_uplink_;
  std::vector<LinkId> host_downlink_;
  std::vector<std::vector<LinkId>> leaf_uplinks_;     // [leaf][spine]
  std::vector<std::vector<LinkId>> spine_downlinks_;  // [spine][leaf]
};

// Symmetric fabric: n_hosts / n_leaf hosts per leaf, all leaves connected
// to all spines. Throws ConfigError when n_hosts is not divisible by n_leaf.
Topology build_leaf_spine(std::size_t n_hosts, std::size_t n_leaf, std::size_t n_spine,
                          const LinkTemplate& host_link, const LinkTemplate& fabric_link);

// 8 hosts, 2 leaves, 6 spines. Host links 25 Gbps; each leaf reaches spines
// 0-3 over 10 Gbps and spines 4-5 over 1 Gbps.
Topology build_asymmetric_testbed();

std::string bandwidth_label(std::uint64_t bps);

// Host-visible steering map for one (src, dst) pair: ports[i] is a source
// port whose ECMP route is paths[i]; paths are pairwise distinct.
struct PathProfileEntry {
  HostId src = 0;
  HostId dst = 0;
  std::vector<std::uint16_t> ports;
  std::vector<PathId> paths;

  std::size_t size() const { return ports.size(); }
  std::optional<std::size_t> index_of_path(PathId p) const;
};

inline constexpr std::uint16_t kProfilePortBase = 49152;

// Sweeps source ports upward from kProfilePortBase (wrapping through 0) and
// keeps the first port seen for each new path until k paths are found.
// Throws ConfigError naming the achievable count if fewer than k exist.
PathProfileEntry profile_source_ports(const Topology& topo, HostId src, HostId dst,
                                      std::size_t k);

// Memoized full profiles (every reachable path) for all pairs on demand.
class PathProfile {
 public:
  explicit PathProfile(std::shared_ptr<const Topology> topo) : topo_(std::move(topo)) {}
  const PathProfileEntry& entry(HostId src, HostId dst);
  const Topology& topology() const { return *topo_; }

 private:
  std::shared_ptr<const Topology> topo_;
  std::map<std::pair<HostId, HostId>, PathProfileEntry> cache_;
};

}  // namespace hopper
