#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <vector>

#include "hopper/errors.h"
#include "hopper/switchnet.h"
#include "hopper/topology.h"
#include "crc32_oracle.h"

namespace hopper {
namespace {

using testing::crc32_bitwise;
using testing::oracle_hash;

Topology symmetric() {
  return build_leaf_spine(128, 8, 8, LinkTemplate{}, LinkTemplate{});
}

TEST(EcmpHash, MatchesIndependentCrc32) {
  const std::uint8_t check[] = {'1', '2', '3', '4', '5', '6', '7', '8', '9'};
  ASSERT_EQ(crc32_bitwise(check, sizeof check), 0xCBF43926u);  // standard check value
  for (std::uint32_t s = 0; s < 16; ++s) {
    for (std::uint32_t port = 0; port < 65536; port += 997) {
      FiveTuple t{host_address(s), host_address(100 - s), static_cast<std::uint16_t>(port)};
      ASSERT_EQ(ecmp_hash(t), oracle_hash(t)) << s << " " << port;
    }
  }
}

TEST(EcmpHash, DependsOnEveryField) {
  const FiveTuple base{host_address(0), host_address(16), 50000};
  FiveTuple t = base;
  t.dst_port = 4792;
  EXPECT_NE(ecmp_hash(base), ecmp_hash(t));
  t = base;
  t.protocol = 6;
  EXPECT_NE(ecmp_hash(base), ecmp_hash(t));
  EXPECT_EQ(host_address(0), 0x0A000001u);
}

TEST(Serialization, RoundsUpToWholeNanoseconds) {
  EXPECT_EQ(serialization_time(1000, 100'000'000'000ull).ns, 80u);
  EXPECT_EQ(serialization_time(64, 100'000'000'000ull).ns, 6u);  // 5.12 ns
  EXPECT_EQ(serialization_time(1500, 100'000'000'000ull).ns, 120u);
  EXPECT_EQ(serialization_time(1500, 1'000'000'000ull).ns, 12'000u);
}

TEST(Topology, SymmetricShapeAndPathCounts) {
  const Topology t = symmetric();
  EXPECT_EQ(t.num_hosts(), 128u);
  EXPECT_EQ(t.num_leaves(), 8u);
  EXPECT_EQ(t.num_spines(), 8u);
  // hosts up+down, leaf-spine both directions
  EXPECT_EQ(t.links().size(), 128u * 2 + 8u * 8u * 2);
  EXPECT_EQ(t.path_count(0, 1), 1u);
  EXPECT_EQ(t.path_count(0, 16), 8u);

  // Count routes by walking the graph: host -> leaf -> spine -> leaf -> host.
  auto walk = [&](HostId s, HostId d) {
    std::size_t n = 0;
    const NodeId src_leaf = t.link(t.host_uplink(s)).to;
    const NodeId dst_leaf = t.link(t.host_downlink(d)).from;
    if (src_leaf == dst_leaf) return std::size_t{1};
    for (const Link& up : t.links()) {
      if (up.from != src_leaf) continue;
      for (const Link& down : t.links()) {
        if (down.from == up.to && down.to == dst_leaf) ++n;
      }
    }
    return n;
  };
  for (HostId s : {0u, 5u, 40u}) {
    for (HostId d : {1u, 17u, 127u}) {
      if (s != d) EXPECT_EQ(walk(s, d), t.path_count(s, d)) << s << "->" << d;
    }
  }
}

TEST(Topology, IndivisibleHostCountIsRejected) {
  EXPECT_THROW(build_leaf_spine(10, 4, 2, LinkTemplate{}, LinkTemplate{}), ConfigError);
}

TEST(Topology, UnloadedRttAcrossLeaves) {
  const Topology t = symmetric();
  // Four 1 us hops each way, 80 ns per 1000 B hop and 6 ns per 64 B ACK hop.
  EXPECT_EQ(t.unloaded_rtt(0, 16, 50000, 1000, 64).ns, 8000u + 4 * 80 + 4 * 6);
  EXPECT_EQ(t.unloaded_rtt(0, 1, 50000, 1000, 64).ns, 4000u + 2 * 80 + 2 * 6);
}

TEST(Topology, PathLinksFollowHopByHopForwarding) {
  const Topology t = symmetric();
  for (HostId s : {0u, 33u}) {
    for (HostId d : {1u, 64u, 120u}) {
      for (std::uint32_t port = 49152; port < 49152 + 40; ++port) {
        const FiveTuple tuple{host_address(s), host_address(d),
                              static_cast<std::uint16_t>(port)};
        std::vector<LinkId> walked;
        NodeId node = t.host_node(s);
        while (node != t.host_node(d)) {
          const LinkId l = next_link(t, node, d, tuple);
          walked.push_back(l);
          node = t.link(l).to;
          ASSERT_LE(walked.size(), 4u);
        }
        const PathId p = t.route(s, d, static_cast<std::uint16_t>(port));
        EXPECT_EQ(walked, t.path_links(s, d, p));
        if (!t.same_leaf(s, d)) {
          EXPECT_EQ(p, ecmp_hash(tuple) % t.num_spines());
          EXPECT_EQ(t.link(walked[1]).to, t.spine_node(p));
        }
      }
    }
  }
}

TEST(Topology, AsymmetricTestbed) {
  const Topology t = build_asymmetric_testbed();
  EXPECT_EQ(t.num_hosts(), 8u);
  EXPECT_EQ(t.num_leaves(), 2u);
  EXPECT_EQ(t.path_count(0, 4), 6u);
  int fast = 0;
  int slow = 0;
  for (LinkId l : t.leaf_uplinks(0)) {
    const std::uint64_t bw = t.link(l).bandwidth_bps;
    if (bw == 10'000'000'000ull) ++fast;
    if (bw == 1'000'000'000ull) ++slow;
  }
  EXPECT_EQ(fast, 4);
  EXPECT_EQ(slow, 2);
  EXPECT_EQ(t.link(t.leaf_uplinks(0)[4]).link_class, "fabric-1G");
  EXPECT_EQ(t.link(t.leaf_uplinks(0)[0]).link_class, "fabric-10G");
  EXPECT_EQ(t.link(t.host_uplink(0)).link_class, "host-25G");
  EXPECT_EQ(t.link(t.host_uplink(0)).bandwidth_bps, 25'000'000'000ull);

  // A 10 KB packet sees a shorter unloaded RTT on the fast paths.
  const PathProfileEntry e = profile_source_ports(t, 0, 4, 6);
  SimTime fast_rtt, slow_rtt;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const SimTime r = t.unloaded_rtt(0, 4, e.ports[i], 10'000, 64);
    if (e.paths[i] < 4) fast_rtt = std::max(fast_rtt, r);
    if (e.paths[i] >= 4) slow_rtt = r;
  }
  EXPECT_LT(fast_rtt, slow_rtt);

  std::set<PathId> reached;
  for (std::uint32_t port = 0; port < 65536; ++port) {
    reached.insert(t.route(0, 4, static_cast<std::uint16_t>(port)));
  }
  EXPECT_EQ(reached.size(), 6u);
}

TEST(PathProfile, DistinctPathsAndErrors) {
  const Topology t = symmetric();
  const PathProfileEntry e = profile_source_ports(t, 0, 16, 8);
  ASSERT_EQ(e.size(), 8u);
  EXPECT_EQ(std::set<PathId>(e.paths.begin(), e.paths.end()).size(), 8u);
  for (std::size_t i = 0; i < e.size(); ++i) {
    EXPECT_EQ(t.route(0, 16, e.ports[i]), e.paths[i]);
    EXPECT_GE(e.ports[i], kProfilePortBase);
    EXPECT_EQ(e.index_of_path(e.paths[i]), i);
  }
  EXPECT_EQ(profile_source_ports(t, 0, 1, 1).size(), 1u);
  EXPECT_EQ(profile_source_ports(t, 0, 16, 0).size(), 0u);
  EXPECT_THROW(profile_source_ports(t, 0, 1, 2), ConfigError);
  EXPECT_THROW(profile_source_ports(t, 0, 16, 9), ConfigError);

  PathProfile cache(std::make_shared<const Topology>(t));
  EXPECT_EQ(cache.entry(0, 16).size(), 8u);
  EXPECT_EQ(&cache.entry(0, 16), &cache.entry(0, 16));
}

TEST(PathProfile, FirstPortPerPathIsKept) {
  const Topology t = symmetric();
  const PathProfileEntry e = profile_source_ports(t, 3, 90, 8);
  std::set<PathId> seen;
  std::size_t next = 0;
  for (std::uint32_t port = kProfilePortBase; next < e.size(); ++port) {
    const PathId p = t.route(3, 90, static_cast<std::uint16_t>(port));
    if (seen.insert(p).second) {
      EXPECT_EQ(e.ports[next], port);
      ++next;
    }
  }
}

}  // namespace
}  // namespace hopper
