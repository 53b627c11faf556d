#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "hopper/sim_time.h"
#include "hopper/simulation.h"
#include "hopper/topology.h"

namespace hopper {

using Json = nlohmann::ordered_json;

// Completion time of one flow running alone on an empty fabric, on the
// lowest-RTT path of its pair. Memoized per (size, chunk, same-leaf).
class BaselineCache {
 public:
  BaselineCache(std::shared_ptr<const Topology> topo, SimulationConfig cfg);

  SimTime get(std::uint64_t size_bytes, HostId src, HostId dst, std::uint64_t chunk_bytes = 0);
  std::size_t simulations_run() const { return runs_; }

 private:
  std::shared_ptr<const Topology> topo_;
  SimulationConfig cfg_;
  std::map<std::tuple<std::uint64_t, std::uint64_t, bool>, SimTime> cache_;
  std::size_t runs_ = 0;
};

// Fastest unloaded path of a pair for an MTU-sized packet; returns its
// steering port.
std::uint16_t best_baseline_port(const Topology& topo, HostId src, HostId dst,
                                 std::uint32_t mtu, std::uint32_t ack_bytes);

struct FlowRecord {
  FlowId id = 0;
  std::uint64_t size_bytes = 0;
  SimTime start;
  SimTime end;
  SimTime baseline;
  std::uint32_t switches = 0;
  std::uint32_t retransmissions = 0;
  bool completed = false;
  double slowdown() const {
    return static_cast<double>((end - start).ns) / static_cast<double>(baseline.ns);
  }
};

// Bin edges: bin 0 holds sizes below edges[0], bin i holds
// [edges[i-1], edges[i]), the last bin everything from edges.back() up.
std::vector<std::uint64_t> datacenter_bin_edges();  // 2 KB, 49 KB
std::vector<std::uint64_t> ml_bin_edges();          // 2 MB, 8 MB, 32 MB

struct BinStats {
  std::string label;
  std::uint64_t lo = 0;
  std::optional<std::uint64_t> hi;
  std::size_t count = 0;
  // Absent when the bin holds no completed flow.
  std::optional<double> avg;
  std::optional<double> p50;
  std::optional<double> p95;
  std::optional<double> p99;
};

// Nearest-rank percentile of an ascending sample: element ceil(q * n) - 1.
double nearest_rank(const std::vector<double>& sorted, double q);

// Slowdown statistics per size bin over completed records only.
std::vector<BinStats> compute_slowdown_stats(const std::vector<FlowRecord>& records,
                                             const std::vector<std::uint64_t>& edges);

struct LinkStats {
  LinkId id = 0;
  NodeId from = 0;
  NodeId to = 0;
  std::string link_class;
  std::uint64_t bytes = 0;
  double utilization = 0.0;
  std::uint64_t drops = 0;
  std::uint64_t ecn_marks = 0;
};

struct ClassUtilization {
  std::string link_class;
  std::size_t links = 0;
  std::uint64_t bytes = 0;
  double utilization = 0.0;  // mean over the links of the class
};

std::vector<LinkStats> link_stats(const Topology& topo, const std::vector<OutputQueue>& queues,
                                  SimTime window);
// Utilization = bytes * 8 / (bandwidth * window), averaged per class.
std::vector<ClassUtilization> link_utilization_report(const std::vector<LinkStats>& links);

// Bytes carried by each spine (uplinks into it plus downlinks out of it).
std::vector<std::uint64_t> spine_bytes(const Topology& topo, const std::vector<OutputQueue>& queues);
// max / min over spines; infinity when some spine carried nothing.
double spread(const std::vector<std::uint64_t>& values);

struct MetricsReport {
  std::uint64_t seed = 0;
  std::size_t flows = 0;
  std::size_t completed = 0;
  SimTime end;
  std::uint64_t events = 0;
  std::uint64_t trace_digest = 0;
  std::uint32_t window_packets = 0;  // effective inflight cap
  std::vector<BinStats> bins;
  std::vector<LinkStats> links;
  std::vector<ClassUtilization> classes;
  std::vector<std::uint64_t> spine_bytes;
  SimCounters counters;
  std::uint64_t queue_drops = 0;
  std::uint64_t ecn_marks = 0;
  std::optional<std::uint32_t> rounds;
  std::optional<SimTime> collective_time;
  std::vector<FlowRecord> records;

  // Mean utilization of a class, or 0 if the topology has no such class.
  double class_utilization(const std::string& cls) const;
  const BinStats* bin(std::size_t i) const { return i < bins.size() ? &bins[i] : nullptr; }
  // Nearest-rank p99 over every completed flow.
  std::optional<double> overall_p99() const;
};

// Collects per-flow records (baselines resolved through `baselines`) and
// the link counters over [0, sim.now()].
MetricsReport build_report(const Simulation& sim, BaselineCache& baselines,
                           const std::vector<std::uint64_t>& edges, std::uint64_t seed);

Json to_json(const MetricsReport& r);
Json to_json(const BinStats& b);

// flow_id,size,start_ns,end_ns,baseline_ns,slowdown,switches,retx
void write_flow_csv(std::ostream& out, const std::vector<FlowRecord>& records);

std::string hex64(std::uint64_t v);

}  // namespace hopper
