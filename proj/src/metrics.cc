#include "hopper/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "hopper/errors.h"

namespace hopper {

std::uint16_t best_baseline_port(const Topology& topo, HostId src, HostId dst,
                                 std::uint32_t mtu, std::uint32_t ack_bytes) {
  const PathProfileEntry e = profile_source_ports(topo, src, dst, topo.path_count(src, dst));
  std::uint16_t best = e.ports.front();
  SimTime best_rtt = SimTime::max();
  for (std::uint16_t port : e.ports) {
    const SimTime rtt = topo.unloaded_rtt(src, dst, port, mtu, ack_bytes);
    if (rtt < best_rtt) {
      best_rtt = rtt;
      best = port;
    }
  }
  return best;
}

BaselineCache::BaselineCache(std::shared_ptr<const Topology> topo, SimulationConfig cfg)
    : topo_(std::move(topo)), cfg_(std::move(cfg)) {
  cfg_.scheme = Scheme::kEcmp;
  cfg_.record_flow_events = false;
  cfg_.transport.drop_probability = 0.0;
}

SimTime BaselineCache::get(std::uint64_t size_bytes, HostId src, HostId dst,
                           std::uint64_t chunk_bytes) {
  const auto key = std::make_tuple(size_bytes, chunk_bytes, topo_->same_leaf(src, dst));
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  Simulation sim(topo_, cfg_, 0);
  FlowSpec f;
  f.src = src;
  f.dst = dst;
  f.size_bytes = size_bytes;
  f.chunk_bytes = chunk_bytes;
  f.src_port = best_baseline_port(*topo_, src, dst, cfg_.transport.mtu, cfg_.transport.ack_bytes);
  const FlowId id = sim.add_flow(f);
  if (!sim.run_until_complete(SimTime{std::numeric_limits<std::uint64_t>::max() / 2})) {
    throw SimulationError("baseline flow of " + std::to_string(size_bytes) +
                          " bytes did not complete");
  }
  ++runs_;
  const SimTime fct = sim.result(id).fct();
  cache_.emplace(key, fct);
  return fct;
}

std::vector<std::uint64_t> datacenter_bin_edges() { return {2'000, 49'000}; }
std::vector<std::uint64_t> ml_bin_edges() { return {2'000'000, 8'000'000, 32'000'000}; }

double nearest_rank(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw SimulationError("percentile of an empty sample");
  const auto n = static_cast<double>(sorted.size());
  std::size_t rank = static_cast<std::size_t>(std::ceil(q * n));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

namespace {

std::string size_label(std::uint64_t b) {
  char buf[32];
  if (b >= 1'000'000 && b % 1'000'000 == 0) {
    std::snprintf(buf, sizeof buf, "%lluMB", static_cast<unsigned long long>(b / 1'000'000));
  } else if (b >= 1'000 && b % 1'000 == 0) {
    std::snprintf(buf, sizeof buf, "%lluKB", static_cast<unsigned long long>(b / 1'000));
  } else {
    std::snprintf(buf, sizeof buf, "%lluB", static_cast<unsigned long long>(b));
  }
  return buf;
}

}  // namespace

std::vector<BinStats> compute_slowdown_stats(const std::vector<FlowRecord>& records,
                                             const std::vector<std::uint64_t>& edges) {
  if (!std::is_sorted(edges.begin(), edges.end()) ||
      std::adjacent_find(edges.begin(), edges.end()) != edges.end()) {
    throw ConfigError("bin edges must strictly increase");
  }
  const std::size_t n_bins = edges.size() + 1;
  std::vector<std::vector<double>> samples(n_bins);
  for (const FlowRecord& r : records) {
    if (!r.completed) continue;
    const std::size_t bin = static_cast<std::size_t>(
        std::upper_bound(edges.begin(), edges.end(), r.size_bytes) - edges.begin());
    samples[bin].push_back(r.slowdown());
  }
  std::vector<BinStats> out(n_bins);
  for (std::size_t i = 0; i < n_bins; ++i) {
    BinStats& b = out[i];
    b.lo = i == 0 ? 0 : edges[i - 1];
    if (i < edges.size()) b.hi = edges[i];
    if (i == 0) {
      b.label = "<" + size_label(edges.empty() ? 0 : edges[0]);
      if (edges.empty()) b.label = "all";
    } else if (i == edges.size()) {
      b.label = ">=" + size_label(b.lo);
    } else {
      b.label = size_label(b.lo) + "-" + size_label(*b.hi);
    }
    auto& v = samples[i];
    b.count = v.size();
    if (v.empty()) continue;
    std::sort(v.begin(), v.end());
    double sum = 0.0;
    for (double x : v) sum += x;
    b.avg = sum / static_cast<double>(v.size());
    b.p50 = nearest_rank(v, 0.50);
    b.p95 = nearest_rank(v, 0.95);
    b.p99 = nearest_rank(v, 0.99);
  }
  return out;
}

std::vector<LinkStats> link_stats(const Topology& topo, const std::vector<OutputQueue>& queues,
                                  SimTime window) {
  if (window.ns == 0) throw ConfigError("utilization window must be positive");
  std::vector<LinkStats> out;
  out.reserve(queues.size());
  for (std::size_t i = 0; i < queues.size(); ++i) {
    const Link& l = topo.link(static_cast<LinkId>(i));
    LinkStats s;
    s.id = static_cast<LinkId>(i);
    s.from = l.from;
    s.to = l.to;
    s.link_class = l.link_class;
    s.bytes = queues[i].bytes_sent();
    const double capacity_bits =
        static_cast<double>(l.bandwidth_bps) * static_cast<double>(window.ns) / 1e9;
    // Bytes are counted at enqueue, so a backlog still queued at the end of
    // the window would otherwise read as more than full.
    s.utilization = std::min(1.0, static_cast<double>(s.bytes) * 8.0 / capacity_bits);
    s.drops = queues[i].drops();
    s.ecn_marks = queues[i].ecn_marks();
    out.push_back(s);
  }
  return out;
}

std::vector<ClassUtilization> link_utilization_report(const std::vector<LinkStats>& links) {
  std::vector<ClassUtilization> out;
  for (const LinkStats& s : links) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const ClassUtilization& c) { return c.link_class == s.link_class; });
    if (it == out.end()) {
      out.push_back(ClassUtilization{s.link_class, 0, 0, 0.0});
      it = out.end() - 1;
    }
    ++it->links;
    it->bytes += s.bytes;
    it->utilization += s.utilization;
  }
  for (ClassUtilization& c : out) c.utilization /= static_cast<double>(c.links);
  return out;
}

std::vector<std::uint64_t> spine_bytes(const Topology& topo,
                                       const std::vector<OutputQueue>& queues) {
  std::vector<std::uint64_t> out(topo.num_spines(), 0);
  for (std::uint32_t s = 0; s < topo.num_spines(); ++s) {
    for (std::uint32_t l = 0; l < topo.num_leaves(); ++l) {
      out[s] += queues[topo.leaf_uplinks(l)[s]].bytes_sent();
      out[s] += queues[topo.spine_downlink(s, l)].bytes_sent();
    }
  }
  return out;
}

double spread(const std::vector<std::uint64_t>& values) {
  if (values.empty()) return 1.0;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (*lo == 0) return std::numeric_limits<double>::infinity();
  return static_cast<double>(*hi) / static_cast<double>(*lo);
}

double MetricsReport::class_utilization(const std::string& cls) const {
  for (const ClassUtilization& c : classes) {
    if (c.link_class == cls) return c.utilization;
  }
  return 0.0;
}

std::optional<double> MetricsReport::overall_p99() const {
  std::vector<double> v;
  for (const FlowRecord& r : records) {
    if (r.completed) v.push_back(r.slowdown());
  }
  if (v.empty()) return std::nullopt;
  std::sort(v.begin(), v.end());
  return nearest_rank(v, 0.99);
}

MetricsReport build_report(const Simulation& sim, BaselineCache& baselines,
                           const std::vector<std::uint64_t>& edges, std::uint64_t seed) {
  MetricsReport r;
  r.seed = seed;
  r.flows = sim.num_flows();
  r.completed = sim.completed_flows();
  r.end = sim.now();
  r.events = sim.events_dispatched();
  r.window_packets = sim.window_packets();
  r.trace_digest = sim.trace_digest();
  for (const FlowResult& f : sim.results()) {
    FlowRecord rec;
    rec.id = f.spec.id;
    rec.size_bytes = f.spec.size_bytes;
    rec.start = f.spec.start;
    rec.end = f.completed ? f.end : sim.now();
    rec.completed = f.completed;
    rec.switches = f.switches;
    rec.retransmissions = f.retransmissions;
    rec.baseline = baselines.get(f.spec.size_bytes, f.spec.src, f.spec.dst, f.spec.chunk_bytes);
    r.records.push_back(rec);
  }
  r.bins = compute_slowdown_stats(r.records, edges);
  r.links = link_stats(sim.topology(), sim.queues(), r.end.ns == 0 ? SimTime{1} : r.end);
  r.classes = link_utilization_report(r.links);
  r.spine_bytes = spine_bytes(sim.topology(), sim.queues());
  r.counters = sim.counters();
  for (const LinkStats& s : r.links) {
    r.queue_drops += s.drops;
    r.ecn_marks += s.ecn_marks;
  }
  return r;
}

std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace {
Json opt(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }
}  // namespace

Json to_json(const BinStats& b) {
  Json j;
  j["bin"] = b.label;
  j["lo_bytes"] = b.lo;
  j["hi_bytes"] = b.hi ? Json(*b.hi) : Json(nullptr);
  j["count"] = b.count;
  j["avg"] = opt(b.avg);
  j["p50"] = opt(b.p50);
  j["p95"] = opt(b.p95);
  j["p99"] = opt(b.p99);
  return j;
}

Json to_json(const MetricsReport& r) {
  Json j;
  j["seed"] = r.seed;
  Json summary;
  summary["flows"] = r.flows;
  summary["completed"] = r.completed;
  summary["incomplete"] = r.flows - r.completed;
  summary["sim_end_ns"] = r.end.ns;
  summary["events"] = r.events;
  summary["trace_digest"] = hex64(r.trace_digest);
  summary["window_packets"] = r.window_packets;
  if (r.rounds) summary["rounds"] = *r.rounds;
  if (r.collective_time) summary["collective_time_ns"] = r.collective_time->ns;
  j["summary"] = summary;
  Json bins = Json::array();
  for (const BinStats& b : r.bins) bins.push_back(to_json(b));
  j["slowdown"] = bins;
  Json classes = Json::array();
  for (const ClassUtilization& c : r.classes) {
    Json cj;
    cj["class"] = c.link_class;
    cj["links"] = c.links;
    cj["bytes"] = c.bytes;
    cj["utilization"] = c.utilization;
    classes.push_back(cj);
  }
  j["link_classes"] = classes;
  j["spine_bytes"] = r.spine_bytes;
  j["spine_spread"] = spread(r.spine_bytes) == std::numeric_limits<double>::infinity()
                          ? Json(nullptr)
                          : Json(spread(r.spine_bytes));
  Json c;
  c["data_packets_sent"] = r.counters.data_packets_sent;
  c["delivered_data"] = r.counters.delivered_data;
  c["duplicate_data"] = r.counters.duplicate_data;
  c["ooo_buffered"] = r.counters.ooo_buffered;
  c["nacks"] = r.counters.nacks;
  c["switches"] = r.counters.switches;
  c["probes"] = r.counters.probes;
  c["retransmissions"] = r.counters.retransmissions;
  c["timeouts"] = r.counters.timeouts;
  c["queue_drops"] = r.queue_drops;
  c["injected_drops"] = r.counters.injected_drops;
  c["ecn_marks"] = r.ecn_marks;
  c["unknown_acks"] = r.counters.unknown_acks;
  j["counters"] = c;
  Json links = Json::array();
  for (const LinkStats& s : r.links) {
    Json lj;
    lj["id"] = s.id;
    lj["from"] = s.from;
    lj["to"] = s.to;
    lj["class"] = s.link_class;
    lj["bytes"] = s.bytes;
    lj["utilization"] = s.utilization;
    lj["drops"] = s.drops;
    lj["ecn_marks"] = s.ecn_marks;
    links.push_back(lj);
  }
  j["links"] = links;
  return j;
}

void write_flow_csv(std::ostream& out, const std::vector<FlowRecord>& records) {
  out << "flow_id,size,start_ns,end_ns,baseline_ns,slowdown,switches,retx\n";
  char buf[32];
  for (const FlowRecord& r : records) {
    if (!r.completed) continue;
    std::snprintf(buf, sizeof buf, "%.6f", r.slowdown());
    out << r.id << ',' << r.size_bytes << ',' << r.start.ns << ',' << r.end.ns << ','
        << r.baseline.ns << ',' << buf << ',' << r.switches << ',' << r.retransmissions << '\n';
  }
}

}  // namespace hopper
