#include "hopper/scenario.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "hopper/errors.h"

namespace hopper {

namespace {

std::uint16_t port_for_path(const Topology& topo, HostId src, HostId dst, PathId path) {
  const PathProfileEntry e = profile_source_ports(topo, src, dst, topo.num_spines());
  const auto idx = e.index_of_path(path);
  if (!idx) throw ConfigError("no steering port reaches path " + std::to_string(path));
  return e.ports[*idx];
}

SimTime jitter(RngStream& rng, std::uint64_t max_ns) { return SimTime{rng.uniform_int(max_ns)}; }

FlowSpec pinned(HostId src, HostId dst, std::uint64_t bytes, SimTime start, std::uint16_t port,
                std::optional<Scheme> scheme) {
  FlowSpec f;
  f.src = src;
  f.dst = dst;
  f.size_bytes = bytes;
  f.start = start;
  f.src_port = port;
  f.scheme = scheme;
  return f;
}

std::vector<FlowSpec> appendix_walkthrough(const Topology& topo, RngStream& rng) {
  if (topo.num_spines() < 4 || topo.num_leaves() < 2 || topo.num_hosts() / topo.num_leaves() < 4) {
    throw ConfigError("appendix-walkthrough needs 2 leaves of 4 hosts and 4 spines");
  }
  const HostId per_leaf = static_cast<HostId>(topo.num_hosts() / topo.num_leaves());
  const PathId current = 1;
  std::vector<FlowSpec> flows;
  flows.push_back(pinned(0, per_leaf, 2'000'000, SimTime{}, port_for_path(topo, 0, per_leaf, current),
                         std::nullopt));
  // Cross traffic from the other three hosts of the rack lands on the same
  // spine once the Hopper flow has reached steady state.
  for (HostId h = 1; h < 4; ++h) {
    const SimTime start = microseconds(20) + jitter(rng, 1000);
    flows.push_back(pinned(h, per_leaf + h, 1'000'000, start,
                           port_for_path(topo, h, per_leaf + h, current), Scheme::kEcmp));
  }
  return flows;
}

bool acks_on_path(const Topology& topo, HostId src, HostId dst, std::uint16_t port, PathId path) {
  const FiveTuple back{host_address(dst), host_address(src), kRoceDstPort, port, kUdpProtocol};
  return ecmp_hash(back) % topo.num_spines() == path;
}

// Steering port whose data route and ACK route both cross `path`.
std::optional<std::uint16_t> symmetric_port(const Topology& topo, HostId src, HostId dst,
                                            PathId path) {
  for (std::uint32_t p = kProfilePortBase; p <= 0xffff; ++p) {
    const auto port = static_cast<std::uint16_t>(p);
    if (topo.route(src, dst, port) == path && acks_on_path(topo, src, dst, port, path)) return port;
  }
  return std::nullopt;
}

std::vector<FlowSpec> two_path(const Topology& topo, RngStream& rng) {
  if (topo.num_spines() != 2 || topo.num_leaves() < 2 || topo.num_hosts() / topo.num_leaves() < 3) {
    throw ConfigError("two-path needs 2 leaves of at least 3 hosts and exactly 2 spines");
  }
  const HostId per_leaf = static_cast<HostId>(topo.num_hosts() / topo.num_leaves());
  // The Hopper flow needs a receiver whose profiled path-1 port also keeps
  // the ACKs on path 1, so that the idle path probes at the base RTT.
  std::optional<HostId> dst;
  std::optional<std::uint16_t> port;
  for (HostId d = per_leaf; d < 2 * per_leaf && !dst; ++d) {
    const PathProfileEntry e = profile_source_ports(topo, 0, d, 2);
    const auto idle = e.index_of_path(1);
    const auto sym = symmetric_port(topo, 0, d, 0);
    if (idle && sym && acks_on_path(topo, 0, d, e.ports[*idle], 1)) {
      dst = d;
      port = sym;
    }
  }
  if (!dst) throw ConfigError("two-path: no receiver keeps ACKs on the data path");
  std::vector<HostId> others;
  for (HostId d = per_leaf; d < 2 * per_leaf; ++d) {
    if (d != *dst) others.push_back(d);
  }
  std::vector<FlowSpec> flows;
  flows.push_back(pinned(0, *dst, 1'000'000, microseconds(30) + jitter(rng, 2000), *port,
                         std::nullopt));
  // Path 0 is loaded in both directions, so the Hopper flow's data and its
  // ACKs each queue for about half of the RTT inflation.
  for (HostId h = 1; h < 3; ++h) {
    const HostId peer = others[h - 1];
    flows.push_back(pinned(h, peer, 4'000'000, jitter(rng, 2000), port_for_path(topo, h, peer, 0),
                           Scheme::kEcmp));
    flows.push_back(pinned(peer, h, 4'000'000, jitter(rng, 2000), port_for_path(topo, peer, h, 0),
                           Scheme::kEcmp));
  }
  return flows;
}

}  // namespace

std::vector<FlowSpec> scripted_flows(const std::string& script, const Topology& topo,
                                     RngStream& rng) {
  if (script == "appendix-walkthrough") return appendix_walkthrough(topo, rng);
  if (script == "two-path") return two_path(topo, rng);
  throw ConfigError("unknown script '" + script + "'");
}

SeedOutput run_seed(const RunConfig& cfg, std::uint64_t seed, const RunOptions& opts) {
  const std::shared_ptr<const Topology> topo = cfg.topology.build();
  Simulation sim(topo, cfg.sim, seed);
  if (opts.trace) sim.set_trace(opts.trace);
  RngRegistry rngs(seed);
  RngStream workload_rng = rngs.fork("workload");
  const WorkloadSpec& w = cfg.workload;

  std::optional<std::uint32_t> rounds_done;
  std::optional<SimTime> collective_end;
  switch (w.mode) {
    case WorkloadMode::kPoisson: {
      for (const FlowSpec& f : generate_poisson_arrivals(w, *topo, workload_rng)) sim.add_flow(f);
      sim.run_until_complete(w.duration + cfg.run.drain);
      break;
    }
    case WorkloadMode::kScripted: {
      for (const FlowSpec& f : scripted_flows(w.script, *topo, workload_rng)) sim.add_flow(f);
      sim.run_until_complete(cfg.run.drain);
      break;
    }
    case WorkloadMode::kCollective: {
      const CollectiveSchedule sched = generate_collective_rounds(w, *topo);
      std::size_t round = 0;
      std::size_t remaining = sched.rounds[0].size();
      rounds_done = 0;
      auto launch = [&](std::size_t r) {
        for (FlowSpec f : sched.rounds[r]) {
          f.start = sim.now();
          sim.add_flow(f);
        }
      };
      // Barrier: the next round starts when the last flow of this one ends.
      sim.on_flow_complete([&](const FlowResult&) {
        if (--remaining > 0) return;
        ++*rounds_done;
        if (++round < sched.rounds.size()) {
          remaining = sched.rounds[round].size();
          launch(round);
        } else {
          collective_end = sim.now();
        }
      });
      launch(0);
      sim.run_until_complete(cfg.run.drain);
      sim.on_flow_complete(nullptr);
      break;
    }
  }

  std::optional<BaselineCache> own;
  BaselineCache* baselines = opts.baselines;
  if (!baselines) baselines = &own.emplace(topo, cfg.sim);
  SeedOutput out;
  out.report = build_report(sim, *baselines, cfg.bin_edges(), seed);
  out.report.rounds = rounds_done;
  out.report.collective_time = collective_end;
  if (cfg.sim.record_flow_events) out.flow_events = sim.flow_events();
  return out;
}

std::vector<SeedOutput> run_seeds(const RunConfig& cfg, std::size_t jobs) {
  const std::vector<std::uint64_t>& seeds = cfg.run.seeds;
  std::vector<std::optional<SeedOutput>> slots(seeds.size());
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(1, seeds.size()));
  std::mutex mu;
  std::size_t next = 0;
  std::exception_ptr failure;
  auto worker = [&] {
    // Each worker keeps its own baseline memo; entries are pure functions of
    // the config, so sharing pattern does not affect results.
    const std::shared_ptr<const Topology> topo = cfg.topology.build();
    BaselineCache baselines(topo, cfg.sim);
    for (;;) {
      std::size_t i;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next >= seeds.size() || failure) return;
        i = next++;
      }
      try {
        std::ofstream trace_file;
        RunOptions opts;
        opts.baselines = &baselines;
        if (cfg.run.trace && !cfg.run.output_dir.empty()) {
          std::filesystem::create_directories(cfg.run.output_dir);
          trace_file.open(std::filesystem::path(cfg.run.output_dir) /
                          ("trace-seed" + std::to_string(seeds[i]) + ".tsv"));
          opts.trace = &trace_file;
        }
        slots[i] = run_seed(cfg, seeds[i], opts);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  std::vector<SeedOutput> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd m;
  m.n = values.size();
  if (values.empty()) return m;
  double sum = 0.0;
  for (double v : values) sum += v;
  m.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - m.mean) * (v - m.mean);
    m.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return m;
}

namespace {

Json ms_json(const std::vector<double>& values) {
  if (values.empty()) return Json(nullptr);
  const MeanStd m = mean_std(values);
  Json j;
  j["mean"] = m.mean;
  j["stddev"] = m.stddev;
  j["n"] = m.n;
  return j;
}

}  // namespace

Json report_json(const RunConfig& cfg, const MetricsReport& r) {
  Json j;
  j["config"] = to_json(cfg);
  j["report"] = to_json(r);
  return j;
}

Json aggregate_json(const RunConfig& cfg, const std::vector<MetricsReport>& reports) {
  Json j;
  j["config"] = to_json(cfg);
  Json seeds = Json::array();
  for (const MetricsReport& r : reports) seeds.push_back(r.seed);
  j["seeds"] = seeds;
  Json bins = Json::array();
  if (!reports.empty()) {
    for (std::size_t b = 0; b < reports.front().bins.size(); ++b) {
      std::vector<double> avg, p95, p99, count;
      for (const MetricsReport& r : reports) {
        const BinStats& s = r.bins[b];
        count.push_back(static_cast<double>(s.count));
        if (s.avg) avg.push_back(*s.avg);
        if (s.p95) p95.push_back(*s.p95);
        if (s.p99) p99.push_back(*s.p99);
      }
      Json bj;
      bj["bin"] = reports.front().bins[b].label;
      bj["count"] = ms_json(count);
      bj["avg"] = ms_json(avg);
      bj["p95"] = ms_json(p95);
      bj["p99"] = ms_json(p99);
      bins.push_back(bj);
    }
  }
  j["slowdown"] = bins;
  std::vector<double> overall;
  for (const MetricsReport& r : reports) {
    if (auto p = r.overall_p99()) overall.push_back(*p);
  }
  j["overall_p99"] = ms_json(overall);
  Json classes = Json::array();
  if (!reports.empty()) {
    for (const ClassUtilization& c : reports.front().classes) {
      std::vector<double> u;
      for (const MetricsReport& r : reports) u.push_back(r.class_utilization(c.link_class));
      Json cj;
      cj["class"] = c.link_class;
      cj["utilization"] = ms_json(u);
      classes.push_back(cj);
    }
  }
  j["link_classes"] = classes;
  std::vector<double> sp, ct, completed, ooo, switches, probes, retx;
  for (const MetricsReport& r : reports) {
    const double s = spread(r.spine_bytes);
    if (std::isfinite(s)) sp.push_back(s);
    if (r.collective_time) ct.push_back(static_cast<double>(r.collective_time->ns));
    completed.push_back(static_cast<double>(r.completed));
    ooo.push_back(static_cast<double>(r.counters.ooo_buffered));
    switches.push_back(static_cast<double>(r.counters.switches));
    probes.push_back(static_cast<double>(r.counters.probes));
    retx.push_back(static_cast<double>(r.counters.retransmissions));
  }
  j["spine_spread"] = ms_json(sp);
  j["collective_time_ns"] = ms_json(ct);
  j["completed"] = ms_json(completed);
  j["ooo_buffered"] = ms_json(ooo);
  j["switches"] = ms_json(switches);
  j["probes"] = ms_json(probes);
  j["retransmissions"] = ms_json(retx);
  return j;
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

void write_outputs(const std::filesystem::path& dir, const RunConfig& cfg,
                   const std::vector<SeedOutput>& outputs) {
  std::filesystem::create_directories(dir);
  auto write = [](const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + p.string());
    f << text;
  };
  std::vector<MetricsReport> reports;
  for (const SeedOutput& o : outputs) {
    const std::string tag = "seed" + std::to_string(o.report.seed);
    write(dir / ("report-" + tag + ".json"), dump_json(report_json(cfg, o.report)));
    if (cfg.run.flow_csv) {
      std::ostringstream csv;
      write_flow_csv(csv, o.report.records);
      write(dir / ("flows-" + tag + ".csv"), csv.str());
    }
    if (cfg.sim.record_flow_events) {
      std::ostringstream ev;
      write_flow_events(ev, o.flow_events);
      write(dir / ("events-" + tag + ".tsv"), ev.str());
    }
    reports.push_back(o.report);
  }
  write(dir / "aggregate.json", dump_json(aggregate_json(cfg, reports)));
}

std::vector<SweepRow> run_sweep(const YAML::Node& base, const std::string& source,
                                const std::string& key, const std::vector<std::string>& values,
                                std::size_t jobs) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  std::vector<SweepRow> rows;
  for (const std::string& v : values) {
    YAML::Node node = YAML::Clone(base);
    set_config_key(node, key, v);
    const RunConfig cfg = parse_config(node, source + " [" + key + "=" + v + "]");
    const std::vector<SeedOutput> outs = run_seeds(cfg, jobs);
    const std::size_t n_bins = outs.front().report.bins.size();
    for (std::size_t b = 0; b < n_bins; ++b) {
      std::vector<double> avg, p99;
      for (const SeedOutput& o : outs) {
        const BinStats& s = o.report.bins[b];
        if (s.avg) avg.push_back(*s.avg);
        if (s.p99) p99.push_back(*s.p99);
      }
      SweepRow row;
      row.value = v;
      row.scheme = to_string(cfg.sim.scheme);
      row.bin = outs.front().report.bins[b].label;
      if (!avg.empty()) row.avg = mean_std(avg).mean;
      if (!p99.empty()) row.p99 = mean_std(p99).mean;
      rows.push_back(row);
    }
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "value,scheme,bin,avg,p99\n";
  char buf[64];
  auto num = [&](const std::optional<double>& v) -> std::string {
    if (!v) return "";
    std::snprintf(buf, sizeof buf, "%.6f", *v);
    return buf;
  };
  for (const SweepRow& r : rows) {
    out << r.value << ',' << r.scheme << ',' << r.bin << ',' << num(r.avg) << ',' << num(r.p99)
        << '\n';
  }
}

}  // namespace hopper
