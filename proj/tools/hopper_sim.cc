// hopper_sim: run, sweep, profile and baseline front end.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "hopper/config.h"
#include "hopper/errors.h"
#include "hopper/metrics.h"
#include "hopper/scenario.h"
#include "hopper/topology.h"

namespace {

using namespace hopper;

struct Common {
  std::string config;
  std::string preset;
  std::string seeds;
  std::string out;
  std::vector<std::string> sets;
  bool trace = false;
  std::size_t jobs = 0;
};

void add_common(CLI::App* cmd, Common& c) {
  auto* cfg = cmd->add_option("--config,-c", c.config, "YAML config file");
  cmd->add_option("--preset,-p", c.preset, "Built-in preset")->excludes(cfg);
  cmd->add_option("--seeds", c.seeds, "Seed count N (seeds 1..N) or a comma list");
  cmd->add_option("--out,-o", c.out, "Output directory (default $HOPPER_OUT_DIR or ./out)");
  cmd->add_option("--set", c.sets, "Override a sweepable key: key=value");
  cmd->add_flag("--trace", c.trace, "Write the per-event trace of every seed");
  cmd->add_option("--jobs,-j", c.jobs, "Parallel seed runs (default: hardware threads)");
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  try {
    if (text.find(',') == std::string::npos) {
      const std::uint64_t n = std::stoull(text);
      for (std::uint64_t s = 1; s <= n; ++s) out.push_back(s);
    } else {
      std::stringstream ss(text);
      for (std::string part; std::getline(ss, part, ',');) out.push_back(std::stoull(part));
    }
  } catch (const std::logic_error&) {
    throw ConfigError("--seeds: expected a count or a comma-separated list, got '" + text + "'");
  }
  if (out.empty()) throw ConfigError("--seeds: at least one seed is required");
  return out;
}

// Base YAML tree from --config or --preset, with --set overrides applied.
YAML::Node base_node(const Common& c, std::string& source) {
  YAML::Node node;
  if (!c.config.empty()) {
    node = load_config_node(c.config);
    source = c.config;
  } else {
    const std::string name = c.preset.empty() ? "paper-symmetric" : c.preset;
    node = preset_node(name);
    source = "preset:" + name;
  }
  for (const std::string& kv : c.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    set_config_key(node, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return node;
}

RunConfig load(const Common& c) {
  std::string source;
  const YAML::Node node = base_node(c, source);
  RunConfig cfg = parse_config(node, source);
  if (!c.seeds.empty()) cfg.run.seeds = parse_seeds(c.seeds);
  if (c.trace) cfg.run.trace = true;
  if (!c.out.empty()) {
    cfg.run.output_dir = c.out;
  } else if (cfg.run.output_dir.empty()) {
    const char* env = std::getenv("HOPPER_OUT_DIR");
    cfg.run.output_dir = env && *env ? env : "out";
  }
  return cfg;
}

std::size_t jobs_of(const Common& c) {
  if (c.jobs > 0) return c.jobs;
  return std::max(1u, std::thread::hardware_concurrency());
}

int cmd_run(const Common& c) {
  const RunConfig cfg = load(c);
  const std::vector<SeedOutput> outs = run_seeds(cfg, jobs_of(c));
  write_outputs(cfg.run.output_dir, cfg, outs);
  for (const SeedOutput& o : outs) {
    const MetricsReport& r = o.report;
    std::cout << "seed " << r.seed << ": " << r.completed << "/" << r.flows << " flows, end "
              << r.end.ns << " ns, digest " << hex64(r.trace_digest);
    if (auto p = r.overall_p99()) std::cout << ", p99 slowdown " << *p;
    if (r.collective_time) std::cout << ", collective " << r.collective_time->ns << " ns";
    std::cout << "\n";
  }
  std::cout << "wrote " << outs.size() << " reports to " << cfg.run.output_dir << "\n";
  return 0;
}

int cmd_sweep(const Common& c, const std::string& key, const std::vector<std::string>& values) {
  std::string source;
  YAML::Node node = base_node(c, source);
  if (!c.seeds.empty()) {
    const auto seeds = parse_seeds(c.seeds);
    YAML::Node s(YAML::NodeType::Sequence);
    for (auto v : seeds) s.push_back(v);
    node["run"]["seeds"] = s;
  }
  const std::vector<SweepRow> rows = run_sweep(node, source, key, values, jobs_of(c));
  std::string dir = c.out;
  if (dir.empty()) {
    const char* env = std::getenv("HOPPER_OUT_DIR");
    dir = env && *env ? env : "out";
  }
  std::filesystem::create_directories(dir);
  const std::filesystem::path path = std::filesystem::path(dir) / "sweep.csv";
  std::ofstream f(path, std::ios::binary);
  write_sweep_csv(f, rows);
  write_sweep_csv(std::cout, rows);
  std::cerr << "wrote " << path.string() << "\n";
  return 0;
}

int cmd_profile(const Common& c, long src, long dst) {
  const RunConfig cfg = load(c);
  const auto topo = cfg.topology.build();
  std::cout << "src,dst,path,port,unloaded_rtt_ns\n";
  const auto n = static_cast<long>(topo->num_hosts());
  for (long s = 0; s < n; ++s) {
    if (src >= 0 && s != src) continue;
    for (long d = 0; d < n; ++d) {
      if (d == s || (dst >= 0 && d != dst)) continue;
      const auto hs = static_cast<HostId>(s), hd = static_cast<HostId>(d);
      const std::size_t k = topo->same_leaf(hs, hd) ? 1 : topo->num_spines();
      const PathProfileEntry e = profile_source_ports(*topo, hs, hd, k);
      for (std::size_t i = 0; i < e.size(); ++i) {
        std::cout << s << ',' << d << ',' << e.paths[i] << ',' << e.ports[i] << ','
                  << topo->unloaded_rtt(hs, hd, e.ports[i], cfg.sim.transport.mtu,
                                        cfg.sim.transport.ack_bytes)
                         .ns
                  << '\n';
      }
    }
  }
  return 0;
}

int cmd_baseline(const Common& c, const std::vector<std::string>& sizes) {
  const RunConfig cfg = load(c);
  const auto topo = cfg.topology.build();
  BaselineCache cache(topo, cfg.sim);
  std::vector<std::uint64_t> list;
  for (const std::string& s : sizes) list.push_back(parse_bytes(s));
  if (list.empty()) {
    if (cfg.workload.cdf) {
      for (const CdfPoint& p : cfg.workload.cdf->points()) list.push_back(p.size_bytes);
    } else {
      list = {1000, 10'000, 100'000, 1'000'000, 10'000'000};
    }
  }
  const HostId per_leaf = static_cast<HostId>(topo->num_hosts() / topo->num_leaves());
  std::cout << "size_bytes,pair,baseline_ns\n";
  for (std::uint64_t size : list) {
    if (per_leaf > 1) std::cout << size << ",same-leaf," << cache.get(size, 0, 1).ns << '\n';
    if (topo->num_leaves() > 1) {
      std::cout << size << ",cross-leaf," << cache.get(size, 0, per_leaf).ns << '\n';
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Packet-level leaf-spine simulator with Hopper, ECMP, RPS and FlowBender"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "hopper_sim 1.0");

  Common run_opts;
  auto* run = app.add_subcommand("run", "Run one config over its seeds and write reports");
  add_common(run, run_opts);

  Common sweep_opts;
  std::string key;
  std::vector<std::string> values;
  auto* sweep = app.add_subcommand("sweep", "Run a config over several values of one key");
  add_common(sweep, sweep_opts);
  sweep->add_option("--key,-k", key, "Sweepable key (e.g. scheme, load, chunk)")->required();
  sweep->add_option("--values,-v", values, "Values, comma separated")
      ->required()
      ->delimiter(',');

  Common profile_opts;
  long src = -1, dst = -1;
  auto* profile = app.add_subcommand("profile", "Print the steering-port profile of a topology");
  add_common(profile, profile_opts);
  profile->add_option("--src", src, "Only this source host");
  profile->add_option("--dst", dst, "Only this destination host");

  Common baseline_opts;
  std::vector<std::string> sizes;
  auto* baseline = app.add_subcommand("baseline", "Print unloaded-fabric FCTs per flow size");
  add_common(baseline, baseline_opts);
  baseline->add_option("--sizes", sizes, "Flow sizes (default: the CDF's sizes)")->delimiter(',');

  auto* presets = app.add_subcommand("presets", "List built-in presets");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_opts);
    if (*sweep) return cmd_sweep(sweep_opts, key, values);
    if (*profile) return cmd_profile(profile_opts, src, dst);
    if (*baseline) return cmd_baseline(baseline_opts, sizes);
    if (*presets) {
      for (const std::string& p : preset_names()) std::cout << p << "\n";
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const SimulationError& e) {
    std::cerr << "simulation invariant violated: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
