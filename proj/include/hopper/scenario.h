#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "hopper/config.h"
#include "hopper/metrics.h"
#include "hopper/simulation.h"
#include "hopper/workload.h"

namespace hopper {

// Flows of a named hand-built scenario:
//  appendix-walkthrough  one Hopper flow on path 1 of a four-spine fabric;
//                        pinned ECMP cross traffic joins that path later.
//  two-path              one Hopper flow starting on the congested path 0 of
//                        a two-spine fabric, with path 1 idle.
// Start times get a small seed-dependent jitter.
std::vector<FlowSpec> scripted_flows(const std::string& script, const Topology& topo,
                                     RngStream& rng);

// The flow a scripted scenario is about (its Hopper flow).
inline constexpr FlowId kScriptedFocusFlow = 0;

struct SeedOutput {
  MetricsReport report;
  std::vector<FlowEvent> flow_events;  // filled when flow logging is on
};

struct RunOptions {
  // Event-trace destination for this seed; null disables tracing.
  std::ostream* trace = nullptr;
  // Shared across seeds of one config when provided; results do not depend
  // on whether it is shared.
  BaselineCache* baselines = nullptr;
};

// One seed of a config: builds the topology, drives the workload to
// completion (or the drain cap) and assembles the report.
SeedOutput run_seed(const RunConfig& cfg, std::uint64_t seed, const RunOptions& opts = {});

// All seeds, at most `jobs` in parallel. Output order follows cfg.run.seeds.
std::vector<SeedOutput> run_seeds(const RunConfig& cfg, std::size_t jobs);

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for one value
  std::size_t n = 0;
};

MeanStd mean_std(const std::vector<double>& values);

// Report with the effective config as header.
Json report_json(const RunConfig& cfg, const MetricsReport& r);
// Mean and stddev across seeds of every per-bin and per-class figure.
Json aggregate_json(const RunConfig& cfg, const std::vector<MetricsReport>& reports);

// Pretty JSON with a trailing newline; identical inputs give identical bytes.
std::string dump_json(const Json& j);

// Writes report-seed<N>.json, flows-seed<N>.csv, events-seed<N>.tsv (flow
// log) and aggregate.json into `dir`.
void write_outputs(const std::filesystem::path& dir, const RunConfig& cfg,
                   const std::vector<SeedOutput>& outputs);

struct SweepRow {
  std::string value;
  std::string scheme;
  std::string bin;
  std::optional<double> avg;
  std::optional<double> p99;
};

// For each value sets `key`, runs every seed and folds the per-seed bin
// statistics into their mean.
std::vector<SweepRow> run_sweep(const YAML::Node& base, const std::string& source,
                                const std::string& key, const std::vector<std::string>& values,
                                std::size_t jobs);

// value,scheme,bin,avg,p99
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace hopper
