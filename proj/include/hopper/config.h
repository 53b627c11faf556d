#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>
#include <yaml-cpp/yaml.h>

#include "hopper/simulation.h"
#include "hopper/topology.h"
#include "hopper/workload.h"

namespace hopper {

struct TopologyConfig {
  // paper-symmetric, paper-testbed, acceptance, or custom (leaf-spine with
  // explicit dimensions).
  std::string preset = "paper-symmetric";
  std::size_t hosts = 128;
  std::size_t leaves = 8;
  std::size_t spines = 8;
  LinkTemplate host_link;
  LinkTemplate fabric_link;

  std::shared_ptr<const Topology> build() const;
};

struct RunSettings {
  std::vector<std::uint64_t> seeds{1};
  // Simulated time allowed after the last arrival for flows to finish.
  SimTime drain = milliseconds(50);
  std::vector<std::uint64_t> bins;  // empty: chosen from the workload
  std::string output_dir;
  bool trace = false;
  bool flow_log = false;
  bool flow_csv = true;
};

struct RunConfig {
  std::string name = "run";
  std::string source;  // file name or preset the config came from
  TopologyConfig topology;
  WorkloadSpec workload;
  std::string cdf_source = "hadoop";  // preset name or csv path
  SimulationConfig sim;
  RunSettings run;

  std::vector<std::uint64_t> bin_edges() const;
};

// Strict schema: unknown keys are rejected (with the closest valid key as a
// suggestion), every error carries the key path and line, and every
// parameter has a default.
RunConfig parse_config(const YAML::Node& root, const std::string& source);
RunConfig parse_config_string(const std::string& text, const std::string& source = "<string>");
RunConfig parse_config_file(const std::string& path);

YAML::Node load_config_node(const std::string& path);
YAML::Node preset_node(std::string_view name);
std::vector<std::string> preset_names();

// Sets a dotted key (e.g. "workload.load") to a scalar value. Only keys
// listed by sweepable_keys() are accepted; short aliases "load", "chunk"
// and "delay_factor" are resolved.
std::string resolve_sweep_key(const YAML::Node& root, std::string_view key);
void set_config_key(YAML::Node& root, std::string_view key, const std::string& value);
std::vector<std::string> sweepable_keys();

// Effective parameters, defaults included.
nlohmann::ordered_json to_json(const RunConfig& cfg);

// Closest candidate within a small edit distance, or empty.
std::string suggest(std::string_view key, const std::vector<std::string>& candidates);

SimTime parse_duration(const std::string& text);
std::uint64_t parse_bandwidth(const std::string& text);
std::uint64_t parse_bytes(const std::string& text);

}  // namespace hopper
