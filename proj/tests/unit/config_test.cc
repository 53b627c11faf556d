#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <string>

#include "hopper/config.h"
#include "hopper/errors.h"
#include "hopper/workload.h"

namespace hopper {
namespace {

std::string error_of(const std::string& yaml) {
  try {
    parse_config_string(yaml, "test.yaml");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(Config, MinimalConfigFillsDefaults) {
  const RunConfig cfg = parse_config_string("topology: {preset: acceptance}\nscheme: ecmp\n");
  EXPECT_EQ(cfg.sim.scheme, Scheme::kEcmp);
  EXPECT_EQ(cfg.topology.hosts, 32u);
  EXPECT_EQ(cfg.sim.hopper.th_probe, microseconds(12));
  EXPECT_EQ(cfg.sim.hopper.th_cong, microseconds(20));
  EXPECT_EQ(cfg.sim.hopper.ttl_probe, microseconds(32));
  EXPECT_DOUBLE_EQ(cfg.sim.hopper.delta_rtt, 0.8);
  EXPECT_EQ(cfg.sim.transport.mtu, 1000u);
  EXPECT_EQ(cfg.sim.transport.ooo_threshold, 30u);
  EXPECT_EQ(cfg.workload.mode, WorkloadMode::kPoisson);
  ASSERT_TRUE(cfg.workload.cdf.has_value());
  EXPECT_EQ(cfg.run.seeds, (std::vector<std::uint64_t>{1}));
  const RunConfig empty = parse_config_string("");
  EXPECT_EQ(empty.topology.preset, "paper-symmetric");
}

TEST(Config, ThresholdsScaleWithBaseRtt) {
  const RunConfig cfg = parse_config_string("hopper: {base_rtt: 12us}\n");
  EXPECT_EQ(cfg.sim.hopper.th_probe, microseconds(18));
  EXPECT_EQ(cfg.sim.hopper.th_cong, microseconds(30));
  EXPECT_EQ(cfg.sim.hopper.ttl_probe, microseconds(48));
}

TEST(Config, ThresholdOrderIsEnforced) {
  const std::string e = error_of("hopper: {th_probe: 20us, th_cong: 20us}\n");
  EXPECT_NE(e.find("th_probe"), std::string::npos) << e;
  EXPECT_NE(e.find("th_cong"), std::string::npos) << e;
  EXPECT_FALSE(error_of("hopper: {th_probe: 25us}\n").empty());
}

TEST(Config, UnknownKeySuggestsAndNamesLine) {
  const std::string e = error_of("scheme: hopper\nhopper:\n  ttl_prob: 32us\n");
  EXPECT_NE(e.find("test.yaml:3"), std::string::npos) << e;
  EXPECT_NE(e.find("hopper.ttl_prob"), std::string::npos) << e;
  EXPECT_NE(e.find("did you mean 'ttl_probe'"), std::string::npos) << e;
  EXPECT_NE(error_of("topolgy: {preset: acceptance}\n").find("did you mean 'topology'"),
            std::string::npos);
  EXPECT_NE(error_of("topology: {preset: paper-symetric}\n").find("paper-symmetric"),
            std::string::npos);
}

TEST(Config, SchemaViolations) {
  EXPECT_FALSE(error_of("scheme: conga\n").empty());
  EXPECT_FALSE(error_of("topology: {preset: custom, hosts: 10, leaves: 4, spines: 2}\n").empty());
  EXPECT_FALSE(error_of("topology: {preset: paper-testbed, spines: 4}\n").empty());
  EXPECT_FALSE(error_of("workload: {load: 1.5}\n").empty());
  EXPECT_FALSE(error_of("workload: {cdf: meta}\n").empty());
  EXPECT_FALSE(error_of("hopper: {alpha: 0}\n").empty());
  EXPECT_FALSE(error_of("hopper: {base_rtt: 8}\n").empty());  // no unit
  EXPECT_FALSE(error_of("transport: {mtu: -5}\n").empty());
  EXPECT_FALSE(error_of("run: {bins: [49KB, 2KB]}\n").empty());
  EXPECT_FALSE(error_of("scheme: [a, b]\n").empty());
  EXPECT_FALSE(error_of("topology: {preset: acceptance\n").empty());  // YAML syntax
}

TEST(Config, EveryPresetParses) {
  const auto names = preset_names();
  for (const char* want : {"paper-symmetric", "paper-testbed", "ml-50", "ml-80",
                           "appendix-walkthrough", "two-path"}) {
    EXPECT_NE(std::find(names.begin(), names.end(), want), names.end()) << want;
  }
  for (const std::string& n : names) {
    EXPECT_NO_THROW(parse_config(preset_node(n), n)) << n;
  }
  EXPECT_THROW(preset_node("paper-symetric"), ConfigError);
}

TEST(Config, PaperTestbedPreset) {
  const RunConfig cfg = parse_config(preset_node("paper-testbed"), "p");
  EXPECT_EQ(cfg.workload.mode, WorkloadMode::kCollective);
  EXPECT_EQ(cfg.workload.collective.rounds * cfg.workload.collective.flows_per_round, 204u);
  EXPECT_EQ(cfg.topology.build()->num_spines(), 6u);
}

TEST(Config, SweepKeys) {
  YAML::Node n = preset_node("paper-testbed");
  EXPECT_EQ(resolve_sweep_key(n, "chunk"), "workload.collective.chunk_bytes");
  EXPECT_EQ(resolve_sweep_key(n, "load"), "workload.load");
  set_config_key(n, "chunk", "10MB");
  set_config_key(n, "scheme", "flowbender");
  const RunConfig cfg = parse_config(n, "p");
  EXPECT_EQ(cfg.workload.collective.chunk_bytes, 10'000'000u);
  EXPECT_EQ(cfg.sim.scheme, Scheme::kFlowBender);
  YAML::Node m = preset_node("paper-symmetric");
  EXPECT_EQ(resolve_sweep_key(m, "chunk"), "workload.chunk_bytes");
  try {
    set_config_key(m, "hopper.ttl_prob", "10us");
    FAIL() << "accepted a non-sweepable key";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("hopper.ttl_probe"), std::string::npos);
  }
  EXPECT_THROW(set_config_key(m, "topology.hosts", "64"), ConfigError);
}

// Every sweepable parameter is echoed in the report header.
TEST(Config, EchoCoversSweepableKeys) {
  const RunConfig poisson = parse_config_string("workload: {mode: poisson, cdf: hadoop}\n");
  const RunConfig coll = parse_config(preset_node("paper-testbed"), "p");
  const nlohmann::ordered_json jp = to_json(poisson);
  const nlohmann::ordered_json jc = to_json(coll);
  for (const std::string& key : sweepable_keys()) {
    const nlohmann::ordered_json& j = key.rfind("workload.collective.", 0) == 0 ? jc : jp;
    const nlohmann::ordered_json* node = &j;
    std::string rest = key;
    bool found = true;
    while (found) {
      const auto dot = rest.find('.');
      std::string part = rest.substr(0, dot);
      if (part == "collective") {
        rest = rest.substr(dot + 1);
        continue;
      }
      if (dot == std::string::npos) {
        found = node->contains(part) || node->contains(part + "_ns");
        break;
      }
      if (!node->contains(part)) {
        found = false;
        break;
      }
      node = &(*node)[part];
      rest = rest.substr(dot + 1);
    }
    EXPECT_TRUE(found) << key;
  }
  EXPECT_EQ(jp["workload"]["load_normalization"], "aggregate host-link capacity");
}

TEST(Config, FileLoadingAndCsvCdf) {
  const std::string dir = ::testing::TempDir();
  const std::string cfg_path = dir + "/cfg.yaml";
  {
    std::ofstream f(cfg_path);
    f << "topology: {preset: acceptance}\n"
      << "workload: {mode: poisson, cdf: " << HOPPER_SOURCE_DIR << "/data/cdf/hadoop.csv}\n";
  }
  const RunConfig cfg = parse_config_file(cfg_path);
  EXPECT_EQ(cfg.workload.cdf->points().size(), builtin_cdf("hadoop").points().size());
  EXPECT_THROW(parse_config_file(dir + "/missing.yaml"), ConfigError);
}

TEST(Config, ShippedExamplesParse) {
  const std::string dir = std::string(HOPPER_SOURCE_DIR) + "/configs/";
  const RunConfig sym = parse_config_file(dir + "symmetric-hadoop.yaml");
  EXPECT_EQ(sym.topology.spines, 8u);
  EXPECT_EQ(sym.run.seeds.size(), 3u);
  const RunConfig ml = parse_config_file(dir + "ml-sweep.yaml");
  EXPECT_EQ(ml.run.bins.size(), 3u);
  EXPECT_TRUE(ml.workload.cross_leaf_only);
  const RunConfig tb = parse_config_file(dir + "testbed-collective.yaml");
  EXPECT_EQ(tb.workload.collective.rounds, 10u);
  EXPECT_EQ(tb.sim.transport.window_packets, 14u);
}

TEST(Units, Parsers) {
  EXPECT_EQ(parse_duration("8us"), microseconds(8));
  EXPECT_EQ(parse_duration("1.5ms"), SimTime{1'500'000});
  EXPECT_EQ(parse_duration("250ns"), SimTime{250});
  EXPECT_EQ(parse_duration("2s").ns, 2'000'000'000u);
  EXPECT_THROW(parse_duration("8"), ConfigError);
  EXPECT_THROW(parse_duration("fast"), ConfigError);
  EXPECT_EQ(parse_bandwidth("100Gbps"), 100'000'000'000ull);
  EXPECT_EQ(parse_bandwidth("25G"), 25'000'000'000ull);
  EXPECT_THROW(parse_bandwidth("0Gbps"), ConfigError);
  EXPECT_EQ(parse_bytes("1MB"), 1'000'000u);
  EXPECT_EQ(parse_bytes("49KB"), 49'000u);
  EXPECT_EQ(parse_bytes("1000"), 1000u);
  EXPECT_THROW(parse_bytes("1MiB"), ConfigError);
  EXPECT_EQ(suggest("ttl_prob", {"ttl_probe", "th_probe", "alpha"}), "ttl_probe");
  EXPECT_EQ(suggest("zzzzzz", {"alpha"}), "");
}

}  // namespace
}  // namespace hopper
