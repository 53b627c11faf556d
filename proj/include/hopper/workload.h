#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hopper/loadbalancer.h"
#include "hopper/rng.h"
#include "hopper/sim_time.h"
#include "hopper/topology.h"
#include "hopper/transport.h"

namespace hopper {

struct CdfPoint {
  std::uint64_t size_bytes = 0;
  double cum_prob = 0.0;
};

// Flow-size distribution given as a step CDF: a draw u in [0, 1) maps to the
// first listed size whose cumulative probability exceeds u.
class SizeCdf {
 public:
  // Throws ConfigError unless sizes and probabilities strictly increase and
  // the last probability is 1.
  SizeCdf(std::string name, std::vector<CdfPoint> points);

  const std::string& name() const { return name_; }
  const std::vector<CdfPoint>& points() const { return points_; }
  double mean_bytes() const { return mean_; }
  std::uint64_t max_bytes() const { return points_.back().size_bytes; }

  std::uint64_t sample(RngStream& rng) const;

 private:
  std::string name_;
  std::vector<CdfPoint> points_;
  double mean_ = 0.0;
};

// Two-column CSV `size_bytes,cum_prob` with a header line.
SizeCdf parse_cdf_csv(std::istream& in, std::string name);
SizeCdf load_cdf_csv(const std::string& path);
void write_cdf_csv(std::ostream& out, const SizeCdf& cdf);

// alicloud, hadoop and ml-train. Throws ConfigError for other names.
SizeCdf builtin_cdf(std::string_view name);
std::vector<std::string> builtin_cdf_names();

// kScripted runs a named hand-built scenario (see scenario.h).
enum class WorkloadMode : std::uint8_t { kPoisson, kCollective, kScripted };

const char* to_string(WorkloadMode m);

struct CollectiveSpec {
  std::uint32_t rounds = 51;
  std::uint32_t flows_per_round = 4;
  std::uint64_t flow_bytes = 10'000'000;
  std::uint64_t chunk_bytes = 1'000'000;
};

struct WorkloadSpec {
  WorkloadMode mode = WorkloadMode::kPoisson;
  std::optional<SizeCdf> cdf;
  double target_load = 0.5;  // fraction of aggregate host-link capacity
  SimTime duration = milliseconds(1);
  bool cross_leaf_only = false;
  std::uint64_t chunk_bytes = 0;  // Poisson flows; 0 disables chunking
  CollectiveSpec collective;
  std::string script;

  // Throws ConfigError on a load outside (0, 1), a missing CDF, empty
  // collective rounds or a chunk larger than the flow.
  void validate() const;
};

struct FlowSpec {
  FlowId id = 0;
  HostId src = 0;
  HostId dst = 0;
  std::uint64_t size_bytes = 0;
  SimTime start;
  std::uint64_t chunk_bytes = 0;
  std::uint32_t round = 0;
  // Scenario overrides: pin the steering port or the policy of one flow.
  std::optional<std::uint16_t> src_port;
  std::optional<Scheme> scheme;
};

// Flows per second: load * n_hosts * host bandwidth / (8 * mean size).
double arrival_rate(const WorkloadSpec& spec, const Topology& topo);

// Poisson arrivals over [0, duration) with uniformly random distinct pairs.
std::vector<FlowSpec> generate_poisson_arrivals(const WorkloadSpec& spec, const Topology& topo,
                                                RngStream& rng);

// Barrier-synchronized rounds. Flow j of a round goes from host j to host
// j + n_hosts / 2, so that on a two-leaf fabric every flow crosses the
// spine tier. Start times are relative to the round start.
struct CollectiveSchedule {
  std::vector<std::vector<FlowSpec>> rounds;
  std::size_t total_flows() const;
};

CollectiveSchedule generate_collective_rounds(const WorkloadSpec& spec, const Topology& topo);

}  // namespace hopper
