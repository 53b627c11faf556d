#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hopper/rng.h"
#include "hopper/sim_time.h"
#include "hopper/topology.h"

namespace hopper {

enum class Scheme : std::uint8_t { kEcmp, kRps, kFlowBender, kHopper };

const char* to_string(Scheme s);
// Throws ConfigError on an unknown name.
Scheme parse_scheme(std::string_view name);

struct HopperParams {
  double alpha = 1.0;  // EWMA weight on the newest sample
  SimTime base_rtt = microseconds(8);
  SimTime th_probe = microseconds(12);  // 1.5 x base
  SimTime th_cong = microseconds(20);   // 2.5 x base
  SimTime ttl_probe = microseconds(32); // 4.0 x base
  double delta_rtt = 0.8;  // switch iff candidate < delta_rtt * avg_rtt
  // Switch delay = factor * (predicted old RTT - probed new RTT).
  double switch_delay_factor = 0.5;
  // Hold new transmissions while a delayed switch is pending, so that the
  // old path drains before the new one is used.
  bool hold_during_switch_delay = true;
  std::uint32_t probe_bytes = 1000;

  // Thresholds as multiples of base_rtt.
  static HopperParams from_multiples(SimTime base_rtt, double th_probe_x, double th_cong_x,
                                     double ttl_probe_x);

  // Throws ConfigError when th_probe >= th_cong, ttl_probe == 0, alpha or
  // delta_rtt outside (0, 1].
  void validate() const;
};

struct ProbeRecord {
  std::uint16_t port = 0;
  PathId path = 0;
  SimTime probed_at;
  std::optional<SimTime> rtt;  // empty until the probe ACK returns
};

struct RttSample {
  std::uint32_t index = 0;  // ACK arrival index within the epoch
  SimTime rtt;
};

// Per-flow control state. The two one-shot flags are re-armed at every
// epoch boundary; an epoch lasts one current RTT estimate.
struct HopperState {
  SimTime avg_rtt;
  bool has_estimate = false;
  SimTime epoch_start;
  bool probe_allowed = true;
  bool switch_allowed = true;
  std::vector<ProbeRecord> probe_records;
  std::vector<RttSample> epoch_samples;
  std::uint32_t inflight_count = 0;
  std::uint32_t next_sample_index = 0;
};

// avg = alpha * new + (1 - alpha) * avg; the first sample seeds the average.
// Appends the sample to the epoch list.
SimTime update_rtt_estimate(HopperState& s, SimTime new_rtt, double alpha);

bool epoch_elapsed(const HopperState& s, SimTime now);

// Re-arms both flags, clears the epoch samples, purges probe records older
// than ttl_probe and starts a new epoch at `now`.
void on_epoch_boundary(HopperState& s, SimTime now, SimTime ttl_probe);

bool probe_record_live(const ProbeRecord& r, SimTime now, SimTime ttl_probe);

// Picks up to two ports uniformly from the profile, excluding the current
// path and any path with a live probe record, records them as pending
// probes and clears probe_allowed. Returns the chosen ports.
std::vector<std::uint16_t> probe_paths(HopperState& s, const PathProfileEntry& profile,
                                       PathId current_path, SimTime now, SimTime ttl_probe,
                                       RngStream& rng);

// Least-squares fit of RTT against ACK index over this epoch's samples,
// extrapolated to the last in-flight packet: intercept + slope * (last
// index + inflight_count). A negative slope yields the last sample; fewer
// than two samples yield avg_rtt.
SimTime estimate_inflight_rtt(const HopperState& s);

// max(0, factor * (predicted_old - probed_new)).
SimTime compute_switch_delay(SimTime predicted_old, SimTime probed_new, double factor = 0.5);

struct SwitchDecision {
  std::uint16_t port = 0;
  PathId path = 0;
  SimTime probed_rtt;
  SimTime predicted_old_rtt;
  SimTime delay;
  SimTime effective_at;
};

// Compares the best live probe result with the current average. Commits a
// switch only when best < delta_rtt * avg_rtt. Clears switch_allowed unless
// no probe result is available yet.
std::optional<SwitchDecision> select_and_switch(HopperState& s, const HopperParams& params,
                                                SimTime now);

// Uniform over profiled ports whose path differs from the current one.
std::optional<std::uint16_t> flowbender_on_congestion(const PathProfileEntry& profile,
                                                      PathId current_path, RngStream& rng);

// Uniform over all profiled ports.
std::uint16_t rps_assign(const PathProfileEntry& profile, RngStream& rng);

// Hopper control loop for one flow: congestion detection, probing and
// delay-compensated switching, applied to every RTT sample of the current
// path.
class HopperController {
 public:
  HopperController(const HopperParams& params, const PathProfileEntry& profile,
                   std::uint16_t port, PathId path);

  struct Actions {
    bool crossed_probe = false;  // probe gate fired on this sample
    bool crossed_cong = false;   // switch gate fired on this sample
    std::vector<std::uint16_t> probes;
    std::optional<SwitchDecision> decision;
  };

  Actions on_rtt_sample(SimTime now, SimTime rtt, std::uint32_t inflight, RngStream& rng);
  void on_probe_result(std::uint16_t port, SimTime rtt);
  // The flow now transmits on `port`; the average restarts from the RTT
  // the path was probed at.
  void on_migrated(std::uint16_t port, PathId path, SimTime probed_rtt, SimTime now);

  std::uint16_t port() const { return port_; }
  PathId path() const { return path_; }
  const HopperState& state() const { return state_; }
  const HopperParams& params() const { return params_; }

 private:
  HopperParams params_;
  const PathProfileEntry* profile_;
  std::uint16_t port_;
  PathId path_;
  HopperState state_;
};

// FlowBender with RTT as the congestion signal: same detector and epoch
// clock as Hopper, but an immediate blind reroute with no probing.
class FlowBenderController {
 public:
  FlowBenderController(const HopperParams& params, const PathProfileEntry& profile,
                       std::uint16_t port, PathId path);

  std::optional<std::uint16_t> on_rtt_sample(SimTime now, SimTime rtt, RngStream& rng);
  void on_migrated(std::uint16_t port, PathId path);

  std::uint16_t port() const { return port_; }
  PathId path() const { return path_; }
  const HopperState& state() const { return state_; }

 private:
  HopperParams params_;
  const PathProfileEntry* profile_;
  std::uint16_t port_;
  PathId path_;
  HopperState state_;
};

}  // namespace hopper
