#include "hopper/loadbalancer.h"

#include <algorithm>
#include <cmath>

#include "hopper/errors.h"

namespace hopper {

const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::kEcmp:
      return "ecmp";
    case Scheme::kRps:
      return "rps";
    case Scheme::kFlowBender:
      return "flowbender";
    case Scheme::kHopper:
      return "hopper";
  }
  return "unknown";
}

Scheme parse_scheme(std::string_view name) {
  if (name == "ecmp") return Scheme::kEcmp;
  if (name == "rps") return Scheme::kRps;
  if (name == "flowbender") return Scheme::kFlowBender;
  if (name == "hopper") return Scheme::kHopper;
  throw ConfigError("unknown scheme '" + std::string(name) +
                    "' (expected ecmp, rps, flowbender or hopper)");
}

HopperParams HopperParams::from_multiples(SimTime base_rtt, double th_probe_x, double th_cong_x,
                                          double ttl_probe_x) {
  HopperParams p;
  p.base_rtt = base_rtt;
  p.th_probe = scale(base_rtt, th_probe_x);
  p.th_cong = scale(base_rtt, th_cong_x);
  p.ttl_probe = scale(base_rtt, ttl_probe_x);
  return p;
}

void HopperParams::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("hopper.alpha must lie in (0, 1]");
  if (!(delta_rtt > 0.0 && delta_rtt <= 1.0)) {
    throw ConfigError("hopper.delta_rtt must lie in (0, 1]");
  }
  if (th_probe >= th_cong) {
    throw ConfigError("hopper.th_probe (" + std::to_string(th_probe.ns) +
                      "ns) must be below hopper.th_cong (" + std::to_string(th_cong.ns) + "ns)");
  }
  if (ttl_probe.ns == 0) throw ConfigError("hopper.ttl_probe must be positive");
  if (base_rtt.ns == 0) throw ConfigError("hopper.base_rtt must be positive");
  if (switch_delay_factor < 0.0) throw ConfigError("hopper.switch_delay_factor must be >= 0");
  if (probe_bytes == 0) throw ConfigError("hopper.probe_bytes must be positive");
}

SimTime update_rtt_estimate(HopperState& s, SimTime new_rtt, double alpha) {
  if (!s.has_estimate) {
    s.avg_rtt = new_rtt;
    s.has_estimate = true;
  } else {
    const double avg = alpha * static_cast<double>(new_rtt.ns) +
                       (1.0 - alpha) * static_cast<double>(s.avg_rtt.ns);
    s.avg_rtt = SimTime{static_cast<std::uint64_t>(std::llround(avg))};
  }
  s.epoch_samples.push_back(RttSample{s.next_sample_index++, new_rtt});
  return s.avg_rtt;
}

bool epoch_elapsed(const HopperState& s, SimTime now) {
  return s.has_estimate && now >= s.epoch_start && now - s.epoch_start >= s.avg_rtt;
}

bool probe_record_live(const ProbeRecord& r, SimTime now, SimTime ttl_probe) {
  return now < r.probed_at + ttl_probe;
}

void on_epoch_boundary(HopperState& s, SimTime now, SimTime ttl_probe) {
  s.probe_allowed = true;
  s.switch_allowed = true;
  s.epoch_samples.clear();
  s.next_sample_index = 0;
  s.epoch_start = now;
  std::erase_if(s.probe_records,
                [&](const ProbeRecord& r) { return !probe_record_live(r, now, ttl_probe); });
}

std::vector<std::uint16_t> probe_paths(HopperState& s, const PathProfileEntry& profile,
                                       PathId current_path, SimTime now, SimTime ttl_probe,
                                       RngStream& rng) {
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < profile.size(); ++i) {
    if (profile.paths[i] == current_path) continue;
    const bool recent = std::any_of(s.probe_records.begin(), s.probe_records.end(),
                                    [&](const ProbeRecord& r) {
                                      return r.path == profile.paths[i] &&
                                             probe_record_live(r, now, ttl_probe);
                                    });
    if (!recent) eligible.push_back(i);
  }
  std::vector<std::uint16_t> chosen;
  for (int k = 0; k < 2 && !eligible.empty(); ++k) {
    const std::size_t pick = rng.uniform_int(eligible.size());
    const std::size_t i = eligible[pick];
    eligible.erase(eligible.begin() + static_cast<std::ptrdiff_t>(pick));
    chosen.push_back(profile.ports[i]);
    // Replace any expired record for this path.
    std::erase_if(s.probe_records,
                  [&](const ProbeRecord& r) { return r.path == profile.paths[i]; });
    s.probe_records.push_back(ProbeRecord{profile.ports[i], profile.paths[i], now, std::nullopt});
  }
  s.probe_allowed = false;
  return chosen;
}

SimTime estimate_inflight_rtt(const HopperState& s) {
  const auto& v = s.epoch_samples;
  if (v.size() < 2) return s.avg_rtt;
  const double n = static_cast<double>(v.size());
  double mx = 0.0;
  double my = 0.0;
  for (const RttSample& p : v) {
    mx += p.index;
    my += static_cast<double>(p.rtt.ns);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (const RttSample& p : v) {
    const double dx = p.index - mx;
    sxy += dx * (static_cast<double>(p.rtt.ns) - my);
    sxx += dx * dx;
  }
  const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
  if (slope < 0.0) return v.back().rtt;
  const double x = static_cast<double>(v.back().index) + s.inflight_count;
  const double predicted = my + slope * (x - mx);
  return SimTime{static_cast<std::uint64_t>(std::llround(std::max(predicted, 0.0)))};
}

SimTime compute_switch_delay(SimTime predicted_old, SimTime probed_new, double factor) {
  if (probed_new >= predicted_old) return SimTime{};
  return scale(predicted_old - probed_new, factor);
}

std::optional<SwitchDecision> select_and_switch(HopperState& s, const HopperParams& params,
                                                SimTime now) {
  const ProbeRecord* best = nullptr;
  for (const ProbeRecord& r : s.probe_records) {
    if (!r.rtt || !probe_record_live(r, now, params.ttl_probe)) continue;
    if (best == nullptr || *r.rtt < *best->rtt) best = &r;
  }
  // Nothing measured yet: leave the flag armed for a later sample.
  if (best == nullptr) return std::nullopt;
  s.switch_allowed = false;
  const double margin = params.delta_rtt * static_cast<double>(s.avg_rtt.ns);
  if (!(static_cast<double>(best->rtt->ns) < margin)) return std::nullopt;
  SwitchDecision d;
  d.port = best->port;
  d.path = best->path;
  d.probed_rtt = *best->rtt;
  d.predicted_old_rtt = estimate_inflight_rtt(s);
  d.delay = compute_switch_delay(d.predicted_old_rtt, d.probed_rtt, params.switch_delay_factor);
  d.effective_at = now + d.delay;
  return d;
}

std::optional<std::uint16_t> flowbender_on_congestion(const PathProfileEntry& profile,
                                                      PathId current_path, RngStream& rng) {
  std::vector<std::uint16_t> others;
  for (std::size_t i = 0; i < profile.size(); ++i) {
    if (profile.paths[i] != current_path) others.push_back(profile.ports[i]);
  }
  if (others.empty()) return std::nullopt;
  return others[rng.uniform_int(others.size())];
}

std::uint16_t rps_assign(const PathProfileEntry& profile, RngStream& rng) {
  if (profile.size() == 1) return profile.ports[0];
  return profile.ports[rng.uniform_int(profile.size())];
}

HopperController::HopperController(const HopperParams& params, const PathProfileEntry& profile,
                                   std::uint16_t port, PathId path)
    : params_(params), profile_(&profile), port_(port), path_(path) {}

HopperController::Actions HopperController::on_rtt_sample(SimTime now, SimTime rtt,
                                                          std::uint32_t inflight,
                                                          RngStream& rng) {
  Actions a;
  if (!state_.has_estimate) state_.epoch_start = now;
  if (epoch_elapsed(state_, now)) on_epoch_boundary(state_, now, params_.ttl_probe);
  update_rtt_estimate(state_, rtt, params_.alpha);
  state_.inflight_count = inflight;
  if (state_.avg_rtt > params_.th_probe && state_.probe_allowed) {
    a.crossed_probe = true;
    a.probes = probe_paths(state_, *profile_, path_, now, params_.ttl_probe, rng);
  }
  if (state_.avg_rtt > params_.th_cong && state_.switch_allowed) {
    a.decision = select_and_switch(state_, params_, now);
    a.crossed_cong = !state_.switch_allowed;
  }
  return a;
}

void HopperController::on_probe_result(std::uint16_t port, SimTime rtt) {
  for (ProbeRecord& r : state_.probe_records) {
    if (r.port == port && !r.rtt) {
      r.rtt = rtt;
      return;
    }
  }
}

void HopperController::on_migrated(std::uint16_t port, PathId path, SimTime probed_rtt,
                                   SimTime now) {
  port_ = port;
  path_ = path;
  state_.avg_rtt = probed_rtt;
  state_.has_estimate = true;
  state_.epoch_start = now;
  state_.epoch_samples.clear();
  state_.next_sample_index = 0;
  std::erase_if(state_.probe_records, [&](const ProbeRecord& r) { return r.path == path; });
}

FlowBenderController::FlowBenderController(const HopperParams& params,
                                           const PathProfileEntry& profile, std::uint16_t port,
                                           PathId path)
    : params_(params), profile_(&profile), port_(port), path_(path) {}

std::optional<std::uint16_t> FlowBenderController::on_rtt_sample(SimTime now, SimTime rtt,
                                                                 RngStream& rng) {
  if (!state_.has_estimate) state_.epoch_start = now;
  if (epoch_elapsed(state_, now)) on_epoch_boundary(state_, now, params_.ttl_probe);
  update_rtt_estimate(state_, rtt, params_.alpha);
  if (state_.avg_rtt > params_.th_cong && state_.switch_allowed) {
    state_.switch_allowed = false;
    return flowbender_on_congestion(*profile_, path_, rng);
  }
  return std::nullopt;
}

void FlowBenderController::on_migrated(std::uint16_t port, PathId path) {
  port_ = port;
  path_ = path;
}

}  // namespace hopper
