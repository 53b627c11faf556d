#include "hopper/workload.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "hopper/errors.h"

namespace hopper {

SizeCdf::SizeCdf(std::string name, std::vector<CdfPoint> points)
    : name_(std::move(name)), points_(std::move(points)) {
  if (points_.empty()) throw ConfigError("cdf '" + name_ + "' has no points");
  double prev_p = 0.0;
  std::uint64_t prev_size = 0;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const CdfPoint& p = points_[i];
    if (p.size_bytes == 0) throw ConfigError("cdf '" + name_ + "': sizes must be positive");
    if (i > 0 && p.size_bytes <= prev_size) {
      throw ConfigError("cdf '" + name_ + "': sizes must strictly increase (row " +
                        std::to_string(i + 1) + ")");
    }
    if (!(p.cum_prob > prev_p) || p.cum_prob > 1.0) {
      throw ConfigError("cdf '" + name_ + "': probabilities must strictly increase within (0, 1] (row " +
                        std::to_string(i + 1) + ")");
    }
    mean_ += static_cast<double>(p.size_bytes) * (p.cum_prob - prev_p);
    prev_p = p.cum_prob;
    prev_size = p.size_bytes;
  }
  if (std::abs(prev_p - 1.0) > 1e-9) {
    throw ConfigError("cdf '" + name_ + "': last cumulative probability must be 1");
  }
  points_.back().cum_prob = 1.0;
}

std::uint64_t SizeCdf::sample(RngStream& rng) const {
  const double u = rng.uniform();
  auto it = std::upper_bound(points_.begin(), points_.end(), u,
                             [](double v, const CdfPoint& p) { return v < p.cum_prob; });
  if (it == points_.end()) return points_.back().size_bytes;
  return it->size_bytes;
}

SizeCdf parse_cdf_csv(std::istream& in, std::string name) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("cdf '" + name + "': empty file");
  std::vector<CdfPoint> points;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw ConfigError("cdf '" + name + "' line " + std::to_string(lineno) +
                        ": expected size_bytes,cum_prob");
    }
    try {
      std::size_t used = 0;
      const std::string a = line.substr(0, comma);
      const std::string b = line.substr(comma + 1);
      CdfPoint p;
      p.size_bytes = std::stoull(a, &used);
      if (used != a.size()) throw std::invalid_argument(a);
      p.cum_prob = std::stod(b, &used);
      if (used != b.size()) throw std::invalid_argument(b);
      points.push_back(p);
    } catch (const std::logic_error&) {
      throw ConfigError("cdf '" + name + "' line " + std::to_string(lineno) +
                        ": cannot parse '" + line + "'");
    }
  }
  return SizeCdf(std::move(name), std::move(points));
}

SizeCdf load_cdf_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open cdf file " + path);
  return parse_cdf_csv(f, path);
}

void write_cdf_csv(std::ostream& out, const SizeCdf& cdf) {
  out << "size_bytes,cum_prob\n";
  for (const CdfPoint& p : cdf.points()) out << p.size_bytes << ',' << p.cum_prob << '\n';
}

namespace {

// Approximate shapes only; see data/cdf for the editable copies.
const std::vector<CdfPoint> kAliCloud = {
    {256, 0.10},     {1000, 0.35},    {2000, 0.50},     {8000, 0.60},
    {32000, 0.70},   {64000, 0.80},   {128000, 0.90},   {512000, 0.96},
    {1000000, 0.98}, {2000000, 0.995}, {4000000, 1.0},
};

const std::vector<CdfPoint> kHadoop = {
    {250, 0.15},      {500, 0.30},      {1000, 0.50},      {2000, 0.65},
    {10000, 0.68},    {49000, 0.72},    {100000, 0.85},    {266000, 0.95},
    {1000000, 0.975}, {5000000, 0.99},  {10000000, 0.995}, {20000000, 1.0},
};

const std::vector<CdfPoint> kMlTrain = {
    {1000000, 0.30},  {2000000, 0.50},  {4000000, 0.70},   {8000000, 0.85},
    {16000000, 0.93}, {32000000, 0.97}, {64000000, 0.99},  {128000000, 1.0},
};

}  // namespace

SizeCdf builtin_cdf(std::string_view name) {
  if (name == "alicloud") return SizeCdf("alicloud", kAliCloud);
  if (name == "hadoop") return SizeCdf("hadoop", kHadoop);
  if (name == "ml-train") return SizeCdf("ml-train", kMlTrain);
  throw ConfigError("unknown cdf preset '" + std::string(name) +
                    "' (expected alicloud, hadoop or ml-train, or a csv path)");
}

std::vector<std::string> builtin_cdf_names() { return {"alicloud", "hadoop", "ml-train"}; }

const char* to_string(WorkloadMode m) {
  switch (m) {
    case WorkloadMode::kPoisson:
      return "poisson";
    case WorkloadMode::kCollective:
      return "collective";
    case WorkloadMode::kScripted:
      return "scripted";
  }
  return "unknown";
}

void WorkloadSpec::validate() const {
  if (mode == WorkloadMode::kScripted) {
    if (script.empty()) throw ConfigError("workload.script is required for scripted mode");
    return;
  }
  if (mode == WorkloadMode::kPoisson) {
    if (!cdf) throw ConfigError("workload.cdf is required for poisson mode");
    if (!(target_load > 0.0 && target_load < 1.0)) {
      throw ConfigError("workload.load must lie in (0, 1), got " + std::to_string(target_load));
    }
    if (duration.ns == 0) throw ConfigError("workload.duration must be positive");
  } else {
    if (collective.rounds == 0 || collective.flows_per_round == 0) {
      throw ConfigError("workload.collective needs at least one round and one flow");
    }
    if (collective.flow_bytes == 0) throw ConfigError("workload.collective.flow_bytes must be positive");
    if (collective.chunk_bytes > collective.flow_bytes) {
      throw ConfigError("workload.collective.chunk_bytes exceeds flow_bytes");
    }
  }
}

double arrival_rate(const WorkloadSpec& spec, const Topology& topo) {
  const double host_bw = static_cast<double>(topo.link(topo.host_uplink(0)).bandwidth_bps);
  return spec.target_load * static_cast<double>(topo.num_hosts()) * host_bw /
         (8.0 * spec.cdf->mean_bytes());
}

std::vector<FlowSpec> generate_poisson_arrivals(const WorkloadSpec& spec, const Topology& topo,
                                                RngStream& rng) {
  if (spec.mode != WorkloadMode::kPoisson) throw ConfigError("workload is not in poisson mode");
  spec.validate();
  const std::size_t n = topo.num_hosts();
  if (n < 2) throw ConfigError("poisson workload needs at least two hosts");
  if (spec.cross_leaf_only && topo.num_leaves() < 2) {
    throw ConfigError("cross_leaf_only needs at least two leaves");
  }
  const double rate_per_ns = arrival_rate(spec, topo) / 1e9;
  std::vector<FlowSpec> flows;
  double t = 0.0;
  for (;;) {
    t += rng.exponential(rate_per_ns);
    if (t >= static_cast<double>(spec.duration.ns)) break;
    FlowSpec f;
    f.id = static_cast<FlowId>(flows.size());
    f.start = SimTime{static_cast<std::uint64_t>(std::llround(t))};
    f.src = static_cast<HostId>(rng.uniform_int(n));
    if (spec.cross_leaf_only) {
      const std::size_t per_leaf = n / topo.num_leaves();
      const std::size_t pick = rng.uniform_int(n - per_leaf);
      const std::size_t leaf_start = topo.leaf_of(f.src) * per_leaf;
      f.dst = static_cast<HostId>(pick < leaf_start ? pick : pick + per_leaf);
    } else {
      const std::size_t pick = rng.uniform_int(n - 1);
      f.dst = static_cast<HostId>(pick < f.src ? pick : pick + 1);
    }
    f.size_bytes = spec.cdf->sample(rng);
    f.chunk_bytes = spec.chunk_bytes;
    flows.push_back(f);
  }
  return flows;
}

std::size_t CollectiveSchedule::total_flows() const {
  std::size_t n = 0;
  for (const auto& r : rounds) n += r.size();
  return n;
}

CollectiveSchedule generate_collective_rounds(const WorkloadSpec& spec, const Topology& topo) {
  if (spec.mode != WorkloadMode::kCollective) {
    throw ConfigError("workload is not in collective mode");
  }
  spec.validate();
  const CollectiveSpec& c = spec.collective;
  const std::size_t half = topo.num_hosts() / 2;
  if (c.flows_per_round > half) {
    throw ConfigError("workload.collective.flows_per_round (" +
                      std::to_string(c.flows_per_round) + ") exceeds half the host count (" +
                      std::to_string(half) + ")");
  }
  CollectiveSchedule s;
  s.rounds.resize(c.rounds);
  FlowId id = 0;
  for (std::uint32_t r = 0; r < c.rounds; ++r) {
    for (std::uint32_t j = 0; j < c.flows_per_round; ++j) {
      FlowSpec f;
      f.id = id++;
      f.src = j;
      f.dst = static_cast<HostId>(j + half);
      f.size_bytes = c.flow_bytes;
      f.chunk_bytes = c.chunk_bytes;
      f.round = r;
      s.rounds[r].push_back(f);
    }
  }
  return s;
}

}  // namespace hopper
