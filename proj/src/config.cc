#include "hopper/config.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hopper/errors.h"
#include "hopper/metrics.h"

namespace hopper {

namespace {

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

// Splits "12.5us" into 12.5 and "us".
bool split_number(const std::string& text, double& value, std::string& unit) {
  std::size_t used = 0;
  try {
    value = std::stod(text, &used);
  } catch (const std::logic_error&) {
    return false;
  }
  unit = text.substr(used);
  unit.erase(0, unit.find_first_not_of(' '));
  return true;
}

std::uint64_t to_u64(double v, const std::string& text) {
  if (!(v >= 0.0) || v > 1.8e19) throw ConfigError("value out of range: " + text);
  return static_cast<std::uint64_t>(std::llround(v));
}

// Typed, strictly checked view of one mapping in the config tree.
class Block {
 public:
  Block(YAML::Node node, std::string path, const std::string& source)
      : node_(std::move(node)), path_(std::move(path)), source_(source) {
    if (node_.IsDefined() && !node_.IsMap()) fail_here("expected a mapping");
  }

  void allow(const std::vector<std::string>& keys) const {
    if (!node_.IsMap()) return;
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      const std::string key = it->first.as<std::string>();
      if (std::find(keys.begin(), keys.end(), key) != keys.end()) continue;
      std::string msg = "unknown key";
      const std::string hint = suggest(key, keys);
      if (!hint.empty()) msg += " (did you mean '" + hint + "'?)";
      throw ConfigError(where(it->first) + qualified(key) + ": " + msg);
    }
  }

  bool has(const std::string& key) const { return node_.IsMap() && node_[key]; }

  Block child(const std::string& key) const {
    const YAML::Node n = has(key) ? node_[key] : YAML::Node(YAML::NodeType::Undefined);
    return Block(n, qualified(key), source_);
  }

  std::string str(const std::string& key, const std::string& def) const {
    if (!has(key)) return def;
    const YAML::Node n = node_[key];
    if (!n.IsScalar()) fail(key, "expected a scalar");
    return n.as<std::string>();
  }

  double num(const std::string& key, double def) const {
    if (!has(key)) return def;
    const YAML::Node n = node_[key];
    try {
      return n.as<double>();
    } catch (const YAML::Exception&) {
      fail(key, "expected a number, got '" + scalar(n) + "'");
    }
  }

  std::uint64_t uint(const std::string& key, std::uint64_t def) const {
    if (!has(key)) return def;
    const YAML::Node n = node_[key];
    try {
      const std::string s = n.as<std::string>();
      if (s.empty() || s[0] == '-') throw YAML::Exception(n.Mark(), "negative");
      return n.as<std::uint64_t>();
    } catch (const YAML::Exception&) {
      fail(key, "expected a non-negative integer, got '" + scalar(n) + "'");
    }
  }

  bool flag(const std::string& key, bool def) const {
    if (!has(key)) return def;
    try {
      return node_[key].as<bool>();
    } catch (const YAML::Exception&) {
      fail(key, "expected true or false, got '" + scalar(node_[key]) + "'");
    }
  }

  SimTime duration(const std::string& key, SimTime def) const {
    if (!has(key)) return def;
    try {
      return parse_duration(str(key, ""));
    } catch (const ConfigError& e) {
      fail(key, e.what());
    }
  }

  std::uint64_t bandwidth(const std::string& key, std::uint64_t def) const {
    if (!has(key)) return def;
    try {
      return parse_bandwidth(str(key, ""));
    } catch (const ConfigError& e) {
      fail(key, e.what());
    }
  }

  std::uint64_t bytes(const std::string& key, std::uint64_t def) const {
    if (!has(key)) return def;
    try {
      return parse_bytes(str(key, ""));
    } catch (const ConfigError& e) {
      fail(key, e.what());
    }
  }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw ConfigError(where(node_[key]) + qualified(key) + ": " + msg);
  }
  [[noreturn]] void fail_here(const std::string& msg) const {
    throw ConfigError(where(node_) + path_ + ": " + msg);
  }

  const YAML::Node& node() const { return node_; }
  std::string qualified(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  static std::string scalar(const YAML::Node& n) {
    return n.IsScalar() ? n.as<std::string>() : std::string("<non-scalar>");
  }
  std::string where(const YAML::Node& n) const {
    std::string w = source_;
    if (n && n.Mark().line >= 0) w += ":" + std::to_string(n.Mark().line + 1);
    return w + ": ";
  }

  const YAML::Node node_;
  std::string path_;
  const std::string& source_;
};

EcnParams parse_ecn(const Block& b, EcnParams def) {
  b.allow({"kmin", "kmax", "pmax"});
  def.kmin_bytes = b.bytes("kmin", def.kmin_bytes);
  def.kmax_bytes = b.bytes("kmax", def.kmax_bytes);
  def.pmax = b.num("pmax", def.pmax);
  if (def.pmax < 0.0 || def.pmax > 1.0) b.fail("pmax", "must lie in [0, 1]");
  return def;
}

LinkTemplate parse_link(const Block& b, LinkTemplate def) {
  b.allow({"bandwidth", "latency", "queue", "ecn"});
  def.bandwidth_bps = b.bandwidth("bandwidth", def.bandwidth_bps);
  def.latency = b.duration("latency", def.latency);
  def.queue_capacity_bytes = b.bytes("queue", def.queue_capacity_bytes);
  def.ecn = parse_ecn(b.child("ecn"), def.ecn);
  return def;
}

TopologyConfig parse_topology(const Block& b) {
  b.allow({"preset", "hosts", "leaves", "spines", "host_link", "fabric_link"});
  TopologyConfig t;
  t.preset = b.str("preset", t.preset);
  if (t.preset == "paper-symmetric") {
    t.hosts = 128;
    t.leaves = 8;
    t.spines = 8;
  } else if (t.preset == "acceptance") {
    t.hosts = 32;
    t.leaves = 4;
    t.spines = 4;
  } else if (t.preset == "paper-testbed") {
    for (const char* k : {"hosts", "leaves", "spines", "host_link", "fabric_link"}) {
      if (b.has(k)) b.fail(k, "the paper-testbed preset has a fixed shape");
    }
  } else if (t.preset != "custom") {
    const std::vector<std::string> known = {"paper-symmetric", "paper-testbed", "acceptance",
                                            "custom"};
    std::string msg = "unknown topology preset '" + t.preset + "'";
    const std::string hint = suggest(t.preset, known);
    if (!hint.empty()) msg += " (did you mean '" + hint + "'?)";
    b.fail("preset", msg);
  }
  t.hosts = b.uint("hosts", t.hosts);
  t.leaves = b.uint("leaves", t.leaves);
  t.spines = b.uint("spines", t.spines);
  t.host_link = parse_link(b.child("host_link"), t.host_link);
  t.fabric_link = parse_link(b.child("fabric_link"), t.fabric_link);
  if (t.preset == "paper-testbed") {
    t.hosts = 8;
    t.leaves = 2;
    t.spines = 6;
    t.host_link.bandwidth_bps = 25'000'000'000ull;
    t.fabric_link.bandwidth_bps = 10'000'000'000ull;
  }
  if (t.leaves == 0 || t.spines == 0 || t.hosts == 0) {
    b.fail_here("hosts, leaves and spines must be positive");
  }
  if (t.hosts % t.leaves != 0) {
    b.fail("hosts", "host count " + std::to_string(t.hosts) + " is not divisible by " +
                        std::to_string(t.leaves) + " leaves");
  }
  return t;
}

HopperParams parse_hopper(const Block& b) {
  b.allow({"alpha", "base_rtt", "th_probe", "th_cong", "ttl_probe", "delta_rtt",
           "switch_delay_factor", "hold_during_switch_delay", "probe_bytes"});
  HopperParams p;
  p.base_rtt = b.duration("base_rtt", p.base_rtt);
  // Thresholds default to 1.5x, 2.5x and 4x the base RTT.
  const HopperParams derived = HopperParams::from_multiples(p.base_rtt, 1.5, 2.5, 4.0);
  p.alpha = b.num("alpha", p.alpha);
  p.th_probe = b.duration("th_probe", derived.th_probe);
  p.th_cong = b.duration("th_cong", derived.th_cong);
  p.ttl_probe = b.duration("ttl_probe", derived.ttl_probe);
  p.delta_rtt = b.num("delta_rtt", p.delta_rtt);
  p.switch_delay_factor = b.num("switch_delay_factor", p.switch_delay_factor);
  p.hold_during_switch_delay = b.flag("hold_during_switch_delay", p.hold_during_switch_delay);
  p.probe_bytes = static_cast<std::uint32_t>(b.bytes("probe_bytes", p.probe_bytes));
  try {
    p.validate();
  } catch (const ConfigError& e) {
    b.fail_here(e.what());
  }
  return p;
}

DcqcnParams parse_dcqcn(const Block& b) {
  b.allow({"enabled", "g", "rai", "rhai", "rate_timer", "alpha_timer", "fast_recovery_stages",
           "additive_stages", "min_rate", "min_decrease_interval"});
  DcqcnParams d;
  d.enabled = b.flag("enabled", d.enabled);
  d.g = b.num("g", d.g);
  if (!(d.g > 0.0 && d.g < 1.0)) b.fail("g", "must lie in (0, 1)");
  d.rai_bps = b.bandwidth("rai", d.rai_bps);
  d.rhai_bps = b.bandwidth("rhai", d.rhai_bps);
  d.rate_timer = b.duration("rate_timer", d.rate_timer);
  d.alpha_timer = b.duration("alpha_timer", d.alpha_timer);
  if (d.rate_timer.ns == 0) b.fail("rate_timer", "must be positive");
  if (d.alpha_timer.ns == 0) b.fail("alpha_timer", "must be positive");
  d.fast_recovery_stages =
      static_cast<std::uint32_t>(b.uint("fast_recovery_stages", d.fast_recovery_stages));
  d.additive_stages = static_cast<std::uint32_t>(b.uint("additive_stages", d.additive_stages));
  d.min_rate_bps = b.bandwidth("min_rate", d.min_rate_bps);
  d.min_decrease_interval = b.duration("min_decrease_interval", d.min_decrease_interval);
  return d;
}

TransportConfig parse_transport(const Block& b) {
  b.allow({"mtu", "ack_bytes", "ooo_threshold", "window_packets", "rto_factor", "min_rto",
           "drop_probability", "dcqcn"});
  TransportConfig t;
  t.mtu = static_cast<std::uint32_t>(b.bytes("mtu", t.mtu));
  t.ack_bytes = static_cast<std::uint32_t>(b.bytes("ack_bytes", t.ack_bytes));
  if (t.mtu == 0) b.fail("mtu", "must be positive");
  if (t.ack_bytes == 0) b.fail("ack_bytes", "must be positive");
  t.ooo_threshold = static_cast<std::uint32_t>(b.uint("ooo_threshold", t.ooo_threshold));
  t.window_packets = static_cast<std::uint32_t>(b.uint("window_packets", t.window_packets));
  t.rto_factor = b.num("rto_factor", t.rto_factor);
  if (!(t.rto_factor > 0.0)) b.fail("rto_factor", "must be positive");
  t.min_rto = b.duration("min_rto", t.min_rto);
  t.drop_probability = b.num("drop_probability", t.drop_probability);
  if (t.drop_probability < 0.0 || t.drop_probability >= 1.0) {
    b.fail("drop_probability", "must lie in [0, 1)");
  }
  t.dcqcn = parse_dcqcn(b.child("dcqcn"));
  return t;
}

void parse_workload(const Block& b, RunConfig& cfg) {
  b.allow({"preset", "mode", "cdf", "load", "duration", "cross_leaf_only", "chunk_bytes",
           "collective", "script"});
  WorkloadSpec& w = cfg.workload;
  // A workload preset fills mode and cdf; explicit keys still override.
  std::string default_mode = "poisson";
  if (b.has("preset")) {
    const std::string preset = b.str("preset", "");
    const auto names = builtin_cdf_names();
    if (preset == "gpt3-collective") {
      default_mode = "collective";
    } else if (std::find(names.begin(), names.end(), preset) != names.end()) {
      cfg.cdf_source = preset;
    } else {
      b.fail("preset", "unknown workload preset '" + preset +
                           "' (expected alicloud, hadoop, ml-train or gpt3-collective)");
    }
  }
  const std::string mode = b.str("mode", default_mode);
  if (mode == "poisson") {
    w.mode = WorkloadMode::kPoisson;
  } else if (mode == "collective") {
    w.mode = WorkloadMode::kCollective;
  } else if (mode == "scripted") {
    w.mode = WorkloadMode::kScripted;
  } else {
    b.fail("mode", "expected poisson, collective or scripted, got '" + mode + "'");
  }
  cfg.cdf_source = b.str("cdf", cfg.cdf_source);
  w.target_load = b.num("load", w.target_load);
  w.duration = b.duration("duration", w.duration);
  w.cross_leaf_only = b.flag("cross_leaf_only", w.cross_leaf_only);
  w.chunk_bytes = b.bytes("chunk_bytes", w.chunk_bytes);
  w.script = b.str("script", w.script);
  const Block c = b.child("collective");
  c.allow({"rounds", "flows_per_round", "flow_bytes", "chunk_bytes"});
  w.collective.rounds = static_cast<std::uint32_t>(c.uint("rounds", w.collective.rounds));
  w.collective.flows_per_round =
      static_cast<std::uint32_t>(c.uint("flows_per_round", w.collective.flows_per_round));
  w.collective.flow_bytes = c.bytes("flow_bytes", w.collective.flow_bytes);
  w.collective.chunk_bytes = c.bytes("chunk_bytes", w.collective.chunk_bytes);
  if (w.mode == WorkloadMode::kPoisson) {
    try {
      const auto names = builtin_cdf_names();
      if (std::find(names.begin(), names.end(), cfg.cdf_source) != names.end()) {
        w.cdf = builtin_cdf(cfg.cdf_source);
      } else {
        w.cdf = load_cdf_csv(cfg.cdf_source);
      }
    } catch (const ConfigError& e) {
      b.fail("cdf", e.what());
    }
  }
  if (w.mode == WorkloadMode::kScripted) {
    const std::vector<std::string> scripts = {"appendix-walkthrough", "two-path"};
    if (std::find(scripts.begin(), scripts.end(), w.script) == scripts.end()) {
      b.fail("script", "expected appendix-walkthrough or two-path, got '" + w.script + "'");
    }
  }
  try {
    w.validate();
  } catch (const ConfigError& e) {
    b.fail_here(e.what());
  }
}

RunSettings parse_run(const Block& b) {
  b.allow({"seeds", "drain", "bins", "output_dir", "trace", "flow_log", "flow_csv"});
  RunSettings r;
  if (b.has("seeds")) {
    const YAML::Node n = b.node()["seeds"];
    r.seeds.clear();
    if (n.IsSequence()) {
      for (const YAML::Node& s : n) r.seeds.push_back(s.as<std::uint64_t>());
    } else {
      const std::uint64_t count = b.uint("seeds", 1);
      for (std::uint64_t s = 1; s <= count; ++s) r.seeds.push_back(s);
    }
    if (r.seeds.empty()) b.fail("seeds", "at least one seed is required");
  }
  r.drain = b.duration("drain", r.drain);
  if (b.has("bins")) {
    const YAML::Node n = b.node()["bins"];
    if (!n.IsSequence()) b.fail("bins", "expected a list of sizes");
    for (const YAML::Node& e : n) r.bins.push_back(parse_bytes(e.as<std::string>()));
    if (!std::is_sorted(r.bins.begin(), r.bins.end()) ||
        std::adjacent_find(r.bins.begin(), r.bins.end()) != r.bins.end()) {
      b.fail("bins", "edges must strictly increase");
    }
  }
  r.output_dir = b.str("output_dir", r.output_dir);
  r.trace = b.flag("trace", r.trace);
  r.flow_log = b.flag("flow_log", r.flow_log);
  r.flow_csv = b.flag("flow_csv", r.flow_csv);
  return r;
}

const char* kPresets[][2] = {
    {"paper-symmetric",
     "name: paper-symmetric\n"
     "topology: {preset: paper-symmetric}\n"
     "workload: {mode: poisson, cdf: hadoop, load: 0.5, duration: 1ms}\n"
     "scheme: hopper\n"},
    {"paper-testbed",
     "name: paper-testbed\n"
     "topology: {preset: paper-testbed}\n"
     "workload:\n"
     "  mode: collective\n"
     "  collective: {rounds: 51, flows_per_round: 4, flow_bytes: 10MB, chunk_bytes: 1MB}\n"
     "scheme: hopper\n"
     "hopper: {base_rtt: 12us, th_probe: 25us, th_cong: 30us}\n"
     "transport: {window_packets: 14}\n"
     "run: {drain: 10s}\n"},
    {"ml-50",
     "name: ml-50\n"
     "topology: {preset: acceptance}\n"
     "workload: {mode: poisson, cdf: ml-train, load: 0.5, duration: 2ms}\n"
     "scheme: hopper\n"
     "run: {drain: 100ms}\n"},
    {"ml-80",
     "name: ml-80\n"
     "topology: {preset: acceptance}\n"
     "workload: {mode: poisson, cdf: ml-train, load: 0.8, duration: 2ms}\n"
     "scheme: hopper\n"
     "run: {drain: 100ms}\n"},
    {"appendix-walkthrough",
     "name: appendix-walkthrough\n"
     "topology: {preset: custom, hosts: 8, leaves: 2, spines: 4}\n"
     "workload: {mode: scripted, script: appendix-walkthrough}\n"
     "scheme: hopper\n"
     "hopper: {th_probe: 12us, th_cong: 14us}\n"
     "run: {flow_log: true, drain: 5ms}\n"},
    {"two-path",
     "name: two-path\n"
     "topology: {preset: custom, hosts: 8, leaves: 2, spines: 2}\n"
     "workload: {mode: scripted, script: two-path}\n"
     "scheme: hopper\n"
     "run: {drain: 5ms}\n"},
};

}  // namespace

std::string suggest(std::string_view key, const std::vector<std::string>& candidates) {
  std::string best;
  std::size_t best_d = std::max<std::size_t>(2, key.size() / 3) + 1;
  for (const std::string& c : candidates) {
    const std::size_t d = edit_distance(key, c);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

SimTime parse_duration(const std::string& text) {
  double v = 0.0;
  std::string unit;
  if (!split_number(text, v, unit)) throw ConfigError("cannot parse duration '" + text + "'");
  double scale_ns = 0.0;
  if (unit == "ns") {
    scale_ns = 1.0;
  } else if (unit == "us") {
    scale_ns = 1e3;
  } else if (unit == "ms") {
    scale_ns = 1e6;
  } else if (unit == "s") {
    scale_ns = 1e9;
  } else {
    throw ConfigError("duration '" + text + "' needs a unit: ns, us, ms or s");
  }
  return SimTime{to_u64(v * scale_ns, text)};
}

std::uint64_t parse_bandwidth(const std::string& text) {
  double v = 0.0;
  std::string unit;
  if (!split_number(text, v, unit)) throw ConfigError("cannot parse bandwidth '" + text + "'");
  double mult = 0.0;
  if (unit == "bps") {
    mult = 1.0;
  } else if (unit == "Kbps" || unit == "K") {
    mult = 1e3;
  } else if (unit == "Mbps" || unit == "M") {
    mult = 1e6;
  } else if (unit == "Gbps" || unit == "G") {
    mult = 1e9;
  } else {
    throw ConfigError("bandwidth '" + text + "' needs a unit: bps, Kbps, Mbps or Gbps");
  }
  const std::uint64_t bps = to_u64(v * mult, text);
  if (bps == 0) throw ConfigError("bandwidth must be positive");
  return bps;
}

std::uint64_t parse_bytes(const std::string& text) {
  double v = 0.0;
  std::string unit;
  if (!split_number(text, v, unit)) throw ConfigError("cannot parse size '" + text + "'");
  double mult = 0.0;
  if (unit.empty() || unit == "B") {
    mult = 1.0;
  } else if (unit == "KB") {
    mult = 1e3;
  } else if (unit == "MB") {
    mult = 1e6;
  } else if (unit == "GB") {
    mult = 1e9;
  } else {
    throw ConfigError("size '" + text + "' has an unknown unit (B, KB, MB, GB)");
  }
  return to_u64(v * mult, text);
}

std::shared_ptr<const Topology> TopologyConfig::build() const {
  if (preset == "paper-testbed") return std::make_shared<Topology>(build_asymmetric_testbed());
  return std::make_shared<Topology>(build_leaf_spine(hosts, leaves, spines, host_link, fabric_link));
}

std::vector<std::uint64_t> RunConfig::bin_edges() const {
  if (!run.bins.empty()) return run.bins;
  if (workload.mode == WorkloadMode::kPoisson && workload.cdf &&
      workload.cdf->points().front().size_bytes >= 1'000'000) {
    return ml_bin_edges();
  }
  if (workload.mode == WorkloadMode::kCollective) return {};
  return datacenter_bin_edges();
}

RunConfig parse_config(const YAML::Node& root, const std::string& source) {
  RunConfig cfg;
  cfg.source = source;
  const Block top(root, "", cfg.source);
  top.allow({"name", "topology", "workload", "scheme", "hopper", "transport", "run"});
  cfg.name = top.str("name", cfg.name);
  cfg.topology = parse_topology(top.child("topology"));
  parse_workload(top.child("workload"), cfg);
  try {
    cfg.sim.scheme = parse_scheme(top.str("scheme", "hopper"));
  } catch (const ConfigError& e) {
    top.fail("scheme", e.what());
  }
  cfg.sim.hopper = parse_hopper(top.child("hopper"));
  cfg.sim.transport = parse_transport(top.child("transport"));
  cfg.run = parse_run(top.child("run"));
  cfg.sim.record_flow_events = cfg.run.flow_log;
  return cfg;
}

RunConfig parse_config_string(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  return parse_config(root, source);
}

YAML::Node load_config_node(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path);
  try {
    YAML::Node root = YAML::Load(f);
    if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
    return root;
  } catch (const YAML::Exception& e) {
    throw ConfigError(path + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
}

RunConfig parse_config_file(const std::string& path) {
  return parse_config(load_config_node(path), path);
}

YAML::Node preset_node(std::string_view name) {
  for (const auto& p : kPresets) {
    if (name == p[0]) return YAML::Load(p[1]);
  }
  std::string msg = "unknown preset '" + std::string(name) + "'";
  const std::string hint = suggest(name, preset_names());
  if (!hint.empty()) msg += " (did you mean '" + hint + "'?)";
  throw ConfigError(msg);
}

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& p : kPresets) out.emplace_back(p[0]);
  return out;
}

std::vector<std::string> sweepable_keys() {
  return {"scheme",
          "workload.load",
          "workload.duration",
          "workload.cross_leaf_only",
          "workload.chunk_bytes",
          "workload.collective.chunk_bytes",
          "workload.collective.flow_bytes",
          "workload.collective.rounds",
          "workload.cdf",
          "hopper.alpha",
          "hopper.base_rtt",
          "hopper.hold_during_switch_delay",
          "hopper.th_probe",
          "hopper.th_cong",
          "hopper.ttl_probe",
          "hopper.delta_rtt",
          "hopper.switch_delay_factor",
          "hopper.probe_bytes",
          "transport.ooo_threshold",
          "transport.window_packets",
          "transport.dcqcn.enabled",
          "transport.drop_probability",
          "run.drain",
          "run.flow_log",
          "run.trace"};
}

std::string resolve_sweep_key(const YAML::Node& root, std::string_view key) {
  std::string k(key);
  if (k == "load") k = "workload.load";
  if (k == "delay_factor") k = "hopper.switch_delay_factor";
  if (k == "chunk") {
    const bool collective = root["workload"] && root["workload"]["mode"] &&
                            root["workload"]["mode"].as<std::string>() == "collective";
    k = collective ? "workload.collective.chunk_bytes" : "workload.chunk_bytes";
  }
  const auto keys = sweepable_keys();
  if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
    std::string msg = "'" + std::string(key) + "' is not a sweepable key";
    const std::string hint = suggest(k, keys);
    if (!hint.empty()) msg += " (did you mean '" + hint + "'?)";
    throw ConfigError(msg);
  }
  return k;
}

void set_config_key(YAML::Node& root, std::string_view key, const std::string& value) {
  const std::string k = resolve_sweep_key(root, key);
  std::vector<std::string> parts;
  std::stringstream ss(k);
  for (std::string part; std::getline(ss, part, '.');) parts.push_back(part);
  // yaml-cpp nodes are handles; walk by reassigning copies that alias the tree.
  std::vector<YAML::Node> chain{root};
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    YAML::Node next = chain.back()[parts[i]];
    if (!next || next.IsNull()) {
      chain.back()[parts[i]] = YAML::Node(YAML::NodeType::Map);
      next = chain.back()[parts[i]];
    }
    chain.push_back(next);
  }
  chain.back()[parts.back()] = value;
}

nlohmann::ordered_json to_json(const RunConfig& cfg) {
  using J = nlohmann::ordered_json;
  auto link_json = [](const LinkTemplate& l) {
    J j;
    j["bandwidth_bps"] = l.bandwidth_bps;
    j["latency_ns"] = l.latency.ns;
    j["queue_bytes"] = l.queue_capacity_bytes;
    j["ecn"] = {{"kmin_bytes", l.ecn.kmin_bytes},
                {"kmax_bytes", l.ecn.kmax_bytes},
                {"pmax", l.ecn.pmax}};
    return j;
  };
  J j;
  j["name"] = cfg.name;
  j["source"] = cfg.source;
  J t;
  t["preset"] = cfg.topology.preset;
  t["hosts"] = cfg.topology.hosts;
  t["leaves"] = cfg.topology.leaves;
  t["spines"] = cfg.topology.spines;
  if (cfg.topology.preset == "paper-testbed") {
    t["host_link"] = "25Gbps, 1us";
    t["fabric_link"] = "spines 0-3: 10Gbps, spines 4-5: 1Gbps, 1us";
    t["queue_bytes"] = LinkTemplate{}.queue_capacity_bytes;
  } else {
    t["host_link"] = link_json(cfg.topology.host_link);
    t["fabric_link"] = link_json(cfg.topology.fabric_link);
  }
  t["ecmp_hash"] = "crc32(src_addr|dst_addr|src_port|dst_port|proto) mod uplinks";
  j["topology"] = t;
  const WorkloadSpec& w = cfg.workload;
  J wj;
  wj["mode"] = to_string(w.mode);
  if (w.mode == WorkloadMode::kPoisson) {
    wj["cdf"] = cfg.cdf_source;
    wj["cdf_mean_bytes"] = w.cdf->mean_bytes();
    wj["load"] = w.target_load;
    wj["load_normalization"] = "aggregate host-link capacity";
    wj["duration_ns"] = w.duration.ns;
    wj["cross_leaf_only"] = w.cross_leaf_only;
    wj["chunk_bytes"] = w.chunk_bytes;
  } else if (w.mode == WorkloadMode::kCollective) {
    wj["rounds"] = w.collective.rounds;
    wj["flows_per_round"] = w.collective.flows_per_round;
    wj["flow_bytes"] = w.collective.flow_bytes;
    wj["chunk_bytes"] = w.collective.chunk_bytes;
  } else {
    wj["script"] = w.script;
  }
  j["workload"] = wj;
  j["scheme"] = to_string(cfg.sim.scheme);
  const HopperParams& h = cfg.sim.hopper;
  J hj;
  hj["alpha"] = h.alpha;
  hj["base_rtt_ns"] = h.base_rtt.ns;
  hj["th_probe_ns"] = h.th_probe.ns;
  hj["th_cong_ns"] = h.th_cong.ns;
  hj["ttl_probe_ns"] = h.ttl_probe.ns;
  hj["delta_rtt"] = h.delta_rtt;
  hj["switch_delay_factor"] = h.switch_delay_factor;
  hj["hold_during_switch_delay"] = h.hold_during_switch_delay;
  hj["probe_bytes"] = h.probe_bytes;
  j["hopper"] = hj;
  const TransportConfig& tr = cfg.sim.transport;
  J tj;
  tj["mtu"] = tr.mtu;
  tj["ack_bytes"] = tr.ack_bytes;
  tj["ooo_threshold"] = tr.ooo_threshold;
  tj["window_packets"] = tr.window_packets;
  tj["rto_factor"] = tr.rto_factor;
  tj["min_rto_ns"] = tr.min_rto.ns;
  tj["drop_probability"] = tr.drop_probability;
  const DcqcnParams& d = tr.dcqcn;
  tj["dcqcn"] = {{"enabled", d.enabled},
                 {"g", d.g},
                 {"rai_bps", d.rai_bps},
                 {"rhai_bps", d.rhai_bps},
                 {"rate_timer_ns", d.rate_timer.ns},
                 {"alpha_timer_ns", d.alpha_timer.ns},
                 {"fast_recovery_stages", d.fast_recovery_stages},
                 {"additive_stages", d.additive_stages},
                 {"min_rate_bps", d.min_rate_bps},
                 {"min_decrease_interval_ns", d.min_decrease_interval.ns}};
  j["transport"] = tj;
  J rj;
  rj["seeds"] = cfg.run.seeds;
  rj["drain_ns"] = cfg.run.drain.ns;
  rj["bins"] = cfg.bin_edges();
  rj["flow_log"] = cfg.run.flow_log;
  rj["trace"] = cfg.run.trace;
  j["run"] = rj;
  return j;
}

}  // namespace hopper
