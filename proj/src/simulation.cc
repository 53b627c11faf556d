#include "hopper/simulation.h"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "hopper/errors.h"

namespace hopper {

const char* to_string(FlowEventType t) {
  switch (t) {
    case FlowEventType::kStart:
      return "start";
    case FlowEventType::kSend:
      return "send";
    case FlowEventType::kAck:
      return "ack";
    case FlowEventType::kNack:
      return "nack";
    case FlowEventType::kTimeout:
      return "timeout";
    case FlowEventType::kProbeThreshold:
      return "probe_threshold";
    case FlowEventType::kProbeSent:
      return "probe_sent";
    case FlowEventType::kProbeResult:
      return "probe_result";
    case FlowEventType::kCongThreshold:
      return "cong_threshold";
    case FlowEventType::kSwitchScheduled:
      return "switch_scheduled";
    case FlowEventType::kMigrate:
      return "migrate";
    case FlowEventType::kComplete:
      return "complete";
  }
  return "unknown";
}

void write_flow_events(std::ostream& out, const std::vector<FlowEvent>& events) {
  for (const FlowEvent& e : events) {
    out << e.at.ns << '\t' << e.flow << '\t' << to_string(e.type) << '\t' << e.port << '\t'
        << e.seq << '\t' << e.value << '\n';
  }
}

namespace {
std::uint32_t chunk_packets(std::uint64_t chunk_bytes, std::uint32_t mtu) {
  if (chunk_bytes == 0) return 0;
  return static_cast<std::uint32_t>((chunk_bytes + mtu - 1) / mtu);
}
}  // namespace

Simulation::Flow::Flow(const FlowSpec& s, Scheme sc, std::uint32_t mtu, std::uint32_t window,
                       std::uint32_t ooo_threshold, std::uint64_t line_rate,
                       const DcqcnParams& dcqcn)
    : spec(s),
      scheme(sc),
      tx(s.size_bytes, mtu, window, chunk_packets(s.chunk_bytes, mtu)),
      rx(tx.n_packets(), ooo_threshold),
      rate(line_rate, dcqcn) {}

Simulation::Simulation(std::shared_ptr<const Topology> topo, SimulationConfig cfg,
                       std::uint64_t seed)
    : topo_(std::move(topo)),
      cfg_(std::move(cfg)),
      rngs_(seed),
      ecmp_rng_(rngs_.fork("ecmp-port-assignment")),
      probe_rng_(rngs_.fork("probe-selection")),
      flowbender_rng_(rngs_.fork("flowbender-reroute")),
      rps_rng_(rngs_.fork("rps")),
      ecn_rng_(rngs_.fork("ecn")),
      fault_rng_(rngs_.fork("fault")),
      profiles_(topo_) {
  cfg_.hopper.validate();
  const TransportConfig& t = cfg_.transport;
  if (t.mtu == 0 || t.ack_bytes == 0) throw ConfigError("transport.mtu and ack_bytes must be positive");
  if (t.drop_probability < 0.0 || t.drop_probability >= 1.0) {
    throw ConfigError("transport.drop_probability must lie in [0, 1)");
  }
  if (t.window_packets != 0) {
    window_ = t.window_packets;
  } else {
    const double bdp_bytes =
        static_cast<double>(topo_->link(topo_->host_uplink(0)).bandwidth_bps) *
        static_cast<double>(cfg_.hopper.base_rtt.ns) / 8e9;
    window_ = std::max<std::uint32_t>(1, static_cast<std::uint32_t>(bdp_bytes / t.mtu));
  }
  queues_.reserve(topo_->links().size());
  for (const Link& l : topo_->links()) queues_.emplace_back(l);
  nics_.resize(topo_->num_hosts());
}

FlowId Simulation::add_flow(FlowSpec spec) {
  if (spec.start < now()) {
    throw SimulationError("flow start " + std::to_string(spec.start.ns) +
                          "ns is before the clock " + std::to_string(now().ns) + "ns");
  }
  if (spec.src >= topo_->num_hosts() || spec.dst >= topo_->num_hosts() || spec.src == spec.dst) {
    throw ConfigError("flow endpoints " + std::to_string(spec.src) + "->" +
                      std::to_string(spec.dst) + " are invalid");
  }
  const FlowId id = static_cast<FlowId>(flows_.size());
  spec.id = id;
  const Scheme scheme = spec.scheme.value_or(cfg_.scheme);
  const std::uint64_t line = topo_->link(topo_->host_uplink(spec.src)).bandwidth_bps;
  auto f = std::make_unique<Flow>(spec, scheme, cfg_.transport.mtu, window_,
                                  cfg_.transport.ooo_threshold, line, cfg_.transport.dcqcn);
  f->per_path_packets.assign(topo_->path_count(spec.src, spec.dst), 0);
  f->srtt = cfg_.hopper.base_rtt;
  flows_.push_back(std::move(f));
  events_.schedule(spec.start, EventKind::kFlowStart, id);
  return id;
}

void Simulation::run_until(SimTime t_end) {
  try {
    events_.run_until(t_end, [this](const Event& e) { dispatch(e); });
  } catch (const SimulationError& e) {
    throw SimulationError(std::string(e.what()) + "\nlast events:\n" +
                          events_.format_trace_tail());
  }
}

bool Simulation::run_until_complete(SimTime cap) {
  stop_when_complete_ = true;
  if (completed_ < flows_.size()) run_until(cap);
  stop_when_complete_ = false;
  return completed_ == flows_.size();
}

void Simulation::dispatch(const Event& ev) {
  switch (ev.kind) {
    case EventKind::kPacketArrival:
      on_arrival(static_cast<NodeId>(ev.target), static_cast<std::uint32_t>(ev.aux));
      break;
    case EventKind::kLinkDrain:
      nics_[ev.target].wake_pending = false;
      nic_service(static_cast<HostId>(ev.target));
      break;
    case EventKind::kTimer:
      on_timer(static_cast<FlowId>(ev.target), ev.aux);
      break;
    case EventKind::kFlowStart:
      start_flow(static_cast<FlowId>(ev.target));
      break;
    case EventKind::kEpochBoundary:
      throw SimulationError("unexpected epoch-boundary event");
  }
}

void Simulation::log(const Flow& f, FlowEventType type, std::uint16_t port, std::uint32_t seq,
                     std::int64_t value) {
  if (!cfg_.record_flow_events) return;
  flow_log_.push_back(FlowEvent{now(), f.spec.id, type, port, seq, value});
}

std::uint32_t Simulation::alloc_packet() {
  if (!free_packets_.empty()) {
    const std::uint32_t id = free_packets_.back();
    free_packets_.pop_back();
    packets_[id] = Packet{};
    return id;
  }
  packets_.emplace_back();
  return static_cast<std::uint32_t>(packets_.size() - 1);
}

void Simulation::start_flow(FlowId id) {
  Flow& f = *flows_[id];
  f.started = true;
  // Every flow draws an ephemeral port, so all schemes place a given flow
  // on the same initial path.
  const auto drawn = static_cast<std::uint16_t>(kProfilePortBase + ecmp_rng_.uniform_int(16384));
  f.port = f.spec.src_port.value_or(drawn);
  f.path = topo_->route(f.spec.src, f.spec.dst, f.port);
  if (f.scheme != Scheme::kEcmp) f.profile = &profiles_.entry(f.spec.src, f.spec.dst);
  if (f.scheme == Scheme::kHopper) f.hopper.emplace(cfg_.hopper, *f.profile, f.port, f.path);
  if (f.scheme == Scheme::kFlowBender) {
    f.flowbender.emplace(cfg_.hopper, *f.profile, f.port, f.path);
  }
  f.next_send = now();
  log(f, FlowEventType::kStart, f.port, 0, static_cast<std::int64_t>(f.spec.size_bytes));
  activate(f);
  nic_service(f.spec.src);
}

void Simulation::activate(Flow& f) {
  if (f.in_active || f.done || !f.started) return;
  f.in_active = true;
  nics_[f.spec.src].active.push_back(f.spec.id);
}

void Simulation::nic_wake_at(HostId host, SimTime t) {
  Nic& nic = nics_[host];
  if (nic.wake_pending) {
    if (nic.wake_at <= t) return;
    events_.cancel(nic.wake);
  }
  nic.wake = events_.schedule(t, EventKind::kLinkDrain, host);
  nic.wake_at = t;
  nic.wake_pending = true;
}

// The NIC hands one packet to the host link whenever the link is free:
// queued control packets first, then data flows in round-robin order,
// each flow paced at its DCQCN rate.
void Simulation::nic_service(HostId host) {
  Nic& nic = nics_[host];
  const SimTime t = now();
  const LinkId uplink = topo_->host_uplink(host);
  if (queues_[uplink].busy_until() > t) {
    nic_wake_at(host, queues_[uplink].busy_until());
    return;
  }
  if (!nic.control.empty()) {
    const std::uint32_t id = nic.control.front();
    nic.control.pop_front();
    Packet& c = packets_[id];
    if (c.kind == PacketKind::kProbe) {
      c.sent_at = t;
      if (c.seq == 0) flows_[c.flow]->probe_started[c.sack] = t;
    }
    transmit(id, uplink);
    nic_wake_at(host, queues_[uplink].busy_until());
    return;
  }
  SimTime earliest = SimTime::max();
  std::size_t visited = 0;
  while (visited < nic.active.size()) {
    if (nic.rr >= nic.active.size()) nic.rr = 0;
    Flow& f = *flows_[nic.active[nic.rr]];
    if (f.done || f.hold || !f.tx.has_work()) {
      f.in_active = false;
      nic.active.erase(nic.active.begin() + static_cast<std::ptrdiff_t>(nic.rr));
      continue;
    }
    if (f.next_send > t) {
      earliest = std::min(earliest, f.next_send);
      ++nic.rr;
      ++visited;
      continue;
    }
    ++nic.rr;
    send_data(f);
    nic_wake_at(host, queues_[uplink].busy_until());
    return;
  }
  if (earliest != SimTime::max()) nic_wake_at(host, earliest);
}

bool Simulation::send_data(Flow& f) {
  const SimTime t = now();
  const bool was_idle = f.tx.outstanding() == 0;
  const SenderState::Next nx = f.tx.pop_next();
  std::uint16_t port = f.port;
  if (f.scheme == Scheme::kRps && !f.spec.src_port) port = rps_assign(*f.profile, rps_rng_);
  const std::uint32_t id = alloc_packet();
  Packet& p = packets_[id];
  p.flow = f.spec.id;
  p.seq = nx.seq;
  p.size = f.tx.packet_bytes(nx.seq);
  p.src = f.spec.src;
  p.dst = f.spec.dst;
  p.src_port = port;
  p.kind = PacketKind::kData;
  p.retransmission = nx.retransmission;
  p.sent_at = t;
  ++f.per_path_packets[topo_->route(f.spec.src, f.spec.dst, port)];
  ++counters_.data_packets_sent;
  if (nx.retransmission) {
    ++f.retx;
    ++counters_.retransmissions;
  }
  log(f, FlowEventType::kSend, port, nx.seq, nx.retransmission ? 1 : 0);
  const double rate = std::max(1.0, f.rate.rate_bps(t));
  f.next_send = t + serialization_time(p.size, static_cast<std::uint64_t>(rate));
  if (was_idle) {
    f.rto_deadline = t + rto(f);
    arm_rto(f);
  }
  transmit(id, topo_->host_uplink(f.spec.src));
  return true;
}

void Simulation::transmit(std::uint32_t pkt_id, LinkId link) {
  Packet& p = packets_[pkt_id];
  const EnqueueResult r =
      queues_[link].enqueue(p.size, p.kind == PacketKind::kData, now(), ecn_rng_);
  if (!r.enqueued) {
    free_packet(pkt_id);
    return;
  }
  if (r.ecn_marked) p.ecn_ce = true;
  events_.schedule(r.arrival, EventKind::kPacketArrival, topo_->link(link).to, pkt_id);
}

void Simulation::on_arrival(NodeId node, std::uint32_t pkt_id) {
  const Node& n = topo_->nodes()[node];
  if (n.kind == NodeKind::kHost) {
    deliver(n.index, pkt_id);
    return;
  }
  const Packet& p = packets_[pkt_id];
  if (p.kind == PacketKind::kData && cfg_.transport.drop_probability > 0.0 &&
      n.kind == NodeKind::kLeaf && n.index == topo_->leaf_of(p.src) &&
      fault_rng_.bernoulli(cfg_.transport.drop_probability)) {
    ++counters_.injected_drops;
    free_packet(pkt_id);
    return;
  }
  transmit(pkt_id, next_link(*topo_, node, p.dst, p.tuple()));
}

void Simulation::deliver(HostId host, std::uint32_t pkt_id) {
  if (packets_[pkt_id].dst != host) {
    throw SimulationError("packet for host " + std::to_string(packets_[pkt_id].dst) +
                          " delivered to host " + std::to_string(host));
  }
  switch (packets_[pkt_id].kind) {
    case PacketKind::kData:
      on_data(pkt_id);
      break;
    case PacketKind::kAck:
    case PacketKind::kNack:
      on_feedback(pkt_id);
      break;
    case PacketKind::kProbe: {
      const Packet p = packets_[pkt_id];
      free_packet(pkt_id);
      // Only the last fragment is acknowledged, like a chunk completion.
      if (p.seq + 1 == p.cum_ack) reply(p, PacketKind::kProbeAck, 0, p.sack);
      break;
    }
    case PacketKind::kProbeAck:
      on_probe_ack(pkt_id);
      break;
  }
}

void Simulation::reply(const Packet& to, PacketKind kind, std::uint32_t cum, std::uint32_t sack) {
  const std::uint32_t id = alloc_packet();
  Packet& a = packets_[id];
  a.flow = to.flow;
  a.seq = to.seq;
  a.size = cfg_.transport.ack_bytes;
  a.src = to.dst;
  a.dst = to.src;
  a.src_port = to.dst_port;
  a.dst_port = to.src_port;
  a.kind = kind;
  a.ecn_echo = to.ecn_ce;
  a.echo_sent_at = to.sent_at;
  a.cum_ack = cum;
  a.sack = sack;
  send_control(a.src, id);
}

void Simulation::send_control(HostId host, std::uint32_t pkt_id) {
  nics_[host].control.push_back(pkt_id);
  nic_service(host);
}

void Simulation::on_data(std::uint32_t pkt_id) {
  const Packet p = packets_[pkt_id];
  free_packet(pkt_id);
  Flow& f = *flows_[p.flow];
  const ReceiverState::Result r = f.rx.on_data(p.seq);
  if (r.duplicate) {
    ++counters_.duplicate_data;
  } else {
    ++counters_.delivered_data;
  }
  if (r.out_of_order) {
    ++f.ooo;
    ++counters_.ooo_buffered;
  }
  reply(p, r.reply, r.cum_ack, r.sack);
}

void Simulation::on_feedback(std::uint32_t pkt_id) {
  const Packet p = packets_[pkt_id];
  free_packet(pkt_id);
  Flow& f = *flows_[p.flow];
  if (f.done) return;
  const SimTime t = now();
  const SimTime rtt = t - p.echo_sent_at;
  const SenderState::AckResult res = f.tx.on_ack(p.cum_ack, p.sack);
  if (!res.known) {
    ++counters_.unknown_acks;
    return;
  }
  if (p.kind == PacketKind::kNack) {
    ++counters_.nacks;
    f.tx.on_nack(p.cum_ack, p.sack);
    log(f, FlowEventType::kNack, p.dst_port, p.sack, p.cum_ack);
  } else {
    log(f, FlowEventType::kAck, p.dst_port, p.sack, static_cast<std::int64_t>(rtt.ns));
  }
  f.srtt = SimTime{(7 * f.srtt.ns + rtt.ns) / 8};
  if (res.newly_acked > 0) f.rto_deadline = t + rto(f);
  // Echoes for packets of a released QP do not throttle its successor.
  if (p.ecn_echo && (f.scheme == Scheme::kRps || p.dst_port == f.port)) {
    f.rate.on_congestion_echo(t);
  }
  if (f.tx.complete()) {
    finish(f);
    return;
  }
  // Only samples taken on the current path describe it.
  if (p.dst_port == f.port) {
    if (f.hopper) {
      HopperController::Actions a = f.hopper->on_rtt_sample(t, rtt, f.tx.outstanding(), probe_rng_);
      if (a.crossed_probe) {
        log(f, FlowEventType::kProbeThreshold, f.port, 0,
            static_cast<std::int64_t>(f.hopper->state().avg_rtt.ns));
        for (std::uint16_t port : a.probes) send_probe(f, port);
      }
      if (a.crossed_cong) {
        log(f, FlowEventType::kCongThreshold, f.port, 0,
            static_cast<std::int64_t>(f.hopper->state().avg_rtt.ns));
      }
      if (a.decision) request_switch(f, *a.decision);
    } else if (f.flowbender) {
      if (auto port = f.flowbender->on_rtt_sample(t, rtt, flowbender_rng_)) {
        log(f, FlowEventType::kCongThreshold, f.port, 0,
            static_cast<std::int64_t>(f.flowbender->state().avg_rtt.ns));
        SwitchDecision d;
        d.port = *port;
        d.path = topo_->route(f.spec.src, f.spec.dst, *port);
        d.effective_at = t;
        request_switch(f, d);
      }
    }
  }
  if (res.chunk_completed && f.switch_at_chunk) apply_switch(f);
  activate(f);
  nic_service(f.spec.src);
}

void Simulation::on_probe_ack(std::uint32_t pkt_id) {
  const Packet p = packets_[pkt_id];
  free_packet(pkt_id);
  Flow& f = *flows_[p.flow];
  if (f.done || !f.hopper) return;
  auto started = f.probe_started.find(p.sack);
  if (started == f.probe_started.end()) return;
  const SimTime rtt = now() - started->second;
  f.probe_started.erase(started);
  f.hopper->on_probe_result(p.dst_port, rtt);
  log(f, FlowEventType::kProbeResult, p.dst_port, 0, static_cast<std::int64_t>(rtt.ns));
}

// A probe larger than the MTU goes out as back-to-back MTU fragments; its
// RTT runs from the first fragment leaving the NIC to the last one's ACK.
void Simulation::send_probe(Flow& f, std::uint16_t port) {
  const std::uint32_t mtu = cfg_.transport.mtu;
  const std::uint32_t total = cfg_.hopper.probe_bytes;
  const std::uint32_t frags = std::max<std::uint32_t>(1, (total + mtu - 1) / mtu);
  for (std::uint32_t i = 0; i < frags; ++i) {
    const std::uint32_t id = alloc_packet();
    Packet& p = packets_[id];
    p.flow = f.spec.id;
    p.seq = i;
    p.cum_ack = frags;
    p.sack = f.probes;  // serial
    p.size = i + 1 < frags ? mtu : total - mtu * (frags - 1);
    p.src = f.spec.src;
    p.dst = f.spec.dst;
    p.src_port = port;
    p.kind = PacketKind::kProbe;
    p.sent_at = now();
    send_control(f.spec.src, id);
  }
  ++f.probes;
  ++counters_.probes;
  log(f, FlowEventType::kProbeSent, port, 0, 0);
}

void Simulation::request_switch(Flow& f, const SwitchDecision& d) {
  if (d.port == f.port) return;
  if (f.pending_switch && events_.pending(f.migrate_timer)) events_.cancel(f.migrate_timer);
  f.pending_switch = d;
  log(f, FlowEventType::kSwitchScheduled, d.port, 0, static_cast<std::int64_t>(d.delay.ns));
  if (f.spec.chunk_bytes > 0) {
    // Chunked transfers change path only between chunks.
    f.switch_at_chunk = true;
    return;
  }
  if (d.delay.ns == 0) {
    apply_switch(f);
    return;
  }
  if (cfg_.hopper.hold_during_switch_delay) f.hold = true;
  f.migrate_timer = events_.schedule(d.effective_at, EventKind::kTimer, f.spec.id, kMigrateTimer);
}

void Simulation::apply_switch(Flow& f) {
  if (!f.pending_switch) return;
  const SwitchDecision d = *f.pending_switch;
  f.pending_switch.reset();
  f.switch_at_chunk = false;
  f.hold = false;
  if (d.port != f.port) {
    f.port = d.port;
    f.path = d.path;
    // The new QP comes with its own rate limiter, starting at line rate.
    f.rate = RateState(static_cast<std::uint64_t>(f.rate.line_rate_bps()), cfg_.transport.dcqcn);
    ++f.switches;
    ++counters_.switches;
    if (f.hopper) f.hopper->on_migrated(d.port, d.path, d.probed_rtt, now());
    if (f.flowbender) f.flowbender->on_migrated(d.port, d.path);
    log(f, FlowEventType::kMigrate, d.port, f.tx.snd_nxt(), static_cast<std::int64_t>(d.delay.ns));
  }
  activate(f);
  nic_service(f.spec.src);
}

SimTime Simulation::rto(const Flow& f) const {
  return std::max(cfg_.transport.min_rto, scale(f.srtt, cfg_.transport.rto_factor));
}

void Simulation::arm_rto(Flow& f) {
  if (f.rto_pending) return;
  f.rto_pending = true;
  events_.schedule(f.rto_deadline, EventKind::kTimer, f.spec.id, kRtoTimer);
}

void Simulation::on_timer(FlowId id, std::uint64_t tag) {
  Flow& f = *flows_[id];
  if (tag == kMigrateTimer) {
    if (!f.done) apply_switch(f);
    return;
  }
  f.rto_pending = false;
  if (f.done || f.tx.outstanding() == 0) return;
  const SimTime t = now();
  if (t < f.rto_deadline) {
    arm_rto(f);
    return;
  }
  ++f.timeouts;
  ++counters_.timeouts;
  const std::uint32_t queued = f.tx.on_timeout();
  log(f, FlowEventType::kTimeout, f.port, f.tx.snd_una(), queued);
  f.rto_deadline = t + rto(f);
  arm_rto(f);
  activate(f);
  nic_service(f.spec.src);
}

void Simulation::finish(Flow& f) {
  f.done = true;
  f.end = now();
  f.hold = false;
  if (f.pending_switch && events_.pending(f.migrate_timer)) events_.cancel(f.migrate_timer);
  f.pending_switch.reset();
  ++completed_;
  log(f, FlowEventType::kComplete, f.port, f.tx.n_packets(),
      static_cast<std::int64_t>((f.end - f.spec.start).ns));
  if (complete_cb_) complete_cb_(result(f.spec.id));
  if (stop_when_complete_ && completed_ == flows_.size()) events_.stop();
}

FlowResult Simulation::result(FlowId id) const {
  const Flow& f = *flows_.at(id);
  FlowResult r;
  r.spec = f.spec;
  r.completed = f.done;
  r.end = f.end;
  r.switches = f.switches;
  r.retransmissions = f.retx;
  r.probes = f.probes;
  r.ooo_buffered = f.ooo;
  r.timeouts = f.timeouts;
  return r;
}

std::vector<FlowResult> Simulation::results() const {
  std::vector<FlowResult> out;
  out.reserve(flows_.size());
  for (std::size_t i = 0; i < flows_.size(); ++i) out.push_back(result(static_cast<FlowId>(i)));
  return out;
}

}  // namespace hopper
