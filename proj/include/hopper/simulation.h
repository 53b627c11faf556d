#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "hopper/event_queue.h"
#include "hopper/loadbalancer.h"
#include "hopper/rng.h"
#include "hopper/switchnet.h"
#include "hopper/topology.h"
#include "hopper/transport.h"
#include "hopper/workload.h"

namespace hopper {

struct TransportConfig {
  std::uint32_t mtu = 1000;
  std::uint32_t ack_bytes = 64;
  std::uint32_t ooo_threshold = 30;
  // Inflight cap in packets; 0 derives one BDP from the host link rate and
  // the base RTT.
  std::uint32_t window_packets = 0;
  DcqcnParams dcqcn;
  double rto_factor = 3.0;  // RTO = rto_factor * smoothed RTT ...
  SimTime min_rto = microseconds(50);  // ... but never below this
  // Fault injection: each data packet is lost at its first switch with this
  // probability.
  double drop_probability = 0.0;
};

struct SimulationConfig {
  Scheme scheme = Scheme::kHopper;
  HopperParams hopper;
  TransportConfig transport;
  bool record_flow_events = false;
};

enum class FlowEventType : std::uint8_t {
  kStart,
  kSend,
  kAck,
  kNack,
  kTimeout,
  kProbeThreshold,
  kProbeSent,
  kProbeResult,
  kCongThreshold,
  kSwitchScheduled,
  kMigrate,
  kComplete,
};

const char* to_string(FlowEventType t);

struct FlowEvent {
  SimTime at;
  FlowId flow = 0;
  FlowEventType type = FlowEventType::kStart;
  std::uint16_t port = 0;
  std::uint32_t seq = 0;
  std::int64_t value = 0;  // type-specific: RTT or delay in ns, retx flag
};

// Tab-separated `at_ns flow type port seq value`.
void write_flow_events(std::ostream& out, const std::vector<FlowEvent>& events);

struct FlowResult {
  FlowSpec spec;
  bool completed = false;
  SimTime end;
  std::uint32_t switches = 0;
  std::uint32_t retransmissions = 0;
  std::uint32_t probes = 0;
  std::uint64_t ooo_buffered = 0;
  std::uint64_t timeouts = 0;
  SimTime fct() const { return end - spec.start; }
};

struct SimCounters {
  std::uint64_t data_packets_sent = 0;
  std::uint64_t ooo_buffered = 0;
  std::uint64_t nacks = 0;
  std::uint64_t switches = 0;
  std::uint64_t probes = 0;
  std::uint64_t retransmissions = 0;
  std::uint64_t timeouts = 0;
  std::uint64_t injected_drops = 0;
  std::uint64_t unknown_acks = 0;
  std::uint64_t duplicate_data = 0;
  std::uint64_t delivered_data = 0;
};

// One simulation run over a fixed topology. Owns the event queue, all link
// queues, the host NICs and every flow's transport and steering state.
class Simulation {
 public:
  Simulation(std::shared_ptr<const Topology> topo, SimulationConfig cfg, std::uint64_t seed);
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  // Registers a flow that starts at spec.start (>= now). Flow ids are
  // assigned densely in registration order and returned.
  FlowId add_flow(FlowSpec spec);

  void run_until(SimTime t_end);
  // Runs until every registered flow has completed or the clock reaches
  // `cap`. Returns true if all flows completed.
  bool run_until_complete(SimTime cap);

  // Called from inside the event loop when a flow completes; may add flows.
  void on_flow_complete(std::function<void(const FlowResult&)> cb) {
    complete_cb_ = std::move(cb);
  }

  void set_trace(std::ostream* out) { events_.set_trace(out); }

  SimTime now() const { return events_.now(); }
  std::uint64_t trace_digest() const { return events_.digest(); }
  std::uint64_t events_dispatched() const { return events_.dispatched(); }
  const Topology& topology() const { return *topo_; }
  const SimulationConfig& config() const { return cfg_; }
  std::uint32_t window_packets() const { return window_; }
  const SimCounters& counters() const { return counters_; }
  const std::vector<OutputQueue>& queues() const { return queues_; }
  const std::vector<FlowEvent>& flow_events() const { return flow_log_; }
  std::size_t num_flows() const { return flows_.size(); }
  std::size_t completed_flows() const { return completed_; }
  FlowResult result(FlowId id) const;
  std::vector<FlowResult> results() const;
  std::uint16_t current_port(FlowId id) const { return flows_.at(id)->port; }
  const ReceiverState& receiver(FlowId id) const { return flows_.at(id)->rx; }
  const SenderState& sender(FlowId id) const { return flows_.at(id)->tx; }
  const HopperController* hopper(FlowId id) const {
    return flows_.at(id)->hopper ? &*flows_.at(id)->hopper : nullptr;
  }

  // Data packets per path id emitted by the sender of each flow; used for
  // spraying census and pinning checks.
  const std::vector<std::uint64_t>& packets_per_path(FlowId id) const {
    return flows_.at(id)->per_path_packets;
  }

 private:
  enum TimerTag : std::uint64_t { kRtoTimer = 0, kMigrateTimer = 1 };

  struct Flow {
    FlowSpec spec;
    Scheme scheme;
    SenderState tx;
    ReceiverState rx;
    RateState rate;
    const PathProfileEntry* profile = nullptr;
    std::uint16_t port = 0;
    PathId path = 0;
    std::optional<HopperController> hopper;
    std::optional<FlowBenderController> flowbender;
    bool started = false;
    bool done = false;
    bool in_active = false;
    bool hold = false;  // paused while a delayed switch drains the old path
    SimTime end;
    SimTime next_send;
    SimTime srtt;
    SimTime rto_deadline;
    bool rto_pending = false;
    std::optional<SwitchDecision> pending_switch;
    bool switch_at_chunk = false;
    EventHandle migrate_timer;
    std::uint32_t switches = 0;
    std::uint32_t retx = 0;
    std::uint32_t probes = 0;
    // NIC emission time of the first fragment, by probe serial.
    std::map<std::uint32_t, SimTime> probe_started;
    std::uint64_t ooo = 0;
    std::uint64_t timeouts = 0;
    std::vector<std::uint64_t> per_path_packets;

    Flow(const FlowSpec& s, Scheme sc, std::uint32_t mtu, std::uint32_t window,
         std::uint32_t ooo_threshold, std::uint64_t line_rate, const DcqcnParams& dcqcn);
  };

  struct Nic {
    std::deque<std::uint32_t> control;  // packet ids: ACKs, NACKs, probes
    std::vector<FlowId> active;
    std::size_t rr = 0;
    bool wake_pending = false;
    SimTime wake_at;
    EventHandle wake;
  };

  void dispatch(const Event& ev);
  void start_flow(FlowId id);
  void on_arrival(NodeId node, std::uint32_t pkt_id);
  void deliver(HostId host, std::uint32_t pkt_id);
  void on_data(std::uint32_t pkt_id);
  void on_feedback(std::uint32_t pkt_id);
  void on_probe_ack(std::uint32_t pkt_id);
  void on_timer(FlowId id, std::uint64_t tag);

  void nic_service(HostId host);
  void nic_wake_at(HostId host, SimTime t);
  void activate(Flow& f);
  bool send_data(Flow& f);
  void transmit(std::uint32_t pkt_id, LinkId link);
  void send_control(HostId host, std::uint32_t pkt_id);
  void send_probe(Flow& f, std::uint16_t port);
  void reply(const Packet& to, PacketKind kind, std::uint32_t cum, std::uint32_t sack);

  void request_switch(Flow& f, const SwitchDecision& d);
  void apply_switch(Flow& f);
  void arm_rto(Flow& f);
  SimTime rto(const Flow& f) const;
  void finish(Flow& f);
  void log(const Flow& f, FlowEventType type, std::uint16_t port, std::uint32_t seq,
           std::int64_t value);

  std::uint32_t alloc_packet();
  void free_packet(std::uint32_t id) { free_packets_.push_back(id); }

  std::shared_ptr<const Topology> topo_;
  SimulationConfig cfg_;
  std::uint32_t window_ = 0;
  EventQueue events_;
  RngRegistry rngs_;
  RngStream ecmp_rng_;
  RngStream probe_rng_;
  RngStream flowbender_rng_;
  RngStream rps_rng_;
  RngStream ecn_rng_;
  RngStream fault_rng_;
  PathProfile profiles_;
  std::vector<OutputQueue> queues_;
  std::vector<Nic> nics_;
  std::vector<std::unique_ptr<Flow>> flows_;
  std::vector<Packet> packets_;
  std::vector<std::uint32_t> free_packets_;
  SimCounters counters_;
  std::vector<FlowEvent> flow_log_;
  std::size_t completed_ = 0;
  bool stop_when_complete_ = false;
  std::function<void(const FlowResult&)> complete_cb_;
};

}  // namespace hopper
