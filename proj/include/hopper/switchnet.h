#pragma once

#include <cstdint>
#include <deque>

#include "hopper/rng.h"
#include "hopper/sim_time.h"
#include "hopper/topology.h"

namespace hopper {

// Marking probability for a packet arriving to `occupancy` queued bytes:
// 0 below kmin, linear up to pmax at kmax, 1 beyond kmax.
double ecn_mark_probability(std::uint64_t occupancy, const EcnParams& ecn);

// Uplink index a leaf switch picks for a five-tuple: CRC32 mod uplink count.
// Throws SimulationError if the switch has no uplinks.
std::size_t ecmp_select_port(const Topology& topo, NodeId switch_node, const FiveTuple& tuple);

// Output link a packet takes at `node` toward `dst`. Pure function of the
// topology and the tuple.
LinkId next_link(const Topology& topo, NodeId node, HostId dst, const FiveTuple& tuple);

struct EnqueueResult {
  bool enqueued = false;
  bool ecn_marked = false;
  SimTime departure;  // last bit leaves the output port
  SimTime arrival;    // last bit reaches the far endpoint
};

// Drop-tail FIFO in front of one directed link. Departures are computed at
// enqueue time (the link is work-conserving and FIFO), so occupancy is
// derived by retiring packets whose departure has passed.
class OutputQueue {
 public:
  explicit OutputQueue(const Link& link) : link_(&link) {}

  const Link& link() const { return *link_; }

  std::uint64_t occupancy(SimTime now);
  std::size_t packets_queued(SimTime now);
  SimTime busy_until() const { return busy_until_; }
  bool idle(SimTime now) const { return busy_until_ <= now; }

  // Drops when occupancy + bytes would exceed capacity. ECN-capable packets
  // are marked with ecn_mark_probability(occupancy) drawn from `rng`.
  EnqueueResult enqueue(std::uint64_t bytes, bool ecn_capable, SimTime now, RngStream& rng);

  std::uint64_t bytes_sent() const { return bytes_sent_; }
  std::uint64_t packets_sent() const { return packets_sent_; }
  std::uint64_t drops() const { return drops_; }
  std::uint64_t ecn_marks() const { return ecn_marks_; }

 private:
  void retire(SimTime now);

  const Link* link_;
  struct Queued {
    SimTime departure;
    std::uint64_t bytes;
  };
  std::deque<Queued> fifo_;
  std::uint64_t occupancy_ = 0;
  SimTime busy_until_;
  std::uint64_t bytes_sent_ = 0;
  std::uint64_t packets_sent_ = 0;
  std::uint64_t drops_ = 0;
  std::uint64_t ecn_marks_ = 0;
};

}  // namespace hopper
