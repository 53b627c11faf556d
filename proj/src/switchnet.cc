#include "hopper/switchnet.h"

#include <algorithm>
#include <string>

#include "hopper/errors.h"

namespace hopper {

double ecn_mark_probability(std::uint64_t occupancy, const EcnParams& ecn) {
  if (occupancy < ecn.kmin_bytes) return 0.0;
  if (occupancy >= ecn.kmax_bytes) return 1.0;
  return ecn.pmax * static_cast<double>(occupancy - ecn.kmin_bytes) /
         static_cast<double>(ecn.kmax_bytes - ecn.kmin_bytes);
}

std::size_t ecmp_select_port(const Topology& topo, NodeId switch_node, const FiveTuple& tuple) {
  const Node& n = topo.nodes().at(switch_node);
  if (n.kind != NodeKind::kLeaf || topo.leaf_uplinks(n.index).empty()) {
    throw SimulationError("node " + std::to_string(switch_node) + " has no ECMP uplinks");
  }
  return ecmp_hash(tuple) % topo.leaf_uplinks(n.index).size();
}

LinkId next_link(const Topology& topo, NodeId node, HostId dst, const FiveTuple& tuple) {
  const Node& n = topo.nodes().at(node);
  switch (n.kind) {
    case NodeKind::kHost:
      return topo.host_uplink(n.index);
    case NodeKind::kLeaf:
      if (topo.leaf_of(dst) == n.index) return topo.host_downlink(dst);
      return topo.leaf_uplinks(n.index)[ecmp_select_port(topo, node, tuple)];
    case NodeKind::kSpine:
      return topo.spine_downlink(n.index, topo.leaf_of(dst));
  }
  throw SimulationError("no route from node " + std::to_string(node));
}

void OutputQueue::retire(SimTime now) {
  while (!fifo_.empty() && fifo_.front().departure <= now) {
    occupancy_ -= fifo_.front().bytes;
    fifo_.pop_front();
  }
}

std::uint64_t OutputQueue::occupancy(SimTime now) {
  retire(now);
  return occupancy_;
}

std::size_t OutputQueue::packets_queued(SimTime now) {
  retire(now);
  return fifo_.size();
}

EnqueueResult OutputQueue::enqueue(std::uint64_t bytes, bool ecn_capable, SimTime now,
                                   RngStream& rng) {
  retire(now);
  EnqueueResult r;
  if (occupancy_ + bytes > link_->queue_capacity_bytes) {
    ++drops_;
    return r;
  }
  if (ecn_capable) {
    const double p = ecn_mark_probability(occupancy_, link_->ecn);
    if (p >= 1.0 || (p > 0.0 && rng.uniform() < p)) {
      r.ecn_marked = true;
      ++ecn_marks_;
    }
  }
  const SimTime start = std::max(now, busy_until_);
  busy_until_ = start + serialization_time(bytes, link_->bandwidth_bps);
  fifo_.push_back(Queued{busy_until_, bytes});
  occupancy_ += bytes;
  bytes_sent_ += bytes;
  ++packets_sent_;
  r.enqueued = true;
  r.departure = busy_until_;
  r.arrival = busy_until_ + link_->latency;
  return r;
}

}  // namespace hopper
