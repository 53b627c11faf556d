#include "hopper/event_queue.h"

#include <algorithm>
#include <sstream>

namespace hopper {

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::kPacketArrival:
      return "packet_arrival";
    case EventKind::kLinkDrain:
      return "link_drain";
    case EventKind::kTimer:
      return "timer";
    case EventKind::kFlowStart:
      return "flow_start";
    case EventKind::kEpochBoundary:
      return "epoch_boundary";
  }
  return "unknown";
}

EventHandle EventQueue::schedule(SimTime fire_at, EventKind kind, std::uint64_t target,
                                 std::uint64_t aux) {
  if (fire_at < now_) {
    std::ostringstream msg;
    msg << "scheduling " << to_string(kind) << " for target " << target << " at "
        << fire_at.ns << "ns, before the clock at " << now_.ns << "ns\n"
        << format_trace_tail();
    throw SimulationError(msg.str());
  }
  std::uint32_t slot;
  if (!free_slots_.empty()) {
    slot = free_slots_.back();
    free_slots_.pop_back();
  } else {
    slot = static_cast<std::uint32_t>(slots_.size());
    slots_.emplace_back();
  }
  const std::uint64_t seq = next_seq_++;
  slots_[slot] = Slot{seq, true};
  heap_.push_back(Entry{fire_at, seq, target, aux, slot, kind});
  std::push_heap(heap_.begin(), heap_.end(), later);
  ++live_;
  return EventHandle{slot, seq};
}

bool EventQueue::pending(EventHandle handle) const {
  return handle.slot < slots_.size() && slots_[handle.slot].seq == handle.seq &&
         slots_[handle.slot].live;
}

bool EventQueue::cancel(EventHandle handle) {
  if (!pending(handle)) return false;
  slots_[handle.slot].live = false;
  --live_;
  return true;
}

bool EventQueue::pop(Event& out) {
  std::pop_heap(heap_.begin(), heap_.end(), later);
  const Entry e = heap_.back();
  heap_.pop_back();
  Slot& s = slots_[e.slot];
  const bool live = s.live && s.seq == e.seq;
  if (s.seq == e.seq) {
    if (live) --live_;
    s.live = false;
    free_slots_.push_back(e.slot);
  }
  if (!live) return false;
  out = Event{e.fire_at, e.seq, e.kind, e.target, e.aux};
  return true;
}

namespace {
inline void fnv_mix(std::uint64_t& h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xffu;
    h *= 1099511628211ull;
  }
}
}  // namespace

void EventQueue::record(const Event& e) {
  fnv_mix(digest_, e.fire_at.ns);
  fnv_mix(digest_, e.seq);
  fnv_mix(digest_, static_cast<std::uint64_t>(e.kind));
  fnv_mix(digest_, e.target);
  ++dispatched_;
  if (tail_.size() < kTailSize) {
    tail_.push_back(e);
  } else {
    tail_[tail_pos_] = e;
    tail_pos_ = (tail_pos_ + 1) % kTailSize;
  }
  if (trace_ != nullptr) {
    *trace_ << e.fire_at.ns << '\t' << e.seq << '\t' << to_string(e.kind) << '\t' << e.target
            << '\n';
  }
}

std::vector<Event> EventQueue::trace_tail() const {
  std::vector<Event> out;
  out.reserve(tail_.size());
  for (std::size_t i = 0; i < tail_.size(); ++i) {
    out.push_back(tail_[(tail_pos_ + i) % tail_.size()]);
  }
  return out;
}

std::string EventQueue::format_trace_tail() const {
  std::ostringstream os;
  os << "last " << tail_.size() << " dispatched events:\n";
  for (const Event& e : trace_tail()) {
    os << "  " << e.fire_at.ns << '\t' << e.seq << '\t' << to_string(e.kind) << '\t' << e.target
       << '\n';
  }
  return os.str();
}

}  // namespace hopper
