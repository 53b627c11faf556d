#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "hopper/errors.h"
#include "hopper/sim_time.h"

namespace hopper {

enum class EventKind : std::uint8_t {
  kPacketArrival = 0,
  kLinkDrain = 1,
  kTimer = 2,
  kFlowStart = 3,
  kEpochBoundary = 4,
};

const char* to_string(EventKind kind);

struct Event {
  SimTime fire_at;
  std::uint64_t seq = 0;  // assigned by the queue
  EventKind kind = EventKind::kTimer;
  std::uint64_t target = 0;
  std::uint64_t aux = 0;  // kind-specific payload (packet id, timer tag)
};

struct EventHandle {
  std::uint32_t slot = 0;
  std::uint64_t seq = 0;
};

// Priority event queue with a virtual clock. Ties on fire_at dispatch in
// ascending seq (insertion) order. Every dispatched event is folded into a
// running FNV-1a digest so that two runs can be compared cheaply.
class EventQueue {
 public:
  EventQueue() = default;
  EventQueue(const EventQueue&) = delete;
  EventQueue& operator=(const EventQueue&) = delete;
  EventQueue(EventQueue&&) = default;
  EventQueue& operator=(EventQueue&&) = default;

  // Throws SimulationError if fire_at is before the current clock.
  EventHandle schedule(SimTime fire_at, EventKind kind, std::uint64_t target,
                       std::uint64_t aux = 0);

  // Returns true if the event was pending and is now cancelled. Cancelling a
  // dispatched or already-cancelled event is a no-op returning false.
  bool cancel(EventHandle handle);

  bool pending(EventHandle handle) const;

  // Dispatches every event with fire_at <= t_end in (fire_at, seq) order.
  // The clock ends at the last dispatched fire time, or at t_end when
  // nothing was dispatched. `dispatch` may schedule further events and may
  // call stop() to return early.
  template <typename F>
  std::size_t run_until(SimTime t_end, F&& dispatch);

  void stop() { stop_requested_ = true; }

  SimTime now() const { return now_; }
  std::size_t size() const { return live_; }
  bool empty() const { return live_ == 0; }
  std::uint64_t digest() const { return digest_; }
  std::uint64_t dispatched() const { return dispatched_; }

  // Optional per-event trace: "fire_at_ns\tseq\tkind\ttarget".
  void set_trace(std::ostream* out) { trace_ = out; }

  // Last few dispatched events, oldest first, for diagnostics.
  std::vector<Event> trace_tail() const;
  std::string format_trace_tail() const;

 private:
  struct Entry {
    SimTime fire_at;
    std::uint64_t seq;
    std::uint64_t target;
    std::uint64_t aux;
    std::uint32_t slot;
    EventKind kind;
  };
  struct Slot {
    std::uint64_t seq = 0;
    bool live = false;
  };
  static bool later(const Entry& a, const Entry& b) {
    if (a.fire_at != b.fire_at) return a.fire_at > b.fire_at;
    return a.seq > b.seq;
  }

  bool pop(Event& out);
  void record(const Event& e);

  std::vector<Entry> heap_;
  std::vector<Slot> slots_;
  std::vector<std::uint32_t> free_slots_;
  std::size_t live_ = 0;
  std::uint64_t next_seq_ = 1;
  SimTime now_;
  std::uint64_t digest_ = 14695981039346656037ull;
  std::uint64_t dispatched_ = 0;
  bool stop_requested_ = false;
  std::ostream* trace_ = nullptr;

  static constexpr std::size_t kTailSize = 32;
  std::vector<Event> tail_;
  std::size_t tail_pos_ = 0;
};

template <typename F>
std::size_t EventQueue::run_until(SimTime t_end, F&& dispatch) {
  if (t_end < now_) {
    throw SimulationError("run_until target " + std::to_string(t_end.ns) +
                          "ns is before the clock " + std::to_string(now_.ns) + "ns");
  }
  stop_requested_ = false;
  std::size_t count = 0;
  Event ev;
  while (!stop_requested_ && !heap_.empty()) {
    if (heap_.front().fire_at > t_end) break;
    if (!pop(ev)) continue;
    now_ = ev.fire_at;
    record(ev);
    ++count;
    dispatch(ev);
  }
  if (count == 0) now_ = t_end;
  return count;
}

}  // namespace hopper
