#pragma once

#include <cassert>
#include <compare>
#include <cstdint>
#include <limits>
#include <ostream>

namespace hopper {

// Simulated time in integer nanoseconds since run start. Used both for
// instants and for non-negative durations.
struct SimTime {
  std::uint64_t ns = 0;

  constexpr SimTime() = default;
  constexpr explicit SimTime(std::uint64_t n) : ns(n) {}

  static constexpr SimTime max() {
    return SimTime{std::numeric_limits<std::uint64_t>::max()};
  }

  constexpr auto operator<=>(const SimTime&) const = default;

  constexpr SimTime& operator+=(SimTime o) {
    ns += o.ns;
    return *this;
  }
  constexpr SimTime& operator-=(SimTime o) {
    assert(ns >= o.ns);
    ns -= o.ns;
    return *this;
  }
  constexpr double us() const { return static_cast<double>(ns) / 1e3; }
};

constexpr SimTime operator+(SimTime a, SimTime b) { return SimTime{a.ns + b.ns}; }
constexpr SimTime operator-(SimTime a, SimTime b) {
  assert(a.ns >= b.ns);
  return SimTime{a.ns - b.ns};
}
constexpr SimTime operator*(SimTime a, std::uint64_t k) { return SimTime{a.ns * k}; }
constexpr SimTime operator*(std::uint64_t k, SimTime a) { return SimTime{a.ns * k}; }

// b - a clamped at zero.
constexpr SimTime saturating_sub(SimTime a, SimTime b) {
  return a.ns > b.ns ? SimTime{a.ns - b.ns} : SimTime{};
}

// Scales a duration by a real factor, rounding to the nearest nanosecond.
constexpr SimTime scale(SimTime t, double factor) {
  const double v = static_cast<double>(t.ns) * factor;
  return SimTime{v <= 0.0 ? 0 : static_cast<std::uint64_t>(v + 0.5)};
}

constexpr SimTime nanoseconds(std::uint64_t n) { return SimTime{n}; }
constexpr SimTime microseconds(double us) { return scale(SimTime{1000}, us); }
constexpr SimTime milliseconds(double ms) { return scale(SimTime{1000000}, ms); }

inline std::ostream& operator<<(std::ostream& os, SimTime t) { return os << t.ns << "ns"; }

}  // namespace hopper
