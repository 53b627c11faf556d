#pragma once

#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <string_view>

#include "hopper/errors.h"

namespace hopper {

// Seed derivation: SplitMix64 over the root seed mixed with an FNV-1a hash of
// the stream label. Distributions are implemented here rather than with the
// <random> distribution classes, whose output is implementation-defined.
std::uint64_t derive_stream_seed(std::uint64_t root_seed, std::string_view label);

class RngStream {
 public:
  RngStream(std::string label, std::uint64_t seed) : label_(std::move(label)), engine_(seed) {}

  const std::string& label() const { return label_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_int(std::uint64_t n);

  bool bernoulli(double p) { return uniform() < p; }

  // Exponential with the given rate (events per unit).
  double exponential(double rate);

 private:
  std::string label_;
  std::mt19937_64 engine_;
};

// Hands out named streams derived from one root seed. Each label may be
// forked once per registry so that no two concerns share a stream.
class RngRegistry {
 public:
  explicit RngRegistry(std::uint64_t root_seed) : root_seed_(root_seed) {}

  std::uint64_t root_seed() const { return root_seed_; }

  // Throws ConfigError on a duplicate label.
  RngStream fork(std::string_view label);

 private:
  std::uint64_t root_seed_;
  std::set<std::string, std::less<>> used_;
};

}  // namespace hopper
