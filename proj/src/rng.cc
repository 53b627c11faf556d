#include "hopper/rng.h"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace hopper {

namespace {
std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}
}  // namespace

std::uint64_t derive_stream_seed(std::uint64_t root_seed, std::string_view label) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : label) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return splitmix64(splitmix64(root_seed) ^ h);
}

std::uint64_t RngStream::uniform_int(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_int: empty range");
  // Rejection sampling on the top of the range keeps the draw unbiased.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

double RngStream::exponential(double rate) {
  // 1 - u lies in (0, 1], so the log is finite.
  return -std::log(1.0 - uniform()) / rate;
}

RngStream RngRegistry::fork(std::string_view label) {
  if (used_.contains(label)) {
    throw ConfigError("rng stream '" + std::string(label) + "' forked twice");
  }
  used_.emplace(label);
  return RngStream(std::string(label), derive_stream_seed(root_seed_, label));
}

}  // namespace hopper
