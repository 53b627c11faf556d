#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

#include "hopper/topology.h"

namespace hopper::testing {

// Bitwise reflected CRC-32 (poly 0xEDB88320), written independently of zlib.
inline std::uint32_t crc32_bitwise(const std::uint8_t* data, std::size_t n) {
  std::uint32_t crc = 0xffffffffu;
  for (std::size_t i = 0; i < n; ++i) {
    crc ^= data[i];
    for (int b = 0; b < 8; ++b) crc = (crc >> 1) ^ (0xEDB88320u & (0u - (crc & 1u)));
  }
  return ~crc;
}

inline std::uint32_t oracle_hash(const FiveTuple& t) {
  std::array<std::uint8_t, 13> buf{};
  for (int i = 0; i < 4; ++i) {
    buf[i] = static_cast<std::uint8_t>(t.src_addr >> (24 - 8 * i));
    buf[4 + i] = static_cast<std::uint8_t>(t.dst_addr >> (24 - 8 * i));
  }
  buf[8] = static_cast<std::uint8_t>(t.src_port >> 8);
  buf[9] = static_cast<std::uint8_t>(t.src_port);
  buf[10] = static_cast<std::uint8_t>(t.dst_port >> 8);
  buf[11] = static_cast<std::uint8_t>(t.dst_port);
  buf[12] = t.protocol;
  return crc32_bitwise(buf.data(), buf.size());
}

}  // namespace hopper::testing
