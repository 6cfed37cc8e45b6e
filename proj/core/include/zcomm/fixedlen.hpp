#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "zcomm/frame.hpp"

namespace zcomm {

// Zig-zag map: n -> 2n for n >= 0, -2n-1 for n < 0. Small magnitudes of either
// sign stay small so the pack width tracks max|symbol|.
constexpr uint32_t zigzag32(int32_t v) {
  return (static_cast<uint32_t>(v) << 1) ^ static_cast<uint32_t>(v >> 31);
}
constexpr int32_t unzigzag32(uint32_t z) {
  return static_cast<int32_t>(z >> 1) ^ -static_cast<int32_t>(z & 1);
}

// Pack width for a symbol block: bit length of the max zig-zag value, min 1.
unsigned fixedlen_width(std::span<const int32_t> symbols);

constexpr size_t fixedlen_packed_bytes(size_t count, unsigned width) {
  return (count * width + 7) / 8;
}

// Packs zig-zagged symbols at the block width, little-endian bit order within
// bytes. Returns payload bytes, or 0 when out cannot hold them (or symbols is
// empty). *widthOut receives the width for the frame header params field.
size_t fixedlen_encode(std::span<const int32_t> symbols, std::span<uint8_t> out,
                       unsigned* widthOut);

// Decodes a FixedLen payload described by h (params = width, rawBytes = 4*count)
// into dstRaw as little-endian int32 symbols. Bounds-checked against arbitrary
// payload bytes; returns false on any inconsistency, writing nothing partial
// beyond dstRaw.
bool fixedlen_decode_into(const FrameHeader& h, std::span<const uint8_t> payload,
                          std::span<uint8_t> dstRaw);

std::optional<std::vector<int32_t>> fixedlen_decode(const FrameHeader& h,
                                                    std::span<const uint8_t> payload);

}  // namespace zcomm
