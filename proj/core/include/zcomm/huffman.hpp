#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "zcomm/frame.hpp"

namespace zcomm {

inline constexpr unsigned kHuffMaxCodeLen = 32;
inline constexpr size_t kHuffCodebookBytes = 256; // embedded form: one length byte per symbol
inline constexpr unsigned kHuffRootBits = 12;     // decode fast-path table width

// Canonical prefix code over the byte alphabet. Codes are assigned in
// (length, symbol) order; symbols absent from the source histogram carry no
// code (codeLen 0) and make encoding fail under this context.
struct HuffmanContext {
  bool valid = false;
  std::array<uint8_t, 256> codeLen{};
  std::array<uint32_t, 256> code{};    // canonical value, MSB-first
  std::array<uint32_t, 256> revCode{}; // bit-reversed, for LSB-first emission

  // Canonical decode tables.
  std::array<uint8_t, 256> symOrder{}; // symbols sorted by (len, symbol)
  std::array<uint32_t, kHuffMaxCodeLen + 1> countAtLen{};
  std::array<uint64_t, kHuffMaxCodeLen + 1> firstCode{};
  std::array<uint32_t, kHuffMaxCodeLen + 1> firstIndex{};
  std::vector<uint16_t> rootLut;       // [sym | len<<8], len 0 = over-root escape
  unsigned minLen = 0, maxLen = 0;
};

// Builds the canonical code from a 256-bin histogram. A single nonzero bin
// still gets a 1-bit code; lengths are capped at kHuffMaxCodeLen with a
// Kraft-preserving repair. An all-zero histogram yields an invalid context.
HuffmanContext huffman_build_context(std::span<const uint64_t> hist256);

// Rebuilds a context from 256 serialized code lengths (embedded codebooks).
// Validates lengths and the Kraft inequality.
std::optional<HuffmanContext> huffman_context_from_lengths(std::span<const uint8_t> lens256);

// Mean code length in bits per byte for data distributed like hist256, or
// nullopt when some nonzero bin has no code under ctx.
std::optional<double> huffman_expected_code_len(const HuffmanContext& ctx,
                                                std::span<const uint64_t> hist256);

// Mean code length of hist256 under its own canonical code (lengths only, no
// decode tables); this is the embedded-codebook payload predictor. nullopt
// for an all-zero histogram.
std::optional<double> huffman_self_code_len(std::span<const uint64_t> hist256);

// Encodes raw bytes; returns payload size or 0 on failure (invalid ctx,
// zero-frequency symbol, or out too small). Embedded mode prepends the
// 256-byte codebook; the frame header params field must carry that length.
// Empty input encodes to exactly the codebook in embedded mode; in shared
// mode it returns 0, since 0 doubles as the failure sentinel.
size_t huffman_encode(std::span<const uint8_t> raw, const HuffmanContext& ctx,
                      std::span<uint8_t> out, bool embedCodebook);

// Decodes a Huffman payload described by h into dstRaw (size >= h.rawBytes).
// sharedCtx may be null when the frame embeds its codebook. Safe on arbitrary
// payload bytes; returns false on any inconsistency.
bool huffman_decode_into(const FrameHeader& h, std::span<const uint8_t> payload,
                         const HuffmanContext* sharedCtx, std::span<uint8_t> dstRaw);

std::optional<std::vector<uint8_t>> huffman_decode(const FrameHeader& h,
                                                   std::span<const uint8_t> payload,
                                                   const HuffmanContext* sharedCtx);

}  // namespace zcomm
