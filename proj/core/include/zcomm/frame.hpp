#pragma once

#include <cstdint>
#include <optional>
#include <span>

namespace zcomm {

// Wire layout, little-endian, 32 bytes:
//   magic(4) | version(1) | codecId(1) | flags(2) | rawBytes(8) | payloadBytes(8) | params(8)
// params: FixedLen = pack bit width; Huffman = serialized codebook bytes (0 in
// shared-context mode); Raw = 0.
inline constexpr uint32_t kFrameMagic = 0x464D435Au; // "ZCMF" little-endian
inline constexpr uint8_t kFrameVersion = 1;
inline constexpr size_t kHeaderBytes = 32;
inline constexpr uint16_t kFlagEmbeddedCodebook = 0x0001;

enum class CodecId : uint8_t { Raw = 0, FixedLen = 1, Huffman = 2 };

inline const char* codec_name(CodecId c) {
  switch (c) {
    case CodecId::FixedLen: return "fixedlen";
    case CodecId::Huffman: return "huffman";
    default: return "raw";
  }
}

struct FrameHeader {
  uint32_t magic = kFrameMagic;
  uint8_t version = kFrameVersion;
  CodecId codec = CodecId::Raw;
  uint16_t flags = 0;
  uint64_t rawBytes = 0;
  uint64_t payloadBytes = 0;
  uint64_t params = 0;
};

void write_header(const FrameHeader& h, std::span<uint8_t> dst);

// Pure deserialization; returns nullopt only when fewer than kHeaderBytes are
// available. Field sanity lives in validate_header.
std::optional<FrameHeader> parse_header(std::span<const uint8_t> src);

// True iff magic/version/codec are recognized, rawBytes > 0, the payload fits
// the received region, and Raw frames carry payloadBytes == rawBytes.
bool validate_header(const FrameHeader& h, size_t regionBytes);

// Commits raw bytes: header + verbatim payload. Returns total frame bytes, or
// 0 when the region cannot hold kHeaderBytes + raw.size().
size_t frame_commit_raw(std::span<const uint8_t> raw, std::span<uint8_t> region);

}  // namespace zcomm
