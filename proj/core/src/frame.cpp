#include "zcomm/frame.hpp"

#include <cstring>
#include <stdexcept>

namespace zcomm {
namespace {

void put_u16(uint8_t* p, uint16_t v) {
  p[0] = static_cast<uint8_t>(v);
  p[1] = static_cast<uint8_t>(v >> 8);
}
void put_u32(uint8_t* p, uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<uint8_t>(v >> (8 * i));
}
void put_u64(uint8_t* p, uint64_t v) {
  for (int i = 0; i < 8; ++i) p[i] = static_cast<uint8_t>(v >> (8 * i));
}
uint16_t get_u16(const uint8_t* p) {
  return static_cast<uint16_t>(p[0] | (uint16_t(p[1]) << 8));
}
uint32_t get_u32(const uint8_t* p) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= uint32_t(p[i]) << (8 * i);
  return v;
}
uint64_t get_u64(const uint8_t* p) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= uint64_t(p[i]) << (8 * i);
  return v;
}

}  // namespace

void write_header(const FrameHeader& h, std::span<uint8_t> dst) {
  if (dst.size() < kHeaderBytes) throw std::invalid_argument("write_header: region too small");
  uint8_t* p = dst.data();
  put_u32(p + 0, h.magic);
  p[4] = h.version;
  p[5] = static_cast<uint8_t>(h.codec);
  put_u16(p + 6, h.flags);
  put_u64(p + 8, h.rawBytes);
  put_u64(p + 16, h.payloadBytes);
  put_u64(p + 24, h.params);
}

std::optional<FrameHeader> parse_header(std::span<const uint8_t> src) {
  if (src.size() < kHeaderBytes) return std::nullopt;
  const uint8_t* p = src.data();
  FrameHeader h;
  h.magic = get_u32(p + 0);
  h.version = p[4];
  h.codec = static_cast<CodecId>(p[5]);
  h.flags = get_u16(p + 6);
  h.rawBytes = get_u64(p + 8);
  h.payloadBytes = get_u64(p + 16);
  h.params = get_u64(p + 24);
  return h;
}

bool validate_header(const FrameHeader& h, size_t regionBytes) {
  if (h.magic != kFrameMagic) return false;
  if (h.version != kFrameVersion) return false;
  if (static_cast<uint8_t>(h.codec) > static_cast<uint8_t>(CodecId::Huffman)) return false;
  if (h.rawBytes == 0) return false;
  if (regionBytes < kHeaderBytes || h.payloadBytes > regionBytes - kHeaderBytes) return false;
  if (h.codec == CodecId::Raw && h.payloadBytes != h.rawBytes) return false;
  return true;
}

size_t frame_commit_raw(std::span<const uint8_t> raw, std::span<uint8_t> region) {
  if (raw.empty()) return 0;
  if (region.size() < kHeaderBytes || region.size() - kHeaderBytes < raw.size()) return 0;
  FrameHeader h;
  h.codec = CodecId::Raw;
  h.rawBytes = raw.size();
  h.payloadBytes = raw.size();
  write_header(h, region);
  std::memcpy(region.data() + kHeaderBytes, raw.data(), raw.size());
  return kHeaderBytes + raw.size();
}

}  // namespace zcomm
