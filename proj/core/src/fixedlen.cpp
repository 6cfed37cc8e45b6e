#include "zcomm/fixedlen.hpp"

#include <bit>
#include <cstring>

namespace zcomm {

unsigned fixedlen_width(std::span<const int32_t> symbols) {
  uint32_t maxzz = 0;
  for (int32_t s : symbols) maxzz = std::max(maxzz, zigzag32(s));
  unsigned w = maxzz == 0 ? 1u : static_cast<unsigned>(std::bit_width(maxzz));
  return w;
}

size_t fixedlen_encode(std::span<const int32_t> symbols, std::span<uint8_t> out,
                       unsigned* widthOut) {
  if (symbols.empty()) return 0;
  unsigned w = fixedlen_width(symbols);
  if (widthOut) *widthOut = w;
  size_t need = fixedlen_packed_bytes(symbols.size(), w);
  if (out.size() < need) return 0;

  uint64_t acc = 0;
  unsigned nbits = 0;
  size_t o = 0;
  for (int32_t s : symbols) {
    acc |= static_cast<uint64_t>(zigzag32(s)) << nbits;
    nbits += w;
    while (nbits >= 8) {
      out[o++] = static_cast<uint8_t>(acc);
      acc >>= 8;
      nbits -= 8;
    }
  }
  if (nbits > 0) out[o++] = static_cast<uint8_t>(acc);
  return o;
}

bool fixedlen_decode_into(const FrameHeader& h, std::span<const uint8_t> payload,
                          std::span<uint8_t> dstRaw) {
  unsigned w = static_cast<unsigned>(h.params);
  if (w < 1 || w > 32 || h.params > 32) return false;
  if (h.rawBytes == 0 || h.rawBytes % 4 != 0) return false;
  if (dstRaw.size() < h.rawBytes) return false;
  size_t count = h.rawBytes / 4;
  size_t need = fixedlen_packed_bytes(count, w);
  if (h.payloadBytes < need || payload.size() < need) return false;

  uint64_t mask = (w == 64) ? ~0ull : ((1ull << w) - 1);
  uint64_t acc = 0;
  unsigned nbits = 0;
  size_t ip = 0;
  uint8_t* dst = dstRaw.data();
  for (size_t i = 0; i < count; ++i) {
    while (nbits < w) {
      acc |= static_cast<uint64_t>(payload[ip++]) << nbits;
      nbits += 8;
    }
    int32_t s = unzigzag32(static_cast<uint32_t>(acc & mask));
    acc >>= w;
    nbits -= w;
    std::memcpy(dst + 4 * i, &s, 4); // little-endian host assumed for symbol buffers
  }
  return true;
}

std::optional<std::vector<int32_t>> fixedlen_decode(const FrameHeader& h,
                                                    std::span<const uint8_t> payload) {
  if (h.rawBytes == 0 || h.rawBytes % 4 != 0) return std::nullopt;
  std::vector<int32_t> out(h.rawBytes / 4);
  std::span<uint8_t> raw(reinterpret_cast<uint8_t*>(out.data()), h.rawBytes);
  if (!fixedlen_decode_into(h, payload, raw)) return std::nullopt;
  return out;
}

}  // namespace zcomm
