#include "zcomm/huffman.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>

namespace zcomm {
namespace {

uint32_t reverse_bits(uint32_t v, unsigned n) {
  uint32_t r = 0;
  for (unsigned i = 0; i < n; ++i) {
    r = (r << 1) | (v & 1);
    v >>= 1;
  }
  return r;
}

// Plain Huffman code lengths via pairwise merge; n <= 256 so O(n^2) is fine
// and keeps tie-breaking explicit: merge order prefers lower weight, then the
// node created earliest, which the canonical (length, symbol) reassignment
// makes irrelevant anyway.
void huffman_lengths(std::span<const uint64_t> freq, std::array<uint8_t, 256>& lens) {
  struct Node {
    uint64_t w;
    int order;
    std::vector<int> syms;
  };
  std::vector<Node> live;
  int order = 0;
  for (int s = 0; s < 256; ++s)
    if (freq[s] > 0) live.push_back({freq[s], order++, {s}});
  lens.fill(0);
  if (live.empty()) return;
  if (live.size() == 1) {
    lens[static_cast<size_t>(live[0].syms[0])] = 1; // degenerate input still gets 1 bit
    return;
  }
  auto pick = [&]() {
    size_t best = 0;
    for (size_t i = 1; i < live.size(); ++i) {
      if (live[i].w < live[best].w ||
          (live[i].w == live[best].w && live[i].order < live[best].order))
        best = i;
    }
    Node n = std::move(live[best]);
    live.erase(live.begin() + static_cast<ptrdiff_t>(best));
    return n;
  };
  std::array<uint32_t, 256> depth{};
  while (live.size() > 1) {
    Node a = pick();
    Node b = pick();
    Node m{a.w + b.w, order++, {}};
    m.syms.reserve(a.syms.size() + b.syms.size());
    for (int s : a.syms) {
      ++depth[static_cast<size_t>(s)];
      m.syms.push_back(s);
    }
    for (int s : b.syms) {
      ++depth[static_cast<size_t>(s)];
      m.syms.push_back(s);
    }
    live.push_back(std::move(m));
  }
  for (int s = 0; s < 256; ++s)
    if (freq[s] > 0) lens[static_cast<size_t>(s)] = static_cast<uint8_t>(depth[s]);
}

// Caps lengths at kHuffMaxCodeLen and restores Kraft <= 1 by deepening the
// deepest repairable leaves. Rarely triggers (needs Fibonacci-like counts).
void limit_lengths(std::array<uint8_t, 256>& lens) {
  constexpr unsigned cap = kHuffMaxCodeLen;
  uint64_t kraft = 0; // in units of 2^-cap
  for (auto& l : lens) {
    if (l == 0) continue;
    if (l > cap) l = cap;
    kraft += 1ull << (cap - l);
  }
  const uint64_t one = 1ull << cap;
  while (kraft > one) {
    int pick = -1;
    unsigned pickLen = 0;
    for (int s = 0; s < 256; ++s) {
      unsigned l = lens[static_cast<size_t>(s)];
      if (l > 0 && l < cap && l >= pickLen) {
        pickLen = l;
        pick = s;
      }
    }
    if (pick < 0) break;
    lens[static_cast<size_t>(pick)]++;
    kraft -= 1ull << (cap - pickLen - 1);
  }
}

std::optional<HuffmanContext> finalize_context(const std::array<uint8_t, 256>& lens) {
  HuffmanContext ctx;
  ctx.codeLen = lens;

  std::array<uint32_t, kHuffMaxCodeLen + 1> blCount{};
  unsigned minLen = 0, maxLen = 0;
  uint32_t nsyms = 0;
  for (int s = 0; s < 256; ++s) {
    unsigned l = lens[static_cast<size_t>(s)];
    if (l == 0) continue;
    if (l > kHuffMaxCodeLen) return std::nullopt;
    ++blCount[l];
    ++nsyms;
    if (minLen == 0 || l < minLen) minLen = l;
    maxLen = std::max(maxLen, l);
  }
  if (nsyms == 0) return std::nullopt;

  // Kraft check guards embedded codebooks from hostile lengths.
  uint64_t kraft = 0;
  for (unsigned l = 1; l <= maxLen; ++l)
    kraft += static_cast<uint64_t>(blCount[l]) << (kHuffMaxCodeLen - l);
  if (kraft > (1ull << kHuffMaxCodeLen)) return std::nullopt;

  std::array<uint64_t, kHuffMaxCodeLen + 2> nextCode{};
  uint64_t code = 0;
  for (unsigned l = 1; l <= maxLen; ++l) {
    code = (code + blCount[l - 1]) << 1;
    nextCode[l] = code;
    ctx.firstCode[l] = code;
  }
  uint32_t idx = 0;
  for (unsigned l = 1; l <= maxLen; ++l) {
    ctx.firstIndex[l] = idx;
    ctx.countAtLen[l] = blCount[l];
    idx += blCount[l];
  }
  // Symbol-ascending sweep realizes the (length, symbol) canonical order.
  std::array<uint32_t, kHuffMaxCodeLen + 1> fill{};
  for (int s = 0; s < 256; ++s) {
    unsigned l = lens[static_cast<size_t>(s)];
    if (l == 0) continue;
    ctx.code[static_cast<size_t>(s)] = static_cast<uint32_t>(nextCode[l]++);
    ctx.symOrder[ctx.firstIndex[l] + fill[l]] = static_cast<uint8_t>(s);
    ++fill[l];
  }
  for (int s = 0; s < 256; ++s) {
    unsigned l = lens[static_cast<size_t>(s)];
    if (l) ctx.revCode[static_cast<size_t>(s)] = reverse_bits(ctx.code[static_cast<size_t>(s)], l);
  }

  ctx.rootLut.assign(1u << kHuffRootBits, 0);
  for (int s = 0; s < 256; ++s) {
    unsigned l = lens[static_cast<size_t>(s)];
    if (l == 0 || l > kHuffRootBits) continue;
    uint32_t rev = ctx.revCode[static_cast<size_t>(s)];
    uint16_t entry = static_cast<uint16_t>(s | (l << 8));
    for (uint32_t pad = 0; pad < (1u << (kHuffRootBits - l)); ++pad)
      ctx.rootLut[rev | (pad << l)] = entry;
  }
  ctx.minLen = minLen;
  ctx.maxLen = maxLen;
  ctx.valid = true;
  return ctx;
}

}  // namespace

HuffmanContext huffman_build_context(std::span<const uint64_t> hist256) {
  HuffmanContext invalid;
  if (hist256.size() != 256) return invalid;
  std::array<uint8_t, 256> lens{};
  huffman_lengths(hist256, lens);
  limit_lengths(lens);
  auto ctx = finalize_context(lens);
  return ctx ? *ctx : invalid;
}

std::optional<HuffmanContext> huffman_context_from_lengths(std::span<const uint8_t> lens256) {
  if (lens256.size() != 256) return std::nullopt;
  std::array<uint8_t, 256> lens{};
  std::memcpy(lens.data(), lens256.data(), 256);
  return finalize_context(lens);
}

std::optional<double> huffman_self_code_len(std::span<const uint64_t> hist256) {
  if (hist256.size() != 256) return std::nullopt;
  std::array<uint8_t, 256> lens{};
  huffman_lengths(hist256, lens);
  limit_lengths(lens);
  uint64_t total = 0;
  double bits = 0.0;
  for (int s = 0; s < 256; ++s) {
    uint64_t f = hist256[static_cast<size_t>(s)];
    if (f == 0) continue;
    if (lens[static_cast<size_t>(s)] == 0) return std::nullopt;
    total += f;
    bits += static_cast<double>(f) * lens[static_cast<size_t>(s)];
  }
  if (total == 0) return std::nullopt;
  return bits / static_cast<double>(total);
}

std::optional<double> huffman_expected_code_len(const HuffmanContext& ctx,
                                                std::span<const uint64_t> hist256) {
  if (!ctx.valid || hist256.size() != 256) return std::nullopt;
  uint64_t total = 0;
  double bits = 0.0;
  for (int s = 0; s < 256; ++s) {
    uint64_t f = hist256[static_cast<size_t>(s)];
    if (f == 0) continue;
    if (ctx.codeLen[static_cast<size_t>(s)] == 0) return std::nullopt;
    total += f;
    bits += static_cast<double>(f) * ctx.codeLen[static_cast<size_t>(s)];
  }
  if (total == 0) return std::nullopt;
  return bits / static_cast<double>(total);
}

size_t huffman_encode(std::span<const uint8_t> raw, const HuffmanContext& ctx,
                      std::span<uint8_t> out, bool embedCodebook) {
  if (!ctx.valid) return 0;
  if (raw.empty() && !embedCodebook) return 0; // 0 is the failure sentinel
  size_t o = 0;
  if (embedCodebook) {
    if (out.size() < kHuffCodebookBytes) return 0;
    std::memcpy(out.data(), ctx.codeLen.data(), kHuffCodebookBytes);
    o = kHuffCodebookBytes;
  }
  uint64_t acc = 0;
  unsigned nbits = 0;
  const size_t cap = out.size();
  for (uint8_t s : raw) {
    unsigned l = ctx.codeLen[s];
    if (l == 0) return 0; // symbol unseen by the shared-context histogram
    acc |= static_cast<uint64_t>(ctx.revCode[s]) << nbits;
    nbits += l;
    while (nbits >= 8) {
      if (o >= cap) return 0;
      out[o++] = static_cast<uint8_t>(acc);
      acc >>= 8;
      nbits -= 8;
    }
  }
  if (nbits > 0) {
    if (o >= cap) return 0;
    out[o++] = static_cast<uint8_t>(acc);
  }
  return o;
}

bool huffman_decode_into(const FrameHeader& h, std::span<const uint8_t> payload,
                         const HuffmanContext* sharedCtx, std::span<uint8_t> dstRaw) {
  if (dstRaw.size() < h.rawBytes) return false;
  if (h.payloadBytes > payload.size()) return false;
  std::span<const uint8_t> stream = payload.first(h.payloadBytes);

  HuffmanContext embedded;
  const HuffmanContext* ctx = nullptr;
  if (h.flags & kFlagEmbeddedCodebook) {
    if (h.params != kHuffCodebookBytes || stream.size() < kHuffCodebookBytes) return false;
    auto rebuilt = huffman_context_from_lengths(stream.first(kHuffCodebookBytes));
    if (!rebuilt) return false;
    embedded = std::move(*rebuilt);
    ctx = &embedded;
    stream = stream.subspan(kHuffCodebookBytes);
  } else {
    if (h.params != 0) return false;
    if (sharedCtx == nullptr || !sharedCtx->valid) return false;
    ctx = sharedCtx;
  }

  const size_t totalBits = stream.size() * 8;
  size_t bitpos = 0;
  uint64_t acc = 0;
  unsigned nbits = 0;
  size_t ip = 0;
  auto refill = [&]() {
    while (nbits <= 56 && ip < stream.size()) {
      acc |= static_cast<uint64_t>(stream[ip++]) << nbits;
      nbits += 8;
    }
  };
  uint8_t* dst = dstRaw.data();
  for (uint64_t i = 0; i < h.rawBytes; ++i) {
    refill();
    uint32_t peek = static_cast<uint32_t>(acc & ((1u << kHuffRootBits) - 1));
    uint16_t entry = ctx->rootLut[peek];
    unsigned l = entry >> 8;
    uint8_t sym;
    if (l != 0) {
      sym = static_cast<uint8_t>(entry & 0xFF);
    } else {
      // Over-root code: canonical walk, MSB-first value accumulation.
      uint64_t val = 0;
      unsigned n = 0;
      bool found = false;
      while (n < ctx->maxLen) {
        if (n >= nbits) return false; // ran out of bits mid-code
        val = (val << 1) | ((acc >> n) & 1);
        ++n;
        if (n >= ctx->minLen && ctx->countAtLen[n] > 0 &&
            val >= ctx->firstCode[n] &&
            val < ctx->firstCode[n] + ctx->countAtLen[n]) {
          sym = ctx->symOrder[ctx->firstIndex[n] + static_cast<uint32_t>(val - ctx->firstCode[n])];
          l = n;
          found = true;
          break;
        }
      }
      if (!found) return false;
    }
    if (bitpos + l > totalBits || l > nbits) return false;
    acc >>= l;
    nbits -= l;
    bitpos += l;
    dst[i] = sym;
  }
  return true;
}

std::optional<std::vector<uint8_t>> huffman_decode(const FrameHeader& h,
                                                   std::span<const uint8_t> payload,
                                                   const HuffmanContext* sharedCtx) {
  std::vector<uint8_t> out(h.rawBytes);
  if (!huffman_decode_into(h, payload, sharedCtx, out)) return std::nullopt;
  return out;
}

}  // namespace zcomm
