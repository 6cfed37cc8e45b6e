#include <cmath>
#include <cstring>
#include <numeric>
#include <random>
#include <vector>

#include "doctest.h"
#include "zcomm/fixedlen.hpp"
#include "zcomm/huffman.hpp"

using namespace zcomm;

namespace {

std::array<uint64_t, 256> hist_of(std::span<const uint8_t> bytes) {
  std::array<uint64_t, 256> h{};
  for (uint8_t b : bytes) ++h[b];
  return h;
}

FrameHeader header_for(size_t rawBytes, size_t payload, bool embed) {
  FrameHeader h;
  h.codec = CodecId::Huffman;
  h.flags = embed ? kFlagEmbeddedCodebook : 0;
  h.rawBytes = rawBytes;
  h.payloadBytes = payload;
  h.params = embed ? kHuffCodebookBytes : 0;
  return h;
}

double shannon_bits_per_byte(const std::array<uint64_t, 256>& h) {
  uint64_t total = std::accumulate(h.begin(), h.end(), uint64_t{0});
  double e = 0.0;
  for (uint64_t c : h) {
    if (c == 0) continue;
    double p = static_cast<double>(c) / total;
    e -= p * std::log2(p);
  }
  return e;
}

std::vector<uint8_t> sample_hist(const std::array<uint64_t, 256>& h, size_t n, uint64_t seed) {
  std::vector<double> w(h.begin(), h.end());
  std::discrete_distribution<int> d(w.begin(), w.end());
  std::mt19937_64 rng(seed);
  std::vector<uint8_t> out(n);
  for (auto& b : out) b = static_cast<uint8_t>(d(rng));
  return out;
}

}  // namespace

TEST_SUITE("huffman") {

TEST_CASE("single symbol gets a 1-bit code") {
  std::array<uint64_t, 256> h{};
  h[42] = 1000;
  auto ctx = huffman_build_context(h);
  REQUIRE(ctx.valid);
  CHECK(ctx.codeLen[42] == 1);
  for (int s = 0; s < 256; ++s)
    if (s != 42) CHECK(ctx.codeLen[s] == 0);
}

TEST_CASE("two equal bins: both 1-bit, expected length 1.0") {
  std::array<uint64_t, 256> h{};
  h[0] = 500;
  h[255] = 500;
  auto ctx = huffman_build_context(h);
  REQUIRE(ctx.valid);
  CHECK(ctx.codeLen[0] == 1);
  CHECK(ctx.codeLen[255] == 1);
  auto el = huffman_expected_code_len(ctx, h);
  REQUIRE(el.has_value());
  CHECK(*el == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("geometric histogram within 1 bit of entropy") {
  std::array<uint64_t, 256> h{};
  for (int k = 0; k < 8; ++k) h[k] = uint64_t{1} << (10 - k);  // p(k) ~ 0.5^k
  auto ctx = huffman_build_context(h);
  REQUIRE(ctx.valid);
  auto el = huffman_expected_code_len(ctx, h);
  REQUIRE(el.has_value());
  double entropy = shannon_bits_per_byte(h);
  CHECK(*el >= entropy - 1e-9);
  CHECK(*el <= entropy + 1.0);
}

TEST_CASE("all-zero histogram is invalid") {
  std::array<uint64_t, 256> h{};
  CHECK_FALSE(huffman_build_context(h).valid);
  CHECK_FALSE(huffman_self_code_len(h).has_value());
}

TEST_CASE("self code length matches expected length under own context") {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 20; ++t) {
    std::array<uint64_t, 256> h{};
    int live = 2 + static_cast<int>(rng() % 40);
    for (int i = 0; i < live; ++i) h[rng() % 256] += 1 + rng() % 10000;
    auto ctx = huffman_build_context(h);
    if (!ctx.valid) continue;
    auto a = huffman_expected_code_len(ctx, h);
    auto b = huffman_self_code_len(h);
    REQUIRE(a.has_value());
    REQUIRE(b.has_value());
    CHECK(*a == doctest::Approx(*b).epsilon(1e-12));
  }
}

TEST_CASE("repeated byte, embedded codebook: 256 + ceil(n/8)") {
  size_t n = 1000;
  std::vector<uint8_t> raw(n, 7);
  auto ctx = huffman_build_context(hist_of(raw));
  std::vector<uint8_t> out(kHuffCodebookBytes + n);
  size_t payload = huffman_encode(raw, ctx, out, true);
  CHECK(payload == kHuffCodebookBytes + (n + 7) / 8);

  auto dec = huffman_decode(header_for(n, payload, true), {out.data(), payload}, nullptr);
  REQUIRE(dec.has_value());
  CHECK(*dec == raw);
}

TEST_CASE("empty input embeds to codebook only and decodes empty") {
  std::array<uint64_t, 256> h{};
  h[3] = 5;
  auto ctx = huffman_build_context(h);
  std::vector<uint8_t> out(512);
  size_t payload = huffman_encode({}, ctx, out, true);
  CHECK(payload == kHuffCodebookBytes);
  auto dec = huffman_decode(header_for(0, payload, true), {out.data(), payload}, nullptr);
  REQUIRE(dec.has_value());
  CHECK(dec->empty());
  // Shared mode cannot represent empty: 0 is the failure sentinel.
  CHECK(huffman_encode({}, ctx, out, false) == 0);
}

TEST_CASE("shared and embedded round-trips on skewed data") {
  std::mt19937_64 rng(37);
  std::geometric_distribution<int> gd(0.4);
  for (int t = 0; t < 30; ++t) {
    size_t n = 500 + rng() % 20000;
    std::vector<uint8_t> raw(n);
    for (auto& b : raw) b = static_cast<uint8_t>(std::min(gd(rng), 255));
    auto ctx = huffman_build_context(hist_of(raw));
    REQUIRE(ctx.valid);
    std::vector<uint8_t> out(kHuffCodebookBytes + 2 * n + 16);

    size_t shared = huffman_encode(raw, ctx, out, false);
    REQUIRE(shared > 0);
    auto dec1 = huffman_decode(header_for(n, shared, false), {out.data(), shared}, &ctx);
    REQUIRE(dec1.has_value());
    CHECK(*dec1 == raw);

    size_t embedded = huffman_encode(raw, ctx, out, true);
    REQUIRE(embedded == shared + kHuffCodebookBytes);
    auto dec2 = huffman_decode(header_for(n, embedded, true), {out.data(), embedded}, nullptr);
    REQUIRE(dec2.has_value());
    CHECK(*dec2 == raw);
  }
}

TEST_CASE("zero-frequency symbol under shared context fails cleanly") {
  std::array<uint64_t, 256> h{};
  h[1] = 10;
  h[2] = 20;
  auto ctx = huffman_build_context(h);
  std::vector<uint8_t> raw{1, 2, 3};  // 3 has no code
  std::vector<uint8_t> out(64);
  CHECK(huffman_encode(raw, ctx, out, false) == 0);
}

TEST_CASE("capacity shortfall fails cleanly") {
  std::vector<uint8_t> raw(1000);
  std::mt19937_64 rng(41);
  for (auto& b : raw) b = static_cast<uint8_t>(rng());
  auto ctx = huffman_build_context(hist_of(raw));
  std::vector<uint8_t> tiny(16);
  CHECK(huffman_encode(raw, ctx, tiny, false) == 0);
  CHECK(huffman_encode(raw, ctx, tiny, true) == 0);
}

TEST_CASE("skewed stream beats fixedlen") {
  // 97% zeros one-byte-per-symbol stream, as int32 symbols for fixedlen.
  std::mt19937_64 rng(43);
  size_t n = 40000;
  std::vector<int32_t> syms(n);
  for (auto& s : syms) s = (rng() % 100 < 97) ? 0 : static_cast<int32_t>(1 + rng() % 120);
  std::vector<uint8_t> bytes(4 * n);
  std::memcpy(bytes.data(), syms.data(), bytes.size());

  auto ctx = huffman_build_context(hist_of(bytes));
  std::vector<uint8_t> hout(8 * n);
  size_t hpay = huffman_encode(bytes, ctx, hout, false);
  REQUIRE(hpay > 0);

  std::vector<uint8_t> fout(8 * n);
  unsigned w = 0;
  size_t fpay = fixedlen_encode(syms, fout, &w);
  REQUIRE(fpay > 0);
  CHECK(hpay < fpay);
}

TEST_CASE("length cap repair keeps codes decodable") {
  // Fibonacci-weighted bins force unrepaired depths past 32.
  std::array<uint64_t, 256> h{};
  uint64_t a = 1, b = 1;
  for (int i = 0; i < 60; ++i) {
    h[i] = a;
    uint64_t c = a + b;
    a = b;
    b = c;
  }
  auto ctx = huffman_build_context(h);
  REQUIRE(ctx.valid);
  double kraft = 0.0;
  for (int s = 0; s < 256; ++s) {
    CHECK(ctx.codeLen[s] <= kHuffMaxCodeLen);
    if (ctx.codeLen[s] > 0) kraft += std::ldexp(1.0, -static_cast<int>(ctx.codeLen[s]));
  }
  CHECK(kraft <= 1.0 + 1e-12);

  auto raw = sample_hist(h, 20000, 47);
  std::vector<uint8_t> out(8 * raw.size());
  size_t pay = huffman_encode(raw, ctx, out, false);
  REQUIRE(pay > 0);
  auto dec = huffman_decode(header_for(raw.size(), pay, false), {out.data(), pay}, &ctx);
  REQUIRE(dec.has_value());
  CHECK(*dec == raw);
}

TEST_CASE("hostile embedded codebooks are rejected") {
  std::vector<uint8_t> raw(100, 9);
  auto ctx = huffman_build_context(hist_of(raw));
  std::vector<uint8_t> out(kHuffCodebookBytes + 200);
  size_t payload = huffman_encode(raw, ctx, out, true);
  REQUIRE(payload > 0);

  SUBCASE("kraft violation") {
    // Three 1-bit codes cannot coexist.
    auto bad = out;
    bad[0] = 1;
    bad[1] = 1;
    bad[2] = 1;
    CHECK_FALSE(
        huffman_decode(header_for(100, payload, true), {bad.data(), payload}, nullptr).has_value());
  }
  SUBCASE("over-long length byte") {
    auto bad = out;
    bad[9] = 40;  // > kHuffMaxCodeLen
    CHECK_FALSE(
        huffman_decode(header_for(100, payload, true), {bad.data(), payload}, nullptr).has_value());
  }
  SUBCASE("truncated codebook") {
    CHECK_FALSE(huffman_decode(header_for(100, 100, true), {out.data(), 100}, nullptr).has_value());
  }
  SUBCASE("premature end of bitstream") {
    CHECK_FALSE(huffman_decode(header_for(100000, payload, true), {out.data(), payload}, nullptr)
                    .has_value());
  }
  SUBCASE("params mismatch") {
    FrameHeader h = header_for(100, payload, true);
    h.params = 0;
    CHECK_FALSE(huffman_decode(h, {out.data(), payload}, nullptr).has_value());
  }
  SUBCASE("shared decode without a context") {
    CHECK_FALSE(
        huffman_decode(header_for(100, payload, false), {out.data(), payload}, nullptr).has_value());
  }
}

TEST_CASE("expected length is nullopt when the context misses live bins") {
  std::array<uint64_t, 256> codeHist{};
  codeHist[1] = 4;
  codeHist[2] = 4;
  auto ctx = huffman_build_context(codeHist);
  std::array<uint64_t, 256> dataHist{};
  dataHist[1] = 2;
  dataHist[200] = 2;  // no code under ctx
  CHECK_FALSE(huffman_expected_code_len(ctx, dataHist).has_value());
}

}  // TEST_SUITE
