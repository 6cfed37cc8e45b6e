#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <span>
#include <tuple>
#include <vector>

#include "doctest.h"
#include "zcomm/collectives.hpp"
#include "zcomm/fixedlen.hpp"
#include "zcomm/huffman.hpp"

using namespace zcomm;

namespace {

std::vector<double> rank_input(int rank, size_t n) {
  std::mt19937_64 rng(1000 + rank);
  std::normal_distribution<double> nd(0.0, 1.0 + rank);
  std::vector<double> x(n);
  for (auto& v : x) v = nd(rng);
  return x;
}

// Serial reference for a shared-scale error-bounded allreduce.
std::vector<double> serial_allreduce_eb(const std::vector<std::vector<double>>& xs, double rel) {
  double gmax = 0.0;
  for (const auto& x : xs)
    for (double v : x) gmax = std::max(gmax, std::abs(v));
  double scale = gmax == 0.0 ? 1.0 : 2.0 * rel * gmax;
  QuantizedStream acc = eb_quantize_with_scale(xs[0], scale);
  for (size_t r = 1; r < xs.size(); ++r) {
    QuantizedStream q = eb_quantize_with_scale(xs[r], scale);
    for (size_t i = 0; i < acc.symbols.size(); ++i) acc.symbols[i] += q.symbols[i];
  }
  return dequantize(acc);
}

CollectiveConfig config_with_pin(CodecPin pin) {
  CollectiveConfig cfg;
  cfg.pin = pin;
  return cfg;
}

QuantizedStream eb_stream(std::vector<int32_t> syms, double scale) {
  QuantizedStream q;
  q.symbols = std::move(syms);
  q.meta.mode = QuantMode::ErrorBounded;
  q.meta.scale = scale;
  q.meta.levels = 0;
  q.meta.origRawBytes = 4 * q.symbols.size();
  return q;
}

}  // namespace

TEST_SUITE("collectives") {

TEST_CASE("single rank is the identity") {
  Communicator comm(1, {});
  comm.run([](RankCtx& ctx) {
    CHECK(ctx.nranks() == 1);
    auto q = eb_stream({5, -3, 7}, 0.25);
    ctx.allreduce(q);
    CHECK(q.symbols == std::vector<int32_t>{5, -3, 7});

    auto got = ctx.allgather(std::vector<int32_t>{1, 2});
    CHECK(got == std::vector<int32_t>{1, 2});

    auto a2a = ctx.alltoall(std::vector<int32_t>{9, 8});
    CHECK(a2a == std::vector<int32_t>{9, 8});

    std::vector<int32_t> b{4, 4};
    ctx.broadcast(b, 0);
    CHECK(b == std::vector<int32_t>{4, 4});

    CHECK(ctx.allreduce_max(3.5) == 3.5);
  });
  CHECK(comm.sim_time() == 0.0);
}

TEST_CASE("allreduce sums symbols under a common scale") {
  const int n = 4;
  Communicator comm(n, {});
  std::vector<std::vector<int32_t>> out(n);
  comm.run([&](RankCtx& ctx) {
    auto q = eb_stream({ctx.rank() + 1, -(ctx.rank() + 1), 100}, 1.0);
    ctx.allreduce(q);
    out[ctx.rank()] = q.symbols;
  });
  for (int r = 0; r < n; ++r) CHECK(out[r] == std::vector<int32_t>{10, -10, 400});
  CHECK(comm.sim_time() > 0.0);
}

TEST_CASE("allreduce_max rings the true maximum") {
  Communicator comm(3, {});
  std::vector<double> got(3);
  comm.run([&](RankCtx& ctx) { got[ctx.rank()] = ctx.allreduce_max(1.5 * ctx.rank() - 1.0); });
  for (double g : got) CHECK(g == 2.0);
}

TEST_CASE("scale reconciliation requantizes to the largest bin") {
  Communicator comm(2, {});
  std::vector<QuantizedStream> out(2);
  comm.run([&](RankCtx& ctx) {
    QuantizedStream q = ctx.rank() == 0 ? eb_stream({10, -6, 3, 7}, 0.5)
                                        : eb_stream({1, 2, 3, 4}, 1.0);
    ctx.allreduce(q);
    out[ctx.rank()] = std::move(q);
  });
  // Rank 0's symbols shrink by 0.5 with llround (1.5 -> 2, 3.5 -> 4) before
  // the sum.
  for (const auto& q : out) {
    CHECK(q.meta.scale == 1.0);
    CHECK(q.symbols == std::vector<int32_t>{6, -1, 5, 8});
  }
}

TEST_CASE("mismatched streams abort the collective") {
  Communicator comm(2, {});
  CHECK_THROWS_AS(comm.run([&](RankCtx& ctx) {
    std::vector<double> x{1.0, -2.0, 3.0, 4.0};
    ctx.allreduce_qsgd(x, ctx.rank() == 0 ? 4 : 8, 42);
  }),
                  std::invalid_argument);
}

TEST_CASE("symbol overflow aborts, and the communicator survives") {
  Communicator comm(2, {});
  CHECK_THROWS_AS(comm.run([&](RankCtx& ctx) {
    auto q = eb_stream(std::vector<int32_t>(8, std::numeric_limits<int32_t>::max()), 1.0);
    ctx.allreduce(q);
  }),
                  std::overflow_error);

  // Fresh epoch: the same communicator still works.
  std::vector<std::vector<int32_t>> out(2);
  comm.run([&](RankCtx& ctx) {
    auto q = eb_stream({1, 2}, 1.0);
    ctx.allreduce(q);
    out[ctx.rank()] = q.symbols;
  });
  CHECK(out[0] == std::vector<int32_t>{2, 4});
  CHECK(out[1] == std::vector<int32_t>{2, 4});
}

TEST_CASE("allreduce is bit-identical across codec pins and matches serial") {
  const double rel = 1.0e-3;
  for (int n : {2, 4}) {
    std::vector<std::vector<double>> xs;
    for (int r = 0; r < n; ++r) xs.push_back(rank_input(r, 5000));
    std::vector<double> oracle = serial_allreduce_eb(xs, rel);

    // Prime the shared code from rank 0's quantized bytes.
    double gmax = 0.0;
    for (const auto& x : xs)
      for (double v : x) gmax = std::max(gmax, std::abs(v));
    QuantizedStream q0 = eb_quantize_with_scale(xs[0], 2.0 * rel * gmax);
    std::span<const uint8_t> sample{reinterpret_cast<const uint8_t*>(q0.symbols.data()),
                                    4 * q0.symbols.size()};

    for (CodecPin pin : {CodecPin::Raw, CodecPin::FixedLen, CodecPin::Huffman, CodecPin::Auto}) {
      Communicator comm(n, config_with_pin(pin));
      comm.set_shared_huffman_from_bytes(sample);
      std::vector<std::vector<double>> out(n);
      comm.run([&](RankCtx& ctx) { out[ctx.rank()] = ctx.allreduce_eb(xs[ctx.rank()], rel); });
      for (int r = 0; r < n; ++r) {
        REQUIRE(out[r].size() == oracle.size());
        CHECK(std::memcmp(out[r].data(), oracle.data(), oracle.size() * 8) == 0);
      }
    }
  }
}

TEST_CASE("pinned codecs actually reach the wire") {
  std::vector<std::vector<double>> xs{rank_input(0, 4000), rank_input(1, 4000)};
  QuantizedStream q0 = eb_quantize_with_scale(xs[0], 0.01);
  std::span<const uint8_t> sample{reinterpret_cast<const uint8_t*>(q0.symbols.data()),
                                  4 * q0.symbols.size()};

  auto frames_for = [&](CodecPin pin) {
    Communicator comm(2, config_with_pin(pin));
    comm.set_shared_huffman_from_bytes(sample);
    comm.run([&](RankCtx& ctx) { ctx.allreduce_eb(xs[ctx.rank()], 1.0e-3); });
    return comm.wire_stats();
  };

  WireStats raw = frames_for(CodecPin::Raw);
  CHECK(raw.framesByCodec[size_t(CodecId::Raw)] > 0);
  CHECK(raw.framesByCodec[size_t(CodecId::FixedLen)] == 0);
  CHECK(raw.framesByCodec[size_t(CodecId::Huffman)] == 0);
  CHECK(raw.payloadBytes == raw.rawBytes);

  WireStats fl = frames_for(CodecPin::FixedLen);
  CHECK(fl.framesByCodec[size_t(CodecId::FixedLen)] > 0);
  CHECK(fl.framesByCodec[size_t(CodecId::Huffman)] == 0);
  CHECK(fl.payloadBytes < fl.rawBytes);

  WireStats hf = frames_for(CodecPin::Huffman);
  CHECK(hf.framesByCodec[size_t(CodecId::Huffman)] > 0);
}

TEST_CASE("wire stats account every byte") {
  Communicator comm(2, config_with_pin(CodecPin::Raw));
  std::vector<std::vector<double>> xs{rank_input(0, 3000), rank_input(1, 3000)};
  comm.run([&](RankCtx& ctx) { ctx.allreduce_eb(xs[ctx.rank()], 1.0e-3); });
  WireStats s = comm.wire_stats();
  uint64_t frames = s.framesByCodec[0] + s.framesByCodec[1] + s.framesByCodec[2];
  CHECK(frames > 0);
  CHECK(s.totalBytes == s.payloadBytes + frames * kHeaderBytes);
  CHECK(s.exposedCodecSimSec >= 0.0);
  CHECK(s.wallCodecSec >= 0.0);

  comm.reset_stats();
  WireStats z = comm.wire_stats();
  CHECK(z.totalBytes == 0);
  CHECK(z.framesByCodec[0] == 0);
}

TEST_CASE("point-to-point batches a large message") {
  Communicator comm(2, {});
  std::mt19937_64 rng(7);
  std::vector<int32_t> src(3ull << 20);  // 12 MiB raw
  for (auto& v : src) v = static_cast<int32_t>(rng() % 100) - 50;
  std::vector<int32_t> dst(src.size());
  std::span<const uint8_t> rawBytes{reinterpret_cast<const uint8_t*>(src.data()), 4 * src.size()};
  std::span<uint8_t> dstBytes{reinterpret_cast<uint8_t*>(dst.data()), 4 * dst.size()};

  comm.run([&](RankCtx& ctx) {
    if (ctx.rank() == 0)
      ctx.send_encoded(1, rawBytes);
    else
      ctx.recv_decoded(0, dstBytes);
  });

  CHECK(dst == src);
  WireStats s = comm.wire_stats();
  CHECK(s.framesByCodec[0] + s.framesByCodec[1] + s.framesByCodec[2] == 3);
  // Narrow symbols, no shared context: the selector lands on fixedlen.
  CHECK(s.framesByCodec[size_t(CodecId::FixedLen)] == 3);
  CHECK(s.rawBytes == 12ull << 20);
  CHECK(s.payloadBytes < (12ull << 20) / 4);
  CHECK(comm.sim_time() > 0.0);
}

TEST_CASE("per-slot framing carries the same data in more frames") {
  CollectiveConfig cfg;
  cfg.perSlotFraming = true;
  cfg.pin = CodecPin::Raw;
  Communicator comm(2, cfg);
  std::vector<uint8_t> raw(3ull << 20);
  for (size_t i = 0; i < raw.size(); ++i) raw[i] = static_cast<uint8_t>(i * 31);
  std::vector<uint8_t> dst(raw.size());

  comm.run([&](RankCtx& ctx) {
    if (ctx.rank() == 0)
      ctx.send_encoded(1, raw);
    else
      ctx.recv_decoded(0, dst);
  });
  CHECK(dst == raw);
  WireStats s = comm.wire_stats();
  CHECK(s.framesByCodec[size_t(CodecId::Raw)] == 6);  // 3 MiB in 512 KiB chunks
}

TEST_CASE("allgather concatenates blocks in rank order") {
  const int n = 4;
  for (CodecPin pin : {CodecPin::Raw, CodecPin::Auto}) {
    Communicator comm(n, config_with_pin(pin));
    std::vector<std::vector<int32_t>> out(n);
    comm.run([&](RankCtx& ctx) {
      std::vector<int32_t> block(50);
      for (size_t i = 0; i < block.size(); ++i)
        block[i] = 100 * ctx.rank() + static_cast<int32_t>(i);
      out[ctx.rank()] = ctx.allgather(block);
    });
    for (int r = 0; r < n; ++r) {
      REQUIRE(out[r].size() == 200);
      for (int s = 0; s < n; ++s)
        for (int i = 0; i < 50; ++i) CHECK(out[r][size_t(s) * 50 + i] == 100 * s + i);
    }
  }
}

TEST_CASE("alltoall routes block j to rank j") {
  const int n = 3;
  Communicator comm(n, {});
  const int bc = 40;
  std::vector<std::vector<int32_t>> out(n);
  comm.run([&](RankCtx& ctx) {
    std::vector<int32_t> send(size_t(n) * bc);
    for (int to = 0; to < n; ++to)
      for (int i = 0; i < bc; ++i)
        send[size_t(to) * bc + i] = 10000 * ctx.rank() + 100 * to + i;
    out[ctx.rank()] = ctx.alltoall(send);
  });
  for (int r = 0; r < n; ++r) {
    REQUIRE(out[r].size() == size_t(n) * bc);
    for (int from = 0; from < n; ++from)
      for (int i = 0; i < bc; ++i)
        CHECK(out[r][size_t(from) * bc + i] == 10000 * from + 100 * r + i);
  }
}

TEST_CASE("alltoall requires even blocks") {
  Communicator comm(2, {});
  CHECK_THROWS_AS(comm.run([&](RankCtx& ctx) {
    std::vector<int32_t> send{1, 2, 3};
    ctx.alltoall(send);
  }),
                  std::invalid_argument);
}

TEST_CASE("broadcast replicates the root buffer") {
  const int n = 4;
  std::vector<int32_t> pattern(3000);
  std::mt19937_64 rng(11);
  for (auto& v : pattern) v = static_cast<int32_t>(rng());

  for (int root : {0, 2, 3}) {
    Communicator comm(n, {});
    std::vector<std::vector<int32_t>> bufs(n, std::vector<int32_t>(pattern.size(), 0));
    bufs[root] = pattern;
    comm.run([&](RankCtx& ctx) { ctx.broadcast(bufs[ctx.rank()], root); });
    for (int r = 0; r < n; ++r) CHECK(bufs[r] == pattern);
  }

  Communicator comm(n, {});
  CHECK_THROWS_AS(comm.run([&](RankCtx& ctx) {
    std::vector<int32_t> b{1};
    ctx.broadcast(b, 7);
  }),
                  std::invalid_argument);
}

TEST_CASE("grouped submission matches one-by-one execution") {
  const int n = 2;
  std::vector<int32_t> bcastSrc(64);
  for (size_t i = 0; i < bcastSrc.size(); ++i) bcastSrc[i] = static_cast<int32_t>(7 * i + 1);

  auto run_mode = [&](bool grouped) {
    Communicator comm(n, {});
    std::vector<QuantizedStream> qs(n);
    std::vector<std::vector<int32_t>> gathered(n);
    std::vector<std::vector<int32_t>> bcast(n);
    comm.run([&](RankCtx& ctx) {
      int r = ctx.rank();
      qs[r] = eb_stream({r + 1, 2 * r, -r, 5}, 1.0);
      std::vector<int32_t> block{r * 10, r * 10 + 1};
      bcast[r] = r == 1 ? bcastSrc : std::vector<int32_t>(bcastSrc.size(), 0);
      if (grouped) {
        std::vector<CollectiveRequest> reqs(3);
        reqs[0].op = CollOp::AllReduce;
        reqs[0].stream = &qs[r];
        reqs[1].op = CollOp::AllGather;
        reqs[1].sendSyms = block;
        reqs[1].received = &gathered[r];
        reqs[2].op = CollOp::Broadcast;
        reqs[2].data = bcast[r];
        reqs[2].root = 1;
        group_execute(ctx, reqs);
      } else {
        ctx.allreduce(qs[r]);
        gathered[r] = ctx.allgather(block);
        ctx.broadcast(bcast[r], 1);
      }
    });
    return std::tuple{qs[0].symbols, gathered[0], bcast[0]};
  };

  CHECK(run_mode(true) == run_mode(false));

  // Empty group is a no-op; a malformed request aborts.
  Communicator comm(1, {});
  comm.run([](RankCtx& ctx) {
    group_execute(ctx, {});
    std::vector<CollectiveRequest> bad(1);
    bad[0].op = CollOp::AllReduce;
    bad[0].stream = nullptr;
    CHECK_THROWS_AS(group_execute(ctx, bad), std::invalid_argument);
  });
}

TEST_CASE("qsgd allreduce matches the requantize-and-sum reference") {
  const int n = 2;
  const uint32_t levels = 64;
  std::vector<std::vector<double>> xs{rank_input(0, 300), rank_input(1, 300)};

  // Reference: quantize per rank, adopt the largest norm, shrink symbols with
  // llround, sum, dequantize.
  QuantizedStream a = qsgd_quantize(xs[0], levels, 900);
  QuantizedStream b = qsgd_quantize(xs[1], levels, 901);
  double shared = std::max(a.meta.scale, b.meta.scale);
  for (QuantizedStream* q : {&a, &b}) {
    if (q->meta.scale != shared && q->meta.scale > 0.0) {
      double f = q->meta.scale / shared;
      for (int32_t& s : q->symbols) s = static_cast<int32_t>(std::llround(s * f));
      q->meta.scale = shared;
    }
  }
  for (size_t i = 0; i < a.symbols.size(); ++i) a.symbols[i] += b.symbols[i];
  std::vector<double> expect = dequantize(a);

  Communicator comm(n, {});
  std::vector<std::vector<double>> out(n);
  comm.run([&](RankCtx& ctx) {
    out[ctx.rank()] = ctx.allreduce_qsgd(xs[ctx.rank()], levels, 900 + ctx.rank());
  });
  for (int r = 0; r < n; ++r) {
    CHECK(out[r].size() == expect.size());
    CHECK(std::memcmp(out[r].data(), expect.data(), expect.size() * 8) == 0);
  }
}

TEST_CASE("undecodable frames fall back to verbatim payload delivery") {
  // Mirror of the receiver dispatch: a frame whose header fails validation
  // must deliver its payload region untouched instead of crashing.
  std::vector<int32_t> syms(2000);
  for (size_t i = 0; i < syms.size(); ++i) syms[i] = static_cast<int32_t>(i % 17) - 8;
  std::vector<uint8_t> bank(kStageBankBytes);
  std::span<const uint8_t> chunk{reinterpret_cast<const uint8_t*>(syms.data()), 4 * syms.size()};
  ArbitrationConfig arb;
  arb.smallBatchThresholdBytes = 0;
  EncodeResult er = encode_best(chunk, bank, {Regime::InterNode, 1.0e9}, nullptr, arb);
  REQUIRE(er.codec == CodecId::FixedLen);

  std::vector<uint8_t> frame(bank.begin(), bank.begin() + er.totalBytes);
  frame[0] ^= 0x5A;  // corrupt the magic

  std::vector<uint8_t> dst(chunk.size(), 0xEE);
  auto ph = parse_header(frame);
  bool decoded = false;
  if (ph && validate_header(*ph, frame.size()) && ph->rawBytes == dst.size()) decoded = true;
  REQUIRE_FALSE(decoded);
  size_t have = frame.size() - kHeaderBytes;
  std::memcpy(dst.data(), frame.data() + kHeaderBytes, std::min(dst.size(), have));

  // Payload region arrived verbatim; the tail kept its previous contents.
  CHECK(std::memcmp(dst.data(), frame.data() + kHeaderBytes, have) == 0);
  for (size_t i = have; i < dst.size(); ++i) CHECK(dst[i] == 0xEE);
}

TEST_CASE("serialized overlap charges full codec time to the clocks") {
  std::vector<std::vector<double>> xs{rank_input(0, 64 * 1024), rank_input(1, 64 * 1024)};
  auto sim_for = [&](OverlapMode mode) {
    CollectiveConfig cfg;
    cfg.overlap = mode;
    cfg.pin = CodecPin::FixedLen;
    Communicator comm(2, cfg);
    comm.run([&](RankCtx& ctx) { ctx.allreduce_eb(xs[ctx.rank()], 1.0e-3); });
    return comm.sim_time();
  };
  double pipelined = sim_for(OverlapMode::Pipelined);
  double serialized = sim_for(OverlapMode::Serialized);
  CHECK(pipelined > 0.0);
  CHECK(serialized > pipelined);
}

}  // TEST_SUITE
