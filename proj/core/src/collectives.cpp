#include "zcomm/collectives.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <exception>
#include <limits>
#include <stdexcept>
#include <thread>

#include "zcomm/fixedlen.hpp"
#include "zcomm/huffman.hpp"

namespace zcomm {
namespace {

using wall_clock = std::chrono::steady_clock;

std::span<const uint8_t> as_bytes_span(std::span<const int32_t> s) {
  return {reinterpret_cast<const uint8_t*>(s.data()), s.size() * sizeof(int32_t)};
}

std::span<uint8_t> as_bytes_span(std::span<int32_t> s) {
  return {reinterpret_cast<uint8_t*>(s.data()), s.size() * sizeof(int32_t)};
}

// Fixed 24-byte little-endian record exchanged before a quantized allreduce.
struct StreamMeta {
  uint8_t mode = 0;
  uint32_t levels = 0;
  uint64_t count = 0;
  double scale = 1.0;
};

constexpr size_t kMetaBytes = 24;

void pack_meta(const StreamMeta& m, uint8_t* p) {
  std::memset(p, 0, kMetaBytes);
  p[0] = m.mode;
  for (int i = 0; i < 4; ++i) p[4 + i] = static_cast<uint8_t>(m.levels >> (8 * i));
  for (int i = 0; i < 8; ++i) p[8 + i] = static_cast<uint8_t>(m.count >> (8 * i));
  uint64_t bits;
  std::memcpy(&bits, &m.scale, 8);
  for (int i = 0; i < 8; ++i) p[16 + i] = static_cast<uint8_t>(bits >> (8 * i));
}

StreamMeta unpack_meta(const uint8_t* p) {
  StreamMeta m;
  m.mode = p[0];
  for (int i = 0; i < 4; ++i) m.levels |= static_cast<uint32_t>(p[4 + i]) << (8 * i);
  m.count = 0;
  for (int i = 0; i < 8; ++i) m.count |= static_cast<uint64_t>(p[8 + i]) << (8 * i);
  uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(p[16 + i]) << (8 * i);
  std::memcpy(&m.scale, &bits, 8);
  return m;
}

}  // namespace

struct Communicator::RankStatsBlock {
  alignas(64) WireStats s;
};

Communicator::Communicator(int nranks, CollectiveConfig cfg)
    : nranks_(nranks), cfg_(cfg) {
  if (nranks < 1) throw std::invalid_argument("communicator needs at least one rank");
  // A serialized launch leaves all codec time on the critical path; the
  // selector must price batches the same way the clocks will charge them.
  if (cfg_.overlap == OverlapMode::Serialized) {
    cfg_.arb.lamEnc = 1.0;
    cfg_.arb.lamDec = 1.0;
  }
  size_t n = static_cast<size_t>(nranks);
  links_.resize(n * n);
  staging_.resize(n * n);
  for (size_t from = 0; from < n; ++from) {
    for (size_t to = 0; to < n; ++to) {
      if (from == to) continue;
      links_[from * n + to] = std::make_unique<Connection>(cfg_.net);
      staging_[from * n + to] = std::make_unique<ChannelState>();
    }
  }
  clocks_.assign(n, 0.0);
  stats_.reserve(n);
  for (size_t r = 0; r < n; ++r) stats_.push_back(std::make_unique<RankStatsBlock>());
}

Communicator::~Communicator() = default;

void Communicator::set_shared_huffman(std::span<const uint64_t> hist256) {
  HuffmanContext ctx = huffman_build_context(hist256);
  if (!ctx.valid) throw std::invalid_argument("histogram yields no usable code");
  sharedCtx_ = std::move(ctx);
  hasSharedCtx_ = true;
}

void Communicator::set_shared_huffman_from_bytes(std::span<const uint8_t> sample) {
  // +1 smoothing: every byte value gets a code, so any batch stays encodable
  // under the shared context.
  std::array<uint64_t, 256> hist;
  hist.fill(1);
  for (uint8_t b : sample) hist[b]++;
  set_shared_huffman(hist);
}

const HuffmanContext* Communicator::shared_huffman() const {
  return hasSharedCtx_ ? &sharedCtx_ : nullptr;
}

Connection& Communicator::link(int from, int to) {
  return *links_[static_cast<size_t>(from) * nranks_ + to];
}

ChannelState& Communicator::staging(int from, int to) {
  return *staging_[static_cast<size_t>(from) * nranks_ + to];
}

Communicator::RankStatsBlock& Communicator::stats_for(int rank) {
  return *stats_[static_cast<size_t>(rank)];
}

void Communicator::run(const std::function<void(RankCtx&)>& body) {
  for (auto& l : links_)
    if (l) l->reset_sim();
  for (auto& s : staging_)
    if (s) s->reset();
  std::fill(clocks_.begin(), clocks_.end(), 0.0);

  if (nranks_ == 1) {
    RankCtx ctx(this, 0, &clocks_[0]);
    body(ctx);
    return;
  }

  std::vector<std::exception_ptr> errors(static_cast<size_t>(nranks_));
  std::vector<std::thread> workers;
  workers.reserve(static_cast<size_t>(nranks_));
  for (int r = 0; r < nranks_; ++r) {
    workers.emplace_back([this, &body, &errors, r] {
      try {
        RankCtx ctx(this, r, &clocks_[static_cast<size_t>(r)]);
        body(ctx);
      } catch (...) {
        errors[static_cast<size_t>(r)] = std::current_exception();
        for (auto& l : links_)
          if (l) l->poison();
      }
    });
  }
  for (auto& w : workers) w.join();

  // Prefer the root cause over the poison cascade it triggered.
  std::exception_ptr poisonErr;
  for (auto& e : errors) {
    if (!e) continue;
    try {
      std::rethrow_exception(e);
    } catch (const LinkPoisoned&) {
      poisonErr = e;
    } catch (...) {
      std::rethrow_exception(e);
    }
  }
  if (poisonErr) std::rethrow_exception(poisonErr);
}

double Communicator::sim_time() const {
  double t = 0.0;
  for (double c : clocks_) t = std::max(t, c);
  return t;
}

WireStats Communicator::wire_stats() const {
  WireStats agg;
  for (const auto& b : stats_) {
    for (int c = 0; c < 3; ++c) agg.framesByCodec[c] += b->s.framesByCodec[c];
    agg.rawBytes += b->s.rawBytes;
    agg.payloadBytes += b->s.payloadBytes;
    agg.totalBytes += b->s.totalBytes;
    agg.wallCodecSec += b->s.wallCodecSec;
    agg.exposedCodecSimSec += b->s.exposedCodecSimSec;
  }
  return agg;
}

void Communicator::reset_stats() {
  for (auto& b : stats_) b->s = WireStats{};
}

RankCtx::RankCtx(Communicator* comm, int rank, double* clock)
    : comm_(comm), rank_(rank), clock_(clock) {}

int RankCtx::nranks() const { return comm_->nranks(); }

uint64_t RankCtx::chunk_raw_bytes() const {
  return comm_->config().perSlotFraming ? kSlotBytes : kBatchRawBytes;
}

void RankCtx::send_batch(int peer, std::span<const uint8_t> chunk, CodecPin pin) {
  if (chunk.empty()) return;  // zero-length batches never reach the receiver
  const CollectiveConfig& cfg = comm_->config();
  const ArbitrationConfig& arb = cfg.arb;
  const HuffmanContext* ctx = comm_->shared_huffman();
  Connection& conn = comm_->link(rank_, peer);
  ChannelState& st = comm_->staging(rank_, peer);

  uint64_t id = st.next_batch_id();
  std::span<uint8_t> bank = st.acquire_bank(id);

  auto t0 = wall_clock::now();
  EncodeResult er;
  switch (pin) {
    case CodecPin::Auto:
      er = encode_best(chunk, bank, hint_from_network(cfg.net), ctx, arb);
      break;
    case CodecPin::Raw: {
      size_t total = frame_commit_raw(chunk, bank);
      if (total > 0) er = {CodecId::Raw, chunk.size(), total};
      break;
    }
    case CodecPin::FixedLen: {
      std::span<uint8_t> dst = bank.subspan(kHeaderBytes);
      if (chunk.size() >= 4 && chunk.size() % 4 == 0 &&
          reinterpret_cast<uintptr_t>(chunk.data()) % alignof(int32_t) == 0) {
        std::span<const int32_t> syms{reinterpret_cast<const int32_t*>(chunk.data()),
                                      chunk.size() / 4};
        unsigned width = 0;
        size_t payload = fixedlen_encode(syms, dst, &width);
        if (payload > 0) {
          FrameHeader h;
          h.codec = CodecId::FixedLen;
          h.rawBytes = chunk.size();
          h.payloadBytes = payload;
          h.params = width;
          write_header(h, bank);
          er = {CodecId::FixedLen, payload, kHeaderBytes + payload};
        }
      }
      if (er.totalBytes == 0) {
        size_t total = frame_commit_raw(chunk, bank);
        if (total > 0) er = {CodecId::Raw, chunk.size(), total};
      }
      break;
    }
    case CodecPin::Huffman: {
      std::span<uint8_t> dst = bank.subspan(kHeaderBytes);
      HuffmanContext own;
      const HuffmanContext* use = ctx;
      if (arb.embedCodebook) {
        std::array<uint64_t, 256> hist{};
        for (uint8_t b : chunk) hist[b]++;
        own = huffman_build_context(hist);
        use = &own;
      }
      if (use != nullptr && use->valid) {
        size_t payload = huffman_encode(chunk, *use, dst, arb.embedCodebook);
        if (payload > 0) {
          FrameHeader h;
          h.codec = CodecId::Huffman;
          h.flags = arb.embedCodebook ? kFlagEmbeddedCodebook : 0;
          h.rawBytes = chunk.size();
          h.payloadBytes = payload;
          h.params = arb.embedCodebook ? kHuffCodebookBytes : 0;
          write_header(h, bank);
          er = {CodecId::Huffman, payload, kHeaderBytes + payload};
        }
      }
      if (er.totalBytes == 0) {
        size_t total = frame_commit_raw(chunk, bank);
        if (total > 0) er = {CodecId::Raw, chunk.size(), total};
      }
      break;
    }
  }
  auto t1 = wall_clock::now();
  if (er.totalBytes == 0) {
    st.release_bank(id);
    throw std::runtime_error("staging capacity exhausted; batch cannot ship even raw");
  }

  const CodecCost& cost = arb.cost.for_codec(er.codec);
  double encFull =
      cost.encBytesPerSec > 0.0 ? static_cast<double>(chunk.size()) / cost.encBytesPerSec : 0.0;
  double exposed = cost.alphaSec + arb.lamEnc * encFull;
  *clock_ += exposed;

  unsigned span = cfg.perSlotFraming ? slot_span_for_payload(er.payloadBytes)
                                     : kSlotsPerChannel;
  conn.wait_slots_free(span);
  conn.enqueue_frame({bank.data(), er.totalBytes}, *clock_, span);
  st.release_bank(id);

  WireStats& s = comm_->stats_for(rank_).s;
  s.framesByCodec[static_cast<size_t>(er.codec)]++;
  s.rawBytes += chunk.size();
  s.payloadBytes += er.payloadBytes;
  s.totalBytes += er.totalBytes;
  s.wallCodecSec += std::chrono::duration<double>(t1 - t0).count();
  s.exposedCodecSimSec += exposed;
}

void RankCtx::recv_batch(int peer, std::span<uint8_t> dst) {
  if (dst.empty()) return;
  const ArbitrationConfig& arb = comm_->config().arb;
  Connection& conn = comm_->link(peer, rank_);
  FrameMsg msg = conn.dequeue_frame(*clock_);

  CodecId codec = CodecId::Raw;
  bool decoded = false;
  auto t0 = wall_clock::now();
  auto ph = parse_header(msg.bytes);
  if (ph && validate_header(*ph, msg.bytes.size()) && ph->rawBytes == dst.size()) {
    std::span<const uint8_t> payload{msg.bytes.data() + kHeaderBytes, ph->payloadBytes};
    switch (ph->codec) {
      case CodecId::Raw:
        std::memcpy(dst.data(), payload.data(), dst.size());
        decoded = true;
        break;
      case CodecId::FixedLen:
        decoded = fixedlen_decode_into(*ph, payload, dst);
        break;
      case CodecId::Huffman:
        decoded = huffman_decode_into(*ph, payload, comm_->shared_huffman(), dst);
        break;
    }
    if (decoded) codec = ph->codec;
  }
  if (!decoded) {
    // Unintelligible or undecodable frame: deliver the payload region
    // verbatim, raw semantics.
    size_t have = msg.bytes.size() > kHeaderBytes ? msg.bytes.size() - kHeaderBytes : 0;
    std::memcpy(dst.data(), msg.bytes.data() + kHeaderBytes, std::min(dst.size(), have));
    codec = CodecId::Raw;
  }
  auto t1 = wall_clock::now();

  const CodecCost& cost = arb.cost.for_codec(codec);
  double decFull =
      cost.decBytesPerSec > 0.0 ? static_cast<double>(dst.size()) / cost.decBytesPerSec : 0.0;
  double exposed = arb.lamDec * decFull;
  *clock_ += exposed;

  WireStats& s = comm_->stats_for(rank_).s;
  s.wallCodecSec += std::chrono::duration<double>(t1 - t0).count();
  s.exposedCodecSimSec += exposed;
}

void RankCtx::send_encoded(int peer, std::span<const uint8_t> raw) {
  uint64_t step = chunk_raw_bytes();
  for (uint64_t off = 0; off < raw.size(); off += step) {
    uint64_t len = std::min<uint64_t>(step, raw.size() - off);
    send_batch(peer, raw.subspan(off, len), comm_->config().pin);
  }
}

void RankCtx::recv_decoded(int peer, std::span<uint8_t> dst) {
  uint64_t step = chunk_raw_bytes();
  for (uint64_t off = 0; off < dst.size(); off += step) {
    uint64_t len = std::min<uint64_t>(step, dst.size() - off);
    recv_batch(peer, dst.subspan(off, len));
  }
}

struct RankCtx::BatchIo {
  // Lockstep pairwise exchange: one batch out, one batch in, repeated. Every
  // rank alternating send/recv keeps the credit window from ever holding two
  // blocked producers, so rings and round-robin exchanges cannot deadlock.
  static void exchange(RankCtx& ctx, int peerTo, std::span<const uint8_t> out, int peerFrom,
                       std::span<uint8_t> in, CodecPin pin,
                       const std::function<void(std::span<const uint8_t>, uint64_t)>& sink) {
    uint64_t step = ctx.chunk_raw_bytes();
    uint64_t nbOut = out.empty() ? 0 : (out.size() + step - 1) / step;
    uint64_t nbIn = in.empty() ? 0 : (in.size() + step - 1) / step;
    std::vector<uint8_t> scratch;
    if (sink && nbIn > 0) scratch.resize(std::min<uint64_t>(step, in.size()));
    for (uint64_t b = 0; b < std::max(nbOut, nbIn); ++b) {
      if (b < nbOut) {
        uint64_t off = b * step;
        uint64_t len = std::min<uint64_t>(step, out.size() - off);
        ctx.send_batch(peerTo, out.subspan(off, len), pin);
      }
      if (b < nbIn) {
        uint64_t off = b * step;
        uint64_t len = std::min<uint64_t>(step, in.size() - off);
        if (sink) {
          ctx.recv_batch(peerFrom, {scratch.data(), len});
          sink({scratch.data(), len}, off);
        } else {
          ctx.recv_batch(peerFrom, in.subspan(off, len));
        }
      }
    }
  }
};

double RankCtx::allreduce_max(double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("allreduce_max requires finite input");
  int n = nranks();
  if (n == 1) return v;
  std::vector<double> all(static_cast<size_t>(n), 0.0);
  all[static_cast<size_t>(rank_)] = v;
  int next = (rank_ + 1) % n;
  int prev = (rank_ - 1 + n) % n;
  for (int t = 0; t < n - 1; ++t) {
    size_t sIdx = static_cast<size_t>((rank_ - t + n) % n);
    size_t rIdx = static_cast<size_t>((rank_ - t - 1 + n) % n);
    uint8_t outB[8], inB[8];
    uint64_t bits;
    std::memcpy(&bits, &all[sIdx], 8);
    for (int i = 0; i < 8; ++i) outB[i] = static_cast<uint8_t>(bits >> (8 * i));
    BatchIo::exchange(*this, next, {outB, 8}, prev, {inB, 8}, CodecPin::Raw, nullptr);
    bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(inB[i]) << (8 * i);
    std::memcpy(&all[rIdx], &bits, 8);
  }
  double m = all[0];
  for (double x : all) m = std::max(m, x);
  return m;
}

void RankCtx::allreduce(QuantizedStream& q) {
  int n = nranks();
  if (n == 1 || q.symbols.empty()) return;
  const CollectiveConfig& cfg = comm_->config();

  // Scale reconciliation: exchange stream metadata, adopt the largest scale,
  // and requantize local symbols so integer sums share one dequantization.
  StreamMeta mine;
  mine.mode = static_cast<uint8_t>(q.meta.mode);
  mine.levels = q.meta.levels;
  mine.count = q.symbols.size();
  mine.scale = q.meta.scale;

  std::vector<uint8_t> metas(static_cast<size_t>(n) * kMetaBytes);
  pack_meta(mine, metas.data() + static_cast<size_t>(rank_) * kMetaBytes);
  int next = (rank_ + 1) % n;
  int prev = (rank_ - 1 + n) % n;
  for (int t = 0; t < n - 1; ++t) {
    size_t sIdx = static_cast<size_t>((rank_ - t + n) % n);
    size_t rIdx = static_cast<size_t>((rank_ - t - 1 + n) % n);
    BatchIo::exchange(*this, next, {metas.data() + sIdx * kMetaBytes, kMetaBytes}, prev,
                      {metas.data() + rIdx * kMetaBytes, kMetaBytes}, CodecPin::Raw, nullptr);
  }

  double sharedScale = mine.scale;
  for (int r = 0; r < n; ++r) {
    StreamMeta m = unpack_meta(metas.data() + static_cast<size_t>(r) * kMetaBytes);
    if (m.mode != mine.mode || m.levels != mine.levels || m.count != mine.count)
      throw std::invalid_argument("ranks supplied mismatched streams to allreduce");
    sharedScale = std::max(sharedScale, m.scale);
  }
  if (sharedScale != q.meta.scale && q.meta.scale > 0.0) {
    double f = q.meta.scale / sharedScale;  // <= 1, symbols shrink
    for (int32_t& s : q.symbols) s = static_cast<int32_t>(std::llround(s * f));
    q.meta.scale = sharedScale;
  }

  // Codec work inside fused reduce steps sits on the reduction critical
  // path; below the size gate those steps ship raw.
  uint64_t msgBytes = q.symbols.size() * sizeof(int32_t);
  CodecPin fusedPin = msgBytes >= cfg.fusedCodecMinMsgBytes ? cfg.pin : CodecPin::Raw;

  auto chunkLo = [&](int c) {
    return static_cast<uint64_t>(c) * q.symbols.size() / static_cast<uint64_t>(n);
  };
  std::span<int32_t> syms{q.symbols.data(), q.symbols.size()};

  // Reduce-scatter: after step t each rank has accumulated one more rank's
  // contribution into chunk (rank - t - 1); fused recv+reduce+send shape.
  for (int t = 0; t < n - 1; ++t) {
    int sC = (rank_ - t + n) % n;
    int rC = (rank_ - t - 1 + n) % n;
    std::span<int32_t> sendChunk = syms.subspan(chunkLo(sC), chunkLo(sC + 1) - chunkLo(sC));
    std::span<int32_t> recvChunk = syms.subspan(chunkLo(rC), chunkLo(rC + 1) - chunkLo(rC));
    BatchIo::exchange(
        *this, next, as_bytes_span(std::span<const int32_t>(sendChunk)), prev,
        as_bytes_span(recvChunk), fusedPin,
        [&](std::span<const uint8_t> batch, uint64_t byteOff) {
          size_t base = byteOff / 4;
          const int32_t* in = reinterpret_cast<const int32_t*>(batch.data());
          size_t cnt = batch.size() / 4;
          for (size_t i = 0; i < cnt; ++i) {
            int64_t sum = static_cast<int64_t>(recvChunk[base + i]) + in[i];
            if (sum > std::numeric_limits<int32_t>::max() ||
                sum < std::numeric_limits<int32_t>::min())
              throw std::overflow_error("symbol sum exceeds 32-bit range");
            recvChunk[base + i] = static_cast<int32_t>(sum);
          }
        });
  }

  // Allgather: circulate the fully reduced chunks.
  for (int t = 0; t < n - 1; ++t) {
    int sC = (rank_ + 1 - t + n) % n;
    int rC = (rank_ - t + n) % n;
    std::span<int32_t> sendChunk = syms.subspan(chunkLo(sC), chunkLo(sC + 1) - chunkLo(sC));
    std::span<int32_t> recvChunk = syms.subspan(chunkLo(rC), chunkLo(rC + 1) - chunkLo(rC));
    BatchIo::exchange(*this, next, as_bytes_span(std::span<const int32_t>(sendChunk)), prev,
                      as_bytes_span(recvChunk), cfg.pin, nullptr);
  }
}

std::vector<double> RankCtx::allreduce_eb(std::span<const double> x, double rel) {
  double amax = 0.0;
  for (double v : x) {
    if (!std::isfinite(v)) throw std::invalid_argument("input must be finite");
    amax = std::max(amax, std::abs(v));
  }
  double gmax = allreduce_max(amax);
  double scale = gmax == 0.0 ? 1.0 : 2.0 * rel * gmax;
  QuantizedStream q = eb_quantize_with_scale(x, scale);
  allreduce(q);
  return dequantize(q);
}

std::vector<double> RankCtx::allreduce_qsgd(std::span<const double> x, uint32_t levels,
                                            uint64_t seed) {
  QuantizedStream q = qsgd_quantize(x, levels, seed);
  allreduce(q);
  return dequantize(q);
}

std::vector<int32_t> RankCtx::allgather(std::span<const int32_t> block) {
  int n = nranks();
  std::vector<int32_t> all(block.size() * static_cast<size_t>(n));
  std::copy(block.begin(), block.end(),
            all.begin() + static_cast<size_t>(rank_) * block.size());
  if (n == 1 || block.empty()) return all;

  int next = (rank_ + 1) % n;
  int prev = (rank_ - 1 + n) % n;
  std::span<int32_t> span{all.data(), all.size()};
  for (int t = 0; t < n - 1; ++t) {
    size_t sIdx = static_cast<size_t>((rank_ - t + n) % n);
    size_t rIdx = static_cast<size_t>((rank_ - t - 1 + n) % n);
    std::span<int32_t> sendB = span.subspan(sIdx * block.size(), block.size());
    std::span<int32_t> recvB = span.subspan(rIdx * block.size(), block.size());
    BatchIo::exchange(*this, next, as_bytes_span(std::span<const int32_t>(sendB)), prev,
                      as_bytes_span(recvB), comm_->config().pin, nullptr);
  }
  return all;
}

std::vector<int32_t> RankCtx::alltoall(std::span<const int32_t> send) {
  int n = nranks();
  if (send.size() % static_cast<size_t>(n) != 0)
    throw std::invalid_argument("alltoall buffer must split evenly across ranks");
  size_t bc = send.size() / static_cast<size_t>(n);
  std::vector<int32_t> recv(send.size());
  std::copy(send.begin() + static_cast<ptrdiff_t>(static_cast<size_t>(rank_) * bc),
            send.begin() + static_cast<ptrdiff_t>(static_cast<size_t>(rank_ + 1) * bc),
            recv.begin() + static_cast<ptrdiff_t>(static_cast<size_t>(rank_) * bc));
  if (n == 1 || bc == 0) return recv;

  std::span<int32_t> recvSpan{recv.data(), recv.size()};
  for (int r = 1; r < n; ++r) {
    int to = (rank_ + r) % n;
    int from = (rank_ - r + n) % n;
    std::span<const int32_t> sendB = send.subspan(static_cast<size_t>(to) * bc, bc);
    std::span<int32_t> recvB = recvSpan.subspan(static_cast<size_t>(from) * bc, bc);
    BatchIo::exchange(*this, to, as_bytes_span(sendB), from, as_bytes_span(recvB),
                      comm_->config().pin, nullptr);
  }
  return recv;
}

void RankCtx::broadcast(std::span<int32_t> data, int root) {
  int n = nranks();
  if (n == 1 || data.empty()) return;
  if (root < 0 || root >= n) throw std::invalid_argument("broadcast root out of range");
  int pos = (rank_ - root + n) % n;
  int next = (rank_ + 1) % n;
  int prev = (rank_ - 1 + n) % n;
  std::span<uint8_t> bytes = as_bytes_span(data);

  if (pos == 0) {
    send_encoded(next, bytes);
  } else if (pos == n - 1) {
    recv_decoded(prev, bytes);
  } else {
    // Store-and-forward per batch keeps the chain pipelined.
    uint64_t step = chunk_raw_bytes();
    for (uint64_t off = 0; off < bytes.size(); off += step) {
      uint64_t len = std::min<uint64_t>(step, bytes.size() - off);
      recv_batch(prev, bytes.subspan(off, len));
      send_batch(next, bytes.subspan(off, len), comm_->config().pin);
    }
  }
}

void group_execute(RankCtx& ctx, std::span<CollectiveRequest> requests) {
  for (CollectiveRequest& req : requests) {
    switch (req.op) {
      case CollOp::AllReduce:
        if (req.stream == nullptr)
          throw std::invalid_argument("allreduce request needs a stream");
        ctx.allreduce(*req.stream);
        break;
      case CollOp::AllGather:
        if (req.received == nullptr)
          throw std::invalid_argument("allgather request needs an output");
        *req.received = ctx.allgather(req.sendSyms);
        break;
      case CollOp::AllToAll:
        if (req.received == nullptr)
          throw std::invalid_argument("alltoall request needs an output");
        *req.received = ctx.alltoall(req.sendSyms);
        break;
      case CollOp::Broadcast:
        ctx.broadcast(req.data, req.root);
        break;
    }
  }
}

}  // namespace zcomm
