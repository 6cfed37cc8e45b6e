#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "zcomm/pipeline.hpp"
#include "zcomm/quant.hpp"
#include "zcomm/rea.hpp"
#include "zcomm/transport.hpp"

namespace zcomm {

enum class CollOp : uint8_t { AllReduce = 0, AllGather = 1, AllToAll = 2, Broadcast = 3 };

// Auto runs the per-batch selector; anything else bypasses selection and
// materializes that codec, falling back to raw only on hard failure
// (capacity, context, or shape constraints).
enum class CodecPin : uint8_t { Auto = 0, Raw = 1, FixedLen = 2, Huffman = 3 };

struct CollectiveConfig {
  ArbitrationConfig arb;
  NetworkModel net = internode_network();
  OverlapMode overlap = OverlapMode::Pipelined;
  CodecPin pin = CodecPin::Auto;
  // Fused reduce-scatter steps ship raw below this message size; codec work
  // there sits on the reduction critical path and needs size to amortize.
  uint64_t fusedCodecMinMsgBytes = kBatchRawBytes;
  // Frame at single-slot granularity instead of 8-slot batches.
  bool perSlotFraming = false;
};

struct WireStats {
  std::array<uint64_t, 3> framesByCodec{};  // indexed by CodecId
  uint64_t rawBytes = 0;                    // pre-codec bytes carried
  uint64_t payloadBytes = 0;                // encoded payload bytes on the wire
  uint64_t totalBytes = 0;                  // headers included
  double wallCodecSec = 0.0;                // measured encode+decode time
  double exposedCodecSimSec = 0.0;          // modeled codec time added to clocks
};

class Communicator;

// Per-rank face of a communicator, valid only inside Communicator::run.
class RankCtx {
 public:
  int rank() const { return rank_; }
  int nranks() const;
  double clock() const { return *clock_; }

  // Point-to-point: batches raw into staging, arbitrates each batch, frames
  // and enqueues it; the receiver mirrors the batching and decodes (or raw-
  // copies on an unintelligible header).
  void send_encoded(int peer, std::span<const uint8_t> raw);
  void recv_decoded(int peer, std::span<uint8_t> dst);

  // Symbol-domain ring allreduce (integer sum). Reconciles scales first:
  // ranks exchange stream metadata, adopt the largest scale, and requantize
  // so the integer sum dequantizes consistently. In place.
  void allreduce(QuantizedStream& q);

  // Quantize-once convenience paths that establish the shared scale before
  // quantizing, so no requantization error enters.
  std::vector<double> allreduce_eb(std::span<const double> x, double rel);
  std::vector<double> allreduce_qsgd(std::span<const double> x, uint32_t levels,
                                     uint64_t seed);

  std::vector<int32_t> allgather(std::span<const int32_t> block);

  // send must be nranks equal blocks; returns the same shape.
  std::vector<int32_t> alltoall(std::span<const int32_t> send);

  void broadcast(std::span<int32_t> data, int root);

  // Ring max over one scalar; building block of scale reconciliation.
  double allreduce_max(double v);

 private:
  friend class Communicator;
  RankCtx(Communicator* comm, int rank, double* clock);

  struct BatchIo;
  void send_batch(int peer, std::span<const uint8_t> chunk, CodecPin pin);
  void recv_batch(int peer, std::span<uint8_t> dst);
  uint64_t chunk_raw_bytes() const;

  Communicator* comm_;
  int rank_;
  double* clock_;
};

struct CollectiveRequest {
  CollOp op = CollOp::AllReduce;
  QuantizedStream* stream = nullptr;        // AllReduce: in/out
  std::span<const int32_t> sendSyms;        // AllGather/AllToAll input
  std::vector<int32_t>* received = nullptr; // AllGather/AllToAll output
  std::span<int32_t> data;                  // Broadcast: in/out
  int root = 0;
};

// Issues the queued requests as one submission; results match running them
// one by one in order.
void group_execute(RankCtx& ctx, std::span<CollectiveRequest> requests);

// N concurrent rank workers joined by in-memory links carrying framed bytes
// under a simulated network clock. Wall-clock codec time is measured; link
// time is modeled; the two compose through per-rank simulated clocks.
class Communicator {
 public:
  Communicator(int nranks, CollectiveConfig cfg);
  ~Communicator();

  Communicator(const Communicator&) = delete;
  Communicator& operator=(const Communicator&) = delete;

  // Installs the receiver-shared Huffman code. Smoothed so every byte value
  // has a code; call before run when Huffman is a candidate.
  void set_shared_huffman(std::span<const uint64_t> hist256);
  void set_shared_huffman_from_bytes(std::span<const uint8_t> sample);
  const HuffmanContext* shared_huffman() const;

  // Runs body as each rank on nranks threads and joins. Clocks and link
  // state reset at entry; stats accumulate until reset_stats.
  void run(const std::function<void(RankCtx&)>& body);

  int nranks() const { return nranks_; }
  const CollectiveConfig& config() const { return cfg_; }

  double sim_time() const;  // max rank clock after the last run
  std::span<const double> rank_clocks() const { return clocks_; }
  WireStats wire_stats() const;
  void reset_stats();

 private:
  friend class RankCtx;

  Connection& link(int from, int to);
  ChannelState& staging(int from, int to);
  struct RankStatsBlock;
  RankStatsBlock& stats_for(int rank);

  int nranks_;
  CollectiveConfig cfg_;
  HuffmanContext sharedCtx_;
  bool hasSharedCtx_ = false;
  std::vector<std::unique_ptr<Connection>> links_;       // [from*n + to]
  std::vector<std::unique_ptr<ChannelState>> staging_;   // [from*n + to]
  std::vector<double> clocks_;
  std::vector<std::unique_ptr<RankStatsBlock>> stats_;
};

}  // namespace zcomm
