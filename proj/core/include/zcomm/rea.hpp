#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>

#include "zcomm/frame.hpp"
#include "zcomm/huffman.hpp"
#include "zcomm/transport.hpp"

namespace zcomm {

// Profiling reads at most this prefix of each batch.
inline constexpr uint64_t kSampleWindowBytes = 64ull * 1024;

struct SampleStats {
  uint64_t sampledBytes = 0;
  std::array<uint64_t, 256> hist{};
  // Largest zigzag-mapped symbol among whole int32 words in the window.
  uint64_t maxZigZag = 0;
  // Mean Huffman bits per byte under the shared context, when it covers the
  // sample, and under the sample's own canonical code (embedded mode).
  double ctxCodeLenBits = 0.0;
  bool ctxCodeLenValid = false;
  double selfCodeLenBits = 0.0;
  bool selfCodeLenValid = false;
};

// What the selector assumes about the wire when trading codec time for
// transfer time.
struct TransportHint {
  Regime regime = Regime::InterNode;
  double betaEffBytesPerSec = 10.0 * 1073741824.0;
};

inline TransportHint hint_from_network(const NetworkModel& m) {
  return {m.regime, m.bytesPerSec};
}

// Per-codec launch overhead and throughputs. A zero rate means the stage is
// free (no modeled cost).
struct CodecCost {
  double alphaSec = 0.0;
  double encBytesPerSec = 0.0;
  double decBytesPerSec = 0.0;
};

struct CostModel {
  CodecCost raw{};
  CodecCost fixedlen{1.0e-6, 250.0e9, 300.0e9};
  CodecCost huffman{1.5e-6, 120.0e9, 150.0e9};

  const CodecCost& for_codec(CodecId c) const {
    switch (c) {
      case CodecId::FixedLen: return fixedlen;
      case CodecId::Huffman: return huffman;
      default: return raw;
    }
  }
};

struct ArbitrationConfig {
  // Batches at or below this size skip profiling and ship raw.
  uint64_t smallBatchThresholdBytes = 4096;
  // Huffman is considered only for batches at least this large.
  uint64_t huffmanMinRawBytes = 65536;
  // Required predicted saving, in bytes per thousand raw bytes.
  uint32_t minGainPermil = 50;
  // Ship the code lengths inside each Huffman frame instead of relying on a
  // receiver-shared context.
  bool embedCodebook = false;
  // Fractions of codec time that stay on the critical path. 1.0 models a
  // serialized launch, 0.25 a pipelined one.
  double lamEnc = 0.25;
  double lamDec = 0.25;
  CostModel cost;
};

struct CodecEstimate {
  CodecId codec = CodecId::Raw;
  uint64_t predictedPayload = 0;
  double encSec = 0.0;       // Ê_c, full modeled encode time
  double decSec = 0.0;       // D̂_c, full modeled decode time
  double predictedSec = 0.0; // α + λ_enc·Ê + payload/β + λ_dec·D̂
  bool admissible = false;
};

struct ArbitrationPlan {
  CodecId choice = CodecId::Raw;
  CodecEstimate raw;
  CodecEstimate fixedlen;
  CodecEstimate huffman;

  const CodecEstimate& estimate(CodecId c) const {
    switch (c) {
      case CodecId::FixedLen: return fixedlen;
      case CodecId::Huffman: return huffman;
      default: return raw;
    }
  }
};

struct EncodeResult {
  CodecId codec = CodecId::Raw;
  uint64_t payloadBytes = 0;
  // Header plus payload as written to the staging region; 0 when nothing was
  // committed (empty input or no capacity even for raw).
  uint64_t totalBytes = 0;
};

// One pass over min(raw.size(), kSampleWindowBytes) bytes. ctx may be null.
SampleStats profile_sample(std::span<const uint8_t> raw, const HuffmanContext* ctx);

// Predicted payload bytes for codec c over rawBytes of data shaped like
// stats. Raw predicts rawBytes. Returns 0 when the codec cannot be priced
// (e.g. Huffman with no usable code-length estimate).
uint64_t predict_payload(CodecId c, uint64_t rawBytes, const SampleStats& stats,
                         const ArbitrationConfig& cfg);

// Pick the codec minimizing predicted batch time among raw plus admissible
// candidates. payloadCap is the staging capacity left after the header.
ArbitrationPlan arbitrate_plan(uint64_t rawBytes, uint64_t payloadCap,
                               const SampleStats& stats, const TransportHint& hint,
                               const HuffmanContext* ctx, const ArbitrationConfig& cfg);

// Profile, plan, materialize the winner into stage (header + payload), and
// fall back to a raw frame when the realized payload misses the plan's
// capacity or gain requirements.
EncodeResult encode_best(std::span<const uint8_t> raw, std::span<uint8_t> stage,
                         const TransportHint& hint, const HuffmanContext* ctx,
                         const ArbitrationConfig& cfg);

// key=value overrides, one per line, '#' comments. Unknown keys throw.
// Keys: small_batch_threshold, huffman_min_raw_bytes, min_gain_permil,
// embed_codebook, lam_enc, lam_dec, fixedlen_alpha_sec, fixedlen_enc_bps,
// fixedlen_dec_bps, huffman_alpha_sec, huffman_enc_bps, huffman_dec_bps.
void load_arbitration_config(std::istream& in, ArbitrationConfig& cfg);
void load_arbitration_config_file(const std::string& path, ArbitrationConfig& cfg);

// Applies ZCOMM_<UPPERCASE_KEY> environment overrides for the same keys.
void apply_env_overrides(ArbitrationConfig& cfg);

// Times the codecs on this host and returns measured rates. Diagnostic; the
// defaults model a device-class codec and are what ships.
CostModel calibrate_cost_model(size_t probeBytes = 1ull << 20);

}  // namespace zcomm
