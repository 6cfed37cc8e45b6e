#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "zcomm/frame.hpp"
#include "zcomm/rea.hpp"
#include "zcomm/transport.hpp"

namespace zcomm {

enum class OverlapMode : uint8_t { Pipelined = 0, Serialized = 1 };

// One batch's modeled or measured stage costs plus its wire footprint.
struct BatchStage {
  double encSec = 0.0;
  double linkSec = 0.0;  // link occupancy, bytes/bandwidth; latency is separate
  double decSec = 0.0;
  uint64_t rawBytes = 0;
  uint64_t totalBytes = 0;  // header + payload
  CodecId codec = CodecId::Raw;
};

struct SendPlan {
  std::vector<BatchStage> batches;
  double latencySec = 0.0;
};

struct BatchTimelineRow {
  uint64_t batchId = 0;
  CodecId codec = CodecId::Raw;
  uint64_t rawBytes = 0;
  uint64_t totalBytes = 0;
  double encStartSec = 0.0;
  double encEndSec = 0.0;
  double xferStartSec = 0.0;
  double xferEndSec = 0.0;  // link done; delivery adds latency
  double decStartSec = 0.0;
  double decEndSec = 0.0;
};

struct PipelineResult {
  std::vector<BatchTimelineRow> rows;
  double makespanSec = 0.0;
  // Makespan of the same plan with zero codec time; the difference is the
  // codec cost left exposed on the critical path.
  double pureTransferSec = 0.0;

  double exposed_codec_sec() const { return makespanSec - pureTransferSec; }
};

// Batch-level overlap: encode of batch i+1 runs while batch i is on the wire
// (two staging banks), decode of batch i runs while batch i+1 is on the wire,
// and the 8-slot credit window gates each transfer on the previous dequeue.
PipelineResult run_pipelined(const SendPlan& plan);

// Ablation baseline: strict encode, transfer, decode with no concurrency.
PipelineResult run_serialized(const SendPlan& plan);

// Builds a plan from real codec runs over raw, batch by batch: encode and
// decode are wall-clock measured, link time is modeled from the frame bytes.
SendPlan measure_send_plan(std::span<const uint8_t> raw, const TransportHint& hint,
                           const HuffmanContext* ctx, const ArbitrationConfig& cfg,
                           const NetworkModel& net);

// One chunk's work inside a fused recv-reduce-send step.
struct ChunkWork {
  double decSec = 0.0;
  double redSec = 0.0;
  double encSec = 0.0;
};

// Makespan of the staggered fused step: three in-order workers (decode,
// reduce, encode) chained per chunk, at most `window` chunks in flight.
double stagger_makespan(std::span<const ChunkWork> chunks, unsigned window = 3);

// Same work with no concurrency at all.
double sequential_makespan(std::span<const ChunkWork> chunks);

// One row per batch: the six timestamps, byte counts, and codec id.
void write_timeline_csv(const PipelineResult& r, std::ostream& out);
void write_timeline_csv_file(const PipelineResult& r, const std::string& path);

}  // namespace zcomm
