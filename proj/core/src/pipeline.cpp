#include "zcomm/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "zcomm/fixedlen.hpp"
#include "zcomm/huffman.hpp"

namespace zcomm {
namespace {

// Shared recurrence for both modes. Zeroing the codec durations yields the
// pure-transfer schedule used for exposed-cost accounting.
std::vector<BatchTimelineRow> schedule(const SendPlan& plan, bool pipelined, bool zeroCodec,
                                       double* makespan) {
  const size_t n = plan.batches.size();
  std::vector<BatchTimelineRow> rows(n);
  std::vector<double> dequeueAt(n, 0.0);
  double end = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const BatchStage& b = plan.batches[i];
    double enc = zeroCodec ? 0.0 : b.encSec;
    double dec = zeroCodec ? 0.0 : b.decSec;
    BatchTimelineRow& r = rows[i];
    r.batchId = i;
    r.codec = b.codec;
    r.rawBytes = b.rawBytes;
    r.totalBytes = b.totalBytes;

    if (pipelined) {
      // Bank reuse: batch i writes the bank batch i-2 used, so its encode
      // waits for that batch's dequeue (which returned the bank's credits).
      double bankFree = i >= 2 ? dequeueAt[i - 2] : 0.0;
      r.encStartSec = std::max(i > 0 ? rows[i - 1].encEndSec : 0.0, bankFree);
      r.encEndSec = r.encStartSec + enc;
      // All 8 slots must be free: the previous batch must have been dequeued.
      double creditFree = i >= 1 ? dequeueAt[i - 1] : 0.0;
      r.xferStartSec = std::max(r.encEndSec, creditFree);
      double linkFree = i > 0 ? rows[i - 1].xferEndSec : 0.0;
      r.xferEndSec = std::max(r.xferStartSec, linkFree) + b.linkSec;
      double deliver = r.xferEndSec + plan.latencySec;
      // Single consumer: it dequeues batch i only after decoding batch i-1.
      dequeueAt[i] = std::max(deliver, i > 0 ? rows[i - 1].decEndSec : 0.0);
      r.decStartSec = dequeueAt[i];
      r.decEndSec = r.decStartSec + dec;
    } else {
      double prev = i > 0 ? rows[i - 1].decEndSec : 0.0;
      r.encStartSec = prev;
      r.encEndSec = r.encStartSec + enc;
      r.xferStartSec = r.encEndSec;
      r.xferEndSec = r.xferStartSec + b.linkSec;
      r.decStartSec = r.xferEndSec + plan.latencySec;
      r.decEndSec = r.decStartSec + dec;
      dequeueAt[i] = r.decStartSec;
    }
    end = std::max(end, r.decEndSec);
  }
  *makespan = end;
  return rows;
}

PipelineResult run_schedule(const SendPlan& plan, bool pipelined) {
  PipelineResult res;
  res.rows = schedule(plan, pipelined, false, &res.makespanSec);
  double pure = 0.0;
  schedule(plan, pipelined, true, &pure);
  res.pureTransferSec = pure;
  return res;
}

}  // namespace

PipelineResult run_pipelined(const SendPlan& plan) { return run_schedule(plan, true); }

PipelineResult run_serialized(const SendPlan& plan) { return run_schedule(plan, false); }

SendPlan measure_send_plan(std::span<const uint8_t> raw, const TransportHint& hint,
                           const HuffmanContext* ctx, const ArbitrationConfig& cfg,
                           const NetworkModel& net) {
  using clock = std::chrono::steady_clock;
  SendPlan plan;
  plan.latencySec = net.latencySec;

  std::vector<uint8_t> stage(kStageBankBytes);
  std::vector<uint8_t> back(kBatchRawBytes);
  uint64_t nb = batch_count(raw.size());
  plan.batches.reserve(nb);
  for (uint64_t b = 0; b < nb; ++b) {
    auto [off, len] = batch_range(raw.size(), b);
    std::span<const uint8_t> chunk = raw.subspan(off, len);

    auto t0 = clock::now();
    EncodeResult enc = encode_best(chunk, stage, hint, ctx, cfg);
    auto t1 = clock::now();
    if (enc.totalBytes == 0) throw std::runtime_error("staging capacity exhausted");

    auto ph = parse_header({stage.data(), enc.totalBytes});
    if (!ph) throw std::runtime_error("committed frame failed header parse");
    FrameHeader h = *ph;
    auto t2 = clock::now();
    bool ok = false;
    std::span<const uint8_t> payload{stage.data() + kHeaderBytes, enc.payloadBytes};
    switch (h.codec) {
      case CodecId::Raw:
        std::copy(payload.begin(), payload.end(), back.begin());
        ok = true;
        break;
      case CodecId::FixedLen:
        ok = fixedlen_decode_into(h, payload, {back.data(), back.size()});
        break;
      case CodecId::Huffman:
        ok = huffman_decode_into(h, payload, ctx, {back.data(), back.size()});
        break;
    }
    auto t3 = clock::now();
    if (!ok) throw std::runtime_error("batch failed to decode during planning");

    BatchStage st;
    st.encSec = std::chrono::duration<double>(t1 - t0).count();
    st.decSec = std::chrono::duration<double>(t3 - t2).count();
    st.linkSec = static_cast<double>(enc.totalBytes) / net.bytesPerSec;
    st.rawBytes = len;
    st.totalBytes = enc.totalBytes;
    st.codec = enc.codec;
    plan.batches.push_back(st);
  }
  return plan;
}

double stagger_makespan(std::span<const ChunkWork> chunks, unsigned window) {
  if (window == 0) throw std::invalid_argument("stagger window must be positive");
  const size_t n = chunks.size();
  std::vector<double> decEnd(n, 0.0), redEnd(n, 0.0), encEnd(n, 0.0);
  double makespan = 0.0;
  for (size_t k = 0; k < n; ++k) {
    // In-flight bound: chunk k may start decoding only once chunk k-window
    // has fully left the step.
    double admit = k >= window ? encEnd[k - window] : 0.0;
    double decStart = std::max(admit, k > 0 ? decEnd[k - 1] : 0.0);
    decEnd[k] = decStart + chunks[k].decSec;
    double redStart = std::max(decEnd[k], k > 0 ? redEnd[k - 1] : 0.0);
    redEnd[k] = redStart + chunks[k].redSec;
    double encStart = std::max(redEnd[k], k > 0 ? encEnd[k - 1] : 0.0);
    encEnd[k] = encStart + chunks[k].encSec;
    makespan = std::max(makespan, encEnd[k]);
  }
  return makespan;
}

double sequential_makespan(std::span<const ChunkWork> chunks) {
  double t = 0.0;
  for (const ChunkWork& c : chunks) t += c.decSec + c.redSec + c.encSec;
  return t;
}

void write_timeline_csv(const PipelineResult& r, std::ostream& out) {
  out << "batch,codec,raw_bytes,total_bytes,enc_start_sec,enc_end_sec,"
         "xfer_start_sec,xfer_end_sec,dec_start_sec,dec_end_sec\n";
  out.precision(9);
  for (const BatchTimelineRow& row : r.rows) {
    out << row.batchId << ',' << codec_name(row.codec) << ',' << row.rawBytes << ','
        << row.totalBytes << ',' << row.encStartSec << ',' << row.encEndSec << ','
        << row.xferStartSec << ',' << row.xferEndSec << ',' << row.decStartSec << ','
        << row.decEndSec << '\n';
  }
}

void write_timeline_csv_file(const PipelineResult& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_timeline_csv(r, out);
}

}  // namespace zcomm
