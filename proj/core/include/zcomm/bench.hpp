#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "zcomm/collectives.hpp"

namespace zcomm {

enum class DataDist : uint8_t { Uniform = 0, Gaussian = 1, Geometric = 2, File = 3 };
enum class QuantKind : uint8_t { None = 0, Eb = 1, Qsgd = 2 };

struct DataSpec {
  DataDist dist = DataDist::Uniform;
  double geomP = 0.7;  // Geometric only
  std::string path;    // File only
  uint64_t seed = 1;
};

struct QuantSpec {
  QuantKind kind = QuantKind::Eb;
  double rel = 1e-3;      // Eb
  uint32_t levels = 256;  // Qsgd
};

struct ExperimentSpec {
  CollOp collective = CollOp::AllReduce;
  int ranks = 4;
  std::vector<uint64_t> sizes;  // f32 bytes per rank, one run per entry
  CodecPin codec = CodecPin::Auto;
  QuantSpec quant;
  DataSpec data;
  NetworkModel net = internode_network();
  OverlapMode overlap = OverlapMode::Pipelined;
  ArbitrationConfig arb;
  bool perSlotFraming = false;
};

struct ReportRow {
  CollOp collective = CollOp::AllReduce;
  int ranks = 0;
  uint64_t msgBytes = 0;
  CodecPin codec = CodecPin::Auto;
  QuantKind quant = QuantKind::Eb;
  DataDist dist = DataDist::Uniform;
  uint64_t seed = 0;
  OverlapMode overlap = OverlapMode::Pipelined;
  Regime regime = Regime::InterNode;
  double bwBytesPerSec = 0.0;
  double latencySec = 0.0;
  double simTimeSec = 0.0;
  double wallTimeSec = 0.0;
  uint64_t wireRawBytes = 0;
  uint64_t wirePayloadBytes = 0;
  uint64_t wireTotalBytes = 0;
  uint64_t framesRaw = 0;
  uint64_t framesFixed = 0;
  uint64_t framesHuffman = 0;
  double crQuant = 1.0;   // input f32 bytes / quantized symbol bytes
  double crFinal = 1.0;   // pre-codec wire bytes / encoded payload bytes
  double algBwBytesPerSec = 0.0;
  double busBwBytesPerSec = 0.0;
  double speedupVsRaw = 1.0;  // simulated time of the paired raw run / this run
  double exposedCodecSimSec = 0.0;
  double wallCodecSec = 0.0;
};

// Name/value mappings shared by the CLI, CSV emitter, and CSV parser.
const char* to_string(CollOp v);
const char* to_string(CodecPin v);
const char* to_string(QuantKind v);
const char* to_string(DataDist v);
const char* to_string(OverlapMode v);
const char* to_string(Regime v);
CollOp collop_from_string(const std::string& s);
CodecPin codecpin_from_string(const std::string& s);
QuantKind quantkind_from_string(const std::string& s);
DataDist datadist_from_string(const std::string& s);
OverlapMode overlap_from_string(const std::string& s);
Regime regime_from_string(const std::string& s);

// Deterministic synthetic data, f32-valued, generated in fixed 1 Mi-element
// chunks each seeded from (seed, rank, chunk) so any window of the stream can
// be regenerated without holding the rest.
inline constexpr uint64_t kGenChunkElems = 1ull << 20;

// Fills out with elements [offset, offset + out.size()) of rank's stream.
void gen_data_into(const DataSpec& spec, int rank, uint64_t offset, std::span<double> out);
std::vector<double> gen_data(const DataSpec& spec, int rank, uint64_t count);

// Whole file of little-endian f32; count = bytes/4. Rejects partial words.
std::vector<double> ingest_f32(const std::string& path);

// One row per size: runs the collective, and for non-raw codecs a paired run
// pinned to raw on identical data to price the speedup.
std::vector<ReportRow> run_experiment(const ExperimentSpec& spec);

void emit_csv(std::span<const ReportRow> rows, std::ostream& out);
void emit_csv_file(std::span<const ReportRow> rows, const std::string& path);
std::vector<ReportRow> parse_csv(std::istream& in);

// Compression-ratio pivot (one line per size, codec columns) plus the full
// row listing, as Markdown tables.
void emit_markdown(std::span<const ReportRow> rows, std::ostream& out);
void emit_markdown_file(std::span<const ReportRow> rows, const std::string& path);

}  // namespace zcomm
