#include "zcomm/bench.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace zcomm {

namespace {

uint64_t mix64(uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

uint64_t rank_seed(uint64_t seed, int rank) {
  return mix64(seed ^ mix64(0x724Bull + static_cast<uint64_t>(rank)));
}

uint64_t chunk_seed(uint64_t seed, int rank, uint64_t chunk) {
  return mix64(rank_seed(seed, rank) ^ mix64(0xC4B2ull + chunk));
}

uint64_t qsgd_seed(uint64_t seed, int rank) {
  return mix64(rank_seed(seed, rank) ^ 0x51534744ull);
}

double f32(double v) { return static_cast<double>(static_cast<float>(v)); }

// Fills out with elements [skip, skip + out.size()) of one generator chunk.
void gen_chunk(const DataSpec& spec, uint64_t seed, uint64_t skip, std::span<double> out) {
  std::mt19937_64 rng(seed);
  auto u01 = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };   // [0,1)
  auto u01p = [&rng] { return static_cast<double>((rng() >> 11) + 1) * 0x1.0p-53; };  // (0,1]
  switch (spec.dist) {
    case DataDist::Uniform:
      rng.discard(skip);
      for (double& v : out) v = f32(2.0 * u01() - 1.0);
      break;
    case DataDist::Gaussian: {
      // Box-Muller pairs; chunks are even-sized so pairs never straddle them.
      rng.discard((skip / 2) * 2);
      size_t i = 0;
      bool dropFirst = (skip & 1) != 0;
      while (i < out.size()) {
        double u1 = u01p();
        double u2 = u01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double z0 = r * std::cos(6.283185307179586 * u2);
        double z1 = r * std::sin(6.283185307179586 * u2);
        if (!dropFirst) {
          out[i++] = f32(z0);
          if (i == out.size()) break;
        }
        dropFirst = false;
        out[i++] = f32(z1);
      }
      break;
    }
    case DataDist::Geometric: {
      if (!(spec.geomP > 0.0) || !(spec.geomP < 1.0))
        throw std::invalid_argument("geometric p must lie in (0,1)");
      rng.discard(skip);
      double lp = std::log(spec.geomP);
      for (double& v : out) v = f32(std::floor(std::log(u01p()) / lp));
      break;
    }
    case DataDist::File:
      throw std::logic_error("file-backed data is loaded, not generated");
  }
}

// Reads a window of a rank's stream: file-backed ranks all see the file,
// synthetic ranks see independent deterministic streams.
struct Source {
  const DataSpec* spec = nullptr;
  const std::vector<double>* file = nullptr;

  void read(int rank, uint64_t offset, std::span<double> out) const {
    if (file != nullptr) {
      std::copy_n(file->data() + offset, out.size(), out.data());
      return;
    }
    gen_data_into(*spec, rank, offset, out);
  }
};

constexpr uint64_t kStreamBufElems = 1ull << 20;

template <typename Fn>
void for_stream_chunks(const Source& src, int rank, uint64_t count, Fn&& fn) {
  std::vector<double> buf(std::min<uint64_t>(std::max<uint64_t>(count, 1), kStreamBufElems));
  for (uint64_t off = 0; off < count;) {
    uint64_t n = std::min<uint64_t>(count - off, buf.size());
    std::span<double> chunk(buf.data(), n);
    src.read(rank, off, chunk);
    fn(off, std::span<const double>(chunk));
    off += n;
  }
}

double stream_absmax(const Source& src, int rank, uint64_t count) {
  double m = 0.0;
  for_stream_chunks(src, rank, count, [&](uint64_t, std::span<const double> c) {
    for (double v : c) {
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite input value");
      m = std::max(m, std::abs(v));
    }
  });
  return m;
}

double stream_norm(const Source& src, int rank, uint64_t count) {
  double sumsq = 0.0;
  for_stream_chunks(src, rank, count, [&](uint64_t, std::span<const double> c) {
    for (double v : c) {
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite input value");
      sumsq += v * v;
    }
  });
  double n = std::sqrt(sumsq);
  if (!std::isfinite(n)) throw std::invalid_argument("input norm overflows");
  return n;
}

// Streams the rank's data through the chosen quantizer into syms.
void quantize_stream(const Source& src, int rank, uint64_t count, const QuantSpec& q,
                     double ebScale, double qsgdNorm, uint64_t drawSeed,
                     std::vector<int32_t>& syms) {
  syms.resize(count);
  std::mt19937_64 rng(drawSeed);
  for_stream_chunks(src, rank, count, [&](uint64_t off, std::span<const double> c) {
    std::span<int32_t> out(syms.data() + off, c.size());
    switch (q.kind) {
      case QuantKind::None:
        for (size_t i = 0; i < c.size(); ++i)
          out[i] = std::bit_cast<int32_t>(static_cast<float>(c[i]));
        break;
      case QuantKind::Eb:
        eb_quantize_chunk(c, ebScale, out);
        break;
      case QuantKind::Qsgd:
        qsgd_quantize_chunk(c, q.levels, qsgdNorm, rng, out);
        break;
    }
  });
}

void validate_quant(const QuantSpec& q) {
  if (q.kind == QuantKind::Eb && (!(q.rel > 0.0) || !(q.rel <= 1.0)))
    throw std::invalid_argument("eb rel must lie in (0,1]");
  if (q.kind == QuantKind::Qsgd && (q.levels == 0 || q.levels > (1u << 30)))
    throw std::invalid_argument("qsgd levels must lie in [1, 2^30]");
}

// Primes the receiver-shared Huffman code from rank 0's leading symbols.
// The sample is quantized with the same scale the run will use (for eb, the
// global absmax across ranks): sparse symbol lattices make byte histograms
// scale-sensitive, so a sample-local scale would train the wrong code.
void prime_shared_huffman(Communicator& comm, const ExperimentSpec& spec, const Source& src,
                          uint64_t count) {
  uint64_t n = std::min<uint64_t>(count, kStreamBufElems);
  if (n == 0) return;
  std::vector<double> sample(n);
  src.read(0, 0, sample);
  QuantSpec q = spec.quant;
  double ebScale = 1.0;
  double norm = 0.0;
  if (q.kind == QuantKind::Eb) {
    double gmax = 0.0;
    for (int r = 0; r < spec.ranks; ++r)
      gmax = std::max(gmax, stream_absmax(src, r, count));
    ebScale = gmax == 0.0 ? 1.0 : 2.0 * q.rel * gmax;
  } else if (q.kind == QuantKind::Qsgd) {
    double sumsq = 0.0;
    for (double v : sample) sumsq += v * v;
    norm = std::sqrt(sumsq);
  }
  std::vector<int32_t> syms(n);
  std::mt19937_64 rng(qsgd_seed(spec.data.seed, 0));
  switch (q.kind) {
    case QuantKind::None:
      for (uint64_t i = 0; i < n; ++i)
        syms[i] = std::bit_cast<int32_t>(static_cast<float>(sample[i]));
      break;
    case QuantKind::Eb:
      eb_quantize_chunk(sample, ebScale, syms);
      break;
    case QuantKind::Qsgd:
      qsgd_quantize_chunk(sample, q.levels, norm, rng, syms);
      break;
  }
  comm.set_shared_huffman_from_bytes(
      {reinterpret_cast<const uint8_t*>(syms.data()), syms.size() * 4});
}

ReportRow run_one(const ExperimentSpec& spec, uint64_t sizeBytes,
                  const std::vector<double>* file) {
  uint64_t count = sizeBytes / 4;
  Source src{&spec.data, file};

  CollectiveConfig ccfg;
  ccfg.arb = spec.arb;
  ccfg.net = spec.net;
  ccfg.overlap = spec.overlap;
  ccfg.pin = spec.codec;
  ccfg.perSlotFraming = spec.perSlotFraming;
  Communicator comm(spec.ranks, ccfg);

  bool huffmanCandidate =
      (spec.codec == CodecPin::Auto || spec.codec == CodecPin::Huffman) && !spec.arb.embedCodebook;
  if (huffmanCandidate) prime_shared_huffman(comm, spec, src, count);

  auto t0 = std::chrono::steady_clock::now();
  comm.run([&](RankCtx& ctx) {
    int r = ctx.rank();
    std::vector<int32_t> syms;
    QuantMeta meta;
    meta.origRawBytes = 4 * count;
    switch (spec.quant.kind) {
      case QuantKind::Eb: {
        double gmax = ctx.allreduce_max(stream_absmax(src, r, count));
        double scale = gmax == 0.0 ? 1.0 : 2.0 * spec.quant.rel * gmax;
        quantize_stream(src, r, count, spec.quant, scale, 0.0, 0, syms);
        meta.mode = QuantMode::ErrorBounded;
        meta.scale = scale;
        break;
      }
      case QuantKind::Qsgd: {
        double norm = stream_norm(src, r, count);
        quantize_stream(src, r, count, spec.quant, 0.0, norm, qsgd_seed(spec.data.seed, r), syms);
        meta.mode = QuantMode::Qsgd;
        meta.scale = norm == 0.0 ? 1.0 : norm;
        meta.levels = spec.quant.levels;
        break;
      }
      case QuantKind::None:
        quantize_stream(src, r, count, spec.quant, 0.0, 0.0, 0, syms);
        meta.mode = QuantMode::PreQuantized;
        meta.scale = 1.0;
        break;
    }
    switch (spec.collective) {
      case CollOp::AllReduce: {
        QuantizedStream q{std::move(syms), meta};
        ctx.allreduce(q);
        break;
      }
      case CollOp::AllGather: {
        auto out = ctx.allgather(syms);
        (void)out;
        break;
      }
      case CollOp::AllToAll: {
        auto out = ctx.alltoall(syms);
        (void)out;
        break;
      }
      case CollOp::Broadcast:
        ctx.broadcast(syms, 0);
        break;
    }
  });
  auto t1 = std::chrono::steady_clock::now();

  WireStats s = comm.wire_stats();
  ReportRow row;
  row.collective = spec.collective;
  row.ranks = spec.ranks;
  row.msgBytes = sizeBytes;
  row.codec = spec.codec;
  row.quant = spec.quant.kind;
  row.dist = spec.data.dist;
  row.seed = spec.data.seed;
  row.overlap = spec.overlap;
  row.regime = spec.net.regime;
  row.bwBytesPerSec = spec.net.bytesPerSec;
  row.latencySec = spec.net.latencySec;
  row.simTimeSec = comm.sim_time();
  row.wallTimeSec = std::chrono::duration<double>(t1 - t0).count();
  row.wireRawBytes = s.rawBytes;
  row.wirePayloadBytes = s.payloadBytes;
  row.wireTotalBytes = s.totalBytes;
  row.framesRaw = s.framesByCodec[0];
  row.framesFixed = s.framesByCodec[1];
  row.framesHuffman = s.framesByCodec[2];
  row.crQuant = 1.0;  // f32 in, 4-byte symbols out
  row.crFinal = s.payloadBytes > 0 ? static_cast<double>(s.rawBytes) / s.payloadBytes : 1.0;
  double t = row.simTimeSec;
  double n = spec.ranks;
  if (t > 0.0) {
    switch (spec.collective) {
      case CollOp::AllReduce:
        row.algBwBytesPerSec = sizeBytes / t;
        row.busBwBytesPerSec = row.algBwBytesPerSec * 2.0 * (n - 1.0) / n;
        break;
      case CollOp::AllGather:
        row.algBwBytesPerSec = sizeBytes * n / t;
        row.busBwBytesPerSec = row.algBwBytesPerSec * (n - 1.0) / n;
        break;
      case CollOp::AllToAll:
        row.algBwBytesPerSec = sizeBytes / t;
        row.busBwBytesPerSec = row.algBwBytesPerSec * (n - 1.0) / n;
        break;
      case CollOp::Broadcast:
        row.algBwBytesPerSec = sizeBytes / t;
        row.busBwBytesPerSec = row.algBwBytesPerSec;
        break;
    }
  }
  row.exposedCodecSimSec = s.exposedCodecSimSec;
  row.wallCodecSec = s.wallCodecSec;
  return row;
}

std::string csv_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

constexpr const char* kCsvHeader =
    "collective,ranks,msg_bytes,codec,quant,dist,seed,overlap,regime,"
    "bw_bytes_per_sec,latency_sec,sim_time_sec,wall_time_sec,"
    "wire_raw_bytes,wire_payload_bytes,wire_total_bytes,"
    "frames_raw,frames_fixedlen,frames_huffman,cr_quant,cr_final,"
    "alg_bw_bytes_per_sec,bus_bw_bytes_per_sec,speedup_vs_raw,"
    "exposed_codec_sim_sec,wall_codec_sec";

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

std::string pretty_bytes(uint64_t b) {
  const char* suffix[] = {"B", "KiB", "MiB", "GiB", "TiB"};
  double v = static_cast<double>(b);
  int s = 0;
  while (v >= 1024.0 && s < 4) {
    v /= 1024.0;
    ++s;
  }
  std::ostringstream os;
  os << std::setprecision(4) << v << " " << suffix[s];
  return os.str();
}

}  // namespace

const char* to_string(CollOp v) {
  switch (v) {
    case CollOp::AllReduce: return "allreduce";
    case CollOp::AllGather: return "allgather";
    case CollOp::AllToAll: return "alltoall";
    case CollOp::Broadcast: return "broadcast";
  }
  return "?";
}

const char* to_string(CodecPin v) {
  switch (v) {
    case CodecPin::Auto: return "auto";
    case CodecPin::Raw: return "raw";
    case CodecPin::FixedLen: return "fixedlen";
    case CodecPin::Huffman: return "huffman";
  }
  return "?";
}

const char* to_string(QuantKind v) {
  switch (v) {
    case QuantKind::None: return "none";
    case QuantKind::Eb: return "eb";
    case QuantKind::Qsgd: return "qsgd";
  }
  return "?";
}

const char* to_string(DataDist v) {
  switch (v) {
    case DataDist::Uniform: return "uniform";
    case DataDist::Gaussian: return "gaussian";
    case DataDist::Geometric: return "geometric";
    case DataDist::File: return "file";
  }
  return "?";
}

const char* to_string(OverlapMode v) {
  return v == OverlapMode::Pipelined ? "pipelined" : "serialized";
}

const char* to_string(Regime v) { return v == Regime::IntraNode ? "intranode" : "internode"; }

namespace {
[[noreturn]] void bad_token(const char* what, const std::string& s) {
  throw std::invalid_argument(std::string("unknown ") + what + ": '" + s + "'");
}
}  // namespace

CollOp collop_from_string(const std::string& s) {
  if (s == "allreduce") return CollOp::AllReduce;
  if (s == "allgather") return CollOp::AllGather;
  if (s == "alltoall") return CollOp::AllToAll;
  if (s == "broadcast") return CollOp::Broadcast;
  bad_token("collective", s);
}

CodecPin codecpin_from_string(const std::string& s) {
  if (s == "auto") return CodecPin::Auto;
  if (s == "raw") return CodecPin::Raw;
  if (s == "fixedlen") return CodecPin::FixedLen;
  if (s == "huffman") return CodecPin::Huffman;
  bad_token("codec", s);
}

QuantKind quantkind_from_string(const std::string& s) {
  if (s == "none") return QuantKind::None;
  if (s == "eb") return QuantKind::Eb;
  if (s == "qsgd") return QuantKind::Qsgd;
  bad_token("quantizer", s);
}

DataDist datadist_from_string(const std::string& s) {
  if (s == "uniform") return DataDist::Uniform;
  if (s == "gaussian") return DataDist::Gaussian;
  if (s == "geometric") return DataDist::Geometric;
  if (s == "file") return DataDist::File;
  bad_token("distribution", s);
}

OverlapMode overlap_from_string(const std::string& s) {
  if (s == "pipelined") return OverlapMode::Pipelined;
  if (s == "serialized") return OverlapMode::Serialized;
  bad_token("overlap mode", s);
}

Regime regime_from_string(const std::string& s) {
  if (s == "intranode") return Regime::IntraNode;
  if (s == "internode") return Regime::InterNode;
  bad_token("regime", s);
}

void gen_data_into(const DataSpec& spec, int rank, uint64_t offset, std::span<double> out) {
  if (spec.dist == DataDist::File)
    throw std::logic_error("file-backed data is loaded, not generated");
  uint64_t produced = 0;
  while (produced < out.size()) {
    uint64_t idx = offset + produced;
    uint64_t chunk = idx / kGenChunkElems;
    uint64_t skip = idx % kGenChunkElems;
    uint64_t n = std::min<uint64_t>(out.size() - produced, kGenChunkElems - skip);
    gen_chunk(spec, chunk_seed(spec.seed, rank, chunk), skip,
              std::span<double>(out.data() + produced, n));
    produced += n;
  }
}

std::vector<double> gen_data(const DataSpec& spec, int rank, uint64_t count) {
  std::vector<double> out(count);
  gen_data_into(spec, rank, 0, out);
  return out;
}

std::vector<double> ingest_f32(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw std::runtime_error("cannot open " + path);
  auto end = in.tellg();
  if (end < 0) throw std::runtime_error("cannot size " + path);
  uint64_t bytes = static_cast<uint64_t>(end);
  if (bytes % 4 != 0)
    throw std::runtime_error(path + ": size is not a whole number of f32 values");
  in.seekg(0);
  std::vector<uint8_t> buf(bytes);
  if (bytes > 0 && !in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(bytes)))
    throw std::runtime_error("short read on " + path);
  std::vector<double> out(bytes / 4);
  for (uint64_t i = 0; i < out.size(); ++i) {
    uint32_t w = static_cast<uint32_t>(buf[4 * i]) | (static_cast<uint32_t>(buf[4 * i + 1]) << 8) |
                 (static_cast<uint32_t>(buf[4 * i + 2]) << 16) |
                 (static_cast<uint32_t>(buf[4 * i + 3]) << 24);
    out[i] = static_cast<double>(std::bit_cast<float>(w));
  }
  return out;
}

std::vector<ReportRow> run_experiment(const ExperimentSpec& spec) {
  if (spec.ranks < 1) throw std::invalid_argument("ranks must be >= 1");
  validate_quant(spec.quant);
  if (spec.collective == CollOp::AllReduce && spec.quant.kind == QuantKind::None)
    throw std::invalid_argument(
        "allreduce sums integer symbols; pick a quantizer (eb or qsgd)");
  if (spec.data.dist == DataDist::Geometric &&
      (!(spec.data.geomP > 0.0) || !(spec.data.geomP < 1.0)))
    throw std::invalid_argument("geometric p must lie in (0,1)");

  std::vector<double> fileData;
  const std::vector<double>* file = nullptr;
  std::vector<uint64_t> sizes = spec.sizes;
  if (spec.data.dist == DataDist::File) {
    fileData = ingest_f32(spec.data.path);
    file = &fileData;
    if (sizes.empty()) sizes.push_back(4 * fileData.size());
  }
  if (sizes.empty()) throw std::invalid_argument("no message sizes given");

  std::vector<ReportRow> rows;
  rows.reserve(sizes.size());
  for (uint64_t size : sizes) {
    if (size == 0 || size % 4 != 0)
      throw std::invalid_argument("message size must be a positive multiple of 4 bytes");
    if (file != nullptr && size != 4 * fileData.size())
      throw std::invalid_argument("file runs must use the file's size (" +
                                  std::to_string(4 * fileData.size()) + " bytes)");
    if (spec.collective == CollOp::AllToAll &&
        (size / 4) % static_cast<uint64_t>(spec.ranks) != 0)
      throw std::invalid_argument("alltoall needs the element count divisible by ranks");

    ReportRow row = run_one(spec, size, file);
    if (spec.codec != CodecPin::Raw) {
      ExperimentSpec base = spec;
      base.codec = CodecPin::Raw;
      base.sizes = {size};
      ReportRow b = run_one(base, size, file);
      row.speedupVsRaw = row.simTimeSec > 0.0 ? b.simTimeSec / row.simTimeSec : 1.0;
    }
    rows.push_back(row);
  }
  return rows;
}

void emit_csv(std::span<const ReportRow> rows, std::ostream& out) {
  out << kCsvHeader << "\n";
  for (const ReportRow& r : rows) {
    out << to_string(r.collective) << ',' << r.ranks << ',' << r.msgBytes << ','
        << to_string(r.codec) << ',' << to_string(r.quant) << ',' << to_string(r.dist) << ','
        << r.seed << ',' << to_string(r.overlap) << ',' << to_string(r.regime) << ','
        << csv_double(r.bwBytesPerSec) << ',' << csv_double(r.latencySec) << ','
        << csv_double(r.simTimeSec) << ',' << csv_double(r.wallTimeSec) << ',' << r.wireRawBytes
        << ',' << r.wirePayloadBytes << ',' << r.wireTotalBytes << ',' << r.framesRaw << ','
        << r.framesFixed << ',' << r.framesHuffman << ',' << csv_double(r.crQuant) << ','
        << csv_double(r.crFinal) << ',' << csv_double(r.algBwBytesPerSec) << ','
        << csv_double(r.busBwBytesPerSec) << ',' << csv_double(r.speedupVsRaw) << ','
        << csv_double(r.exposedCodecSimSec) << ',' << csv_double(r.wallCodecSec) << "\n";
  }
}

void emit_csv_file(std::span<const ReportRow> rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  emit_csv(rows, out);
}

std::vector<ReportRow> parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty report");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) throw std::runtime_error("unrecognized report header");
  std::vector<ReportRow> rows;
  size_t lineNo = 1;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.empty() || line == "\r") continue;
    std::vector<std::string> f = split_csv_line(line);
    if (f.size() != 26)
      throw std::runtime_error("line " + std::to_string(lineNo) + ": expected 26 fields, got " +
                               std::to_string(f.size()));
    ReportRow r;
    size_t i = 0;
    r.collective = collop_from_string(f[i++]);
    r.ranks = std::stoi(f[i++]);
    r.msgBytes = std::stoull(f[i++]);
    r.codec = codecpin_from_string(f[i++]);
    r.quant = quantkind_from_string(f[i++]);
    r.dist = datadist_from_string(f[i++]);
    r.seed = std::stoull(f[i++]);
    r.overlap = overlap_from_string(f[i++]);
    r.regime = regime_from_string(f[i++]);
    r.bwBytesPerSec = std::stod(f[i++]);
    r.latencySec = std::stod(f[i++]);
    r.simTimeSec = std::stod(f[i++]);
    r.wallTimeSec = std::stod(f[i++]);
    r.wireRawBytes = std::stoull(f[i++]);
    r.wirePayloadBytes = std::stoull(f[i++]);
    r.wireTotalBytes = std::stoull(f[i++]);
    r.framesRaw = std::stoull(f[i++]);
    r.framesFixed = std::stoull(f[i++]);
    r.framesHuffman = std::stoull(f[i++]);
    r.crQuant = std::stod(f[i++]);
    r.crFinal = std::stod(f[i++]);
    r.algBwBytesPerSec = std::stod(f[i++]);
    r.busBwBytesPerSec = std::stod(f[i++]);
    r.speedupVsRaw = std::stod(f[i++]);
    r.exposedCodecSimSec = std::stod(f[i++]);
    r.wallCodecSec = std::stod(f[i++]);
    rows.push_back(r);
  }
  return rows;
}

void emit_markdown(std::span<const ReportRow> rows, std::ostream& out) {
  // Pivot: one line per message size, compression and speedup per codec.
  std::vector<uint64_t> sizes;
  std::vector<CodecPin> codecs;
  for (const ReportRow& r : rows) {
    if (std::find(sizes.begin(), sizes.end(), r.msgBytes) == sizes.end())
      sizes.push_back(r.msgBytes);
    if (std::find(codecs.begin(), codecs.end(), r.codec) == codecs.end())
      codecs.push_back(r.codec);
  }
  auto find_row = [&](uint64_t size, CodecPin c) -> const ReportRow* {
    for (const ReportRow& r : rows)
      if (r.msgBytes == size && r.codec == c) return &r;
    return nullptr;
  };

  out << "## Compression and speedup by message size\n\n";
  out << "| message size |";
  for (CodecPin c : codecs) out << " CR " << to_string(c) << " | speedup " << to_string(c) << " |";
  out << "\n|---|";
  for (size_t i = 0; i < codecs.size(); ++i) out << "---|---|";
  out << "\n";
  std::ostringstream cell;
  for (uint64_t size : sizes) {
    out << "| " << pretty_bytes(size) << " |";
    for (CodecPin c : codecs) {
      const ReportRow* r = find_row(size, c);
      if (r == nullptr) {
        out << " - | - |";
        continue;
      }
      cell.str("");
      cell << std::fixed << std::setprecision(3) << r->crFinal << " | "
           << std::setprecision(3) << r->speedupVsRaw;
      out << ' ' << cell.str() << " |";
    }
    out << "\n";
  }

  out << "\n## Runs\n\n";
  out << "| collective | ranks | message size | codec | quant | sim time (s) | CR final | bus BW "
         "(B/s) | speedup |\n";
  out << "|---|---|---|---|---|---|---|---|---|\n";
  for (const ReportRow& r : rows) {
    out << "| " << to_string(r.collective) << " | " << r.ranks << " | " << pretty_bytes(r.msgBytes)
        << " | " << to_string(r.codec) << " | " << to_string(r.quant) << " | "
        << std::setprecision(6) << r.simTimeSec << " | " << std::fixed << std::setprecision(3)
        << r.crFinal << " | " << std::defaultfloat << std::setprecision(4) << r.busBwBytesPerSec
        << " | " << std::fixed << std::setprecision(3) << r.speedupVsRaw << " |\n";
    out << std::defaultfloat << std::setprecision(6);
  }
}

void emit_markdown_file(std::span<const ReportRow> rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  emit_markdown(rows, out);
}

}  // namespace zcomm
