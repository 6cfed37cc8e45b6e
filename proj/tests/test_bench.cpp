#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "zcomm/bench.hpp"

using namespace zcomm;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) {
    path = (std::filesystem::temp_directory_path() / name).string();
  }
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_SUITE("bench") {

TEST_CASE("name round-trips") {
  for (CollOp v : {CollOp::AllReduce, CollOp::AllGather, CollOp::AllToAll, CollOp::Broadcast})
    CHECK(collop_from_string(to_string(v)) == v);
  for (CodecPin v : {CodecPin::Auto, CodecPin::Raw, CodecPin::FixedLen, CodecPin::Huffman})
    CHECK(codecpin_from_string(to_string(v)) == v);
  for (QuantKind v : {QuantKind::None, QuantKind::Eb, QuantKind::Qsgd})
    CHECK(quantkind_from_string(to_string(v)) == v);
  for (DataDist v : {DataDist::Uniform, DataDist::Gaussian, DataDist::Geometric, DataDist::File})
    CHECK(datadist_from_string(to_string(v)) == v);
  for (OverlapMode v : {OverlapMode::Pipelined, OverlapMode::Serialized})
    CHECK(overlap_from_string(to_string(v)) == v);
  for (Regime v : {Regime::IntraNode, Regime::InterNode})
    CHECK(regime_from_string(to_string(v)) == v);
  CHECK_THROWS_AS(collop_from_string("sum"), std::invalid_argument);
  CHECK_THROWS_AS(codecpin_from_string(""), std::invalid_argument);
}

TEST_CASE("generation is deterministic and rank-divergent") {
  DataSpec spec;
  spec.dist = DataDist::Gaussian;
  spec.seed = 42;
  auto a = gen_data(spec, 0, 5000);
  auto b = gen_data(spec, 0, 5000);
  CHECK(a == b);
  auto c = gen_data(spec, 1, 5000);
  CHECK(a != c);

  spec.seed = 43;
  auto d = gen_data(spec, 0, 5000);
  CHECK(a != d);
}

TEST_CASE("windows slice the stream, across chunk boundaries") {
  for (DataDist dist : {DataDist::Uniform, DataDist::Gaussian, DataDist::Geometric}) {
    DataSpec spec;
    spec.dist = dist;
    spec.seed = 7;
    uint64_t total = kGenChunkElems + 64;
    auto full = gen_data(spec, 2, total);

    for (uint64_t off : {uint64_t{0}, uint64_t{1}, uint64_t{13}, kGenChunkElems - 5,
                         kGenChunkElems, kGenChunkElems + 3}) {
      size_t len = 10;
      std::vector<double> win(len);
      gen_data_into(spec, 2, off, win);
      for (size_t i = 0; i < len; ++i) CHECK(win[i] == full[off + i]);
    }
    // Odd offsets exercise the pair-discard path of the gaussian generator.
    std::vector<double> one(1);
    gen_data_into(spec, 2, 999, one);
    CHECK(one[0] == full[999]);
  }
}

TEST_CASE("distribution shapes") {
  DataSpec spec;
  spec.seed = 11;

  spec.dist = DataDist::Uniform;
  auto u = gen_data(spec, 0, 100000);
  for (double v : u) {
    CHECK(v >= -1.0);
    CHECK(v < 1.0 + 1e-7);
  }

  spec.dist = DataDist::Geometric;
  spec.geomP = 0.7;
  auto g = gen_data(spec, 0, 100000);
  size_t zeros = 0;
  for (double v : g) {
    CHECK(v >= 0.0);
    CHECK(v == std::floor(v));
    if (v == 0.0) ++zeros;
  }
  // floor(log u / log p) is 0 iff u > p, so P(0) = 1 - p = 0.3; the
  // four-sigma band at n = 1e5 is about +/-0.006.
  double p0 = double(zeros) / double(g.size());
  CHECK(p0 == doctest::Approx(0.3).epsilon(0.025));

  spec.dist = DataDist::Gaussian;
  auto n = gen_data(spec, 0, 100000);
  double mean = 0.0, var = 0.0;
  for (double v : n) mean += v;
  mean /= double(n.size());
  for (double v : n) var += (v - mean) * (v - mean);
  var /= double(n.size());
  CHECK(mean == doctest::Approx(0.0).epsilon(0.02));
  CHECK(std::abs(mean) < 0.02);
  CHECK(var == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("f32 ingestion") {
  TempFile tf("zcomm_bench_ingest.f32");
  {
    std::ofstream out(tf.path, std::ios::binary);
    float vals[4] = {1.5f, -2.25f, 0.0f, 100.0f};
    out.write(reinterpret_cast<const char*>(vals), sizeof(vals));
  }
  auto got = ingest_f32(tf.path);
  CHECK(got == std::vector<double>{1.5, -2.25, 0.0, 100.0});

  {
    std::ofstream out(tf.path, std::ios::binary | std::ios::trunc);
    out.write("abcdef", 6);  // not a whole number of f32 words
  }
  CHECK_THROWS(ingest_f32(tf.path));
  CHECK_THROWS(ingest_f32("/nonexistent/zcomm.f32"));
}

TEST_CASE("experiment validation") {
  ExperimentSpec spec;
  spec.sizes = {64 * 1024};

  spec.ranks = 0;
  CHECK_THROWS_AS(run_experiment(spec), std::invalid_argument);
  spec.ranks = 2;

  spec.quant.kind = QuantKind::None;
  spec.collective = CollOp::AllReduce;
  CHECK_THROWS_AS(run_experiment(spec), std::invalid_argument);
  spec.quant.kind = QuantKind::Eb;

  spec.data.dist = DataDist::Geometric;
  spec.data.geomP = 1.5;
  CHECK_THROWS_AS(run_experiment(spec), std::invalid_argument);
  spec.data.geomP = 0.7;

  spec.sizes = {6};  // not word-aligned
  CHECK_THROWS_AS(run_experiment(spec), std::invalid_argument);
  spec.sizes = {0};
  CHECK_THROWS_AS(run_experiment(spec), std::invalid_argument);

  spec.collective = CollOp::AllToAll;
  spec.sizes = {12};  // 3 words across 2 ranks
  CHECK_THROWS_AS(run_experiment(spec), std::invalid_argument);
}

TEST_CASE("raw pin is its own baseline") {
  ExperimentSpec spec;
  spec.collective = CollOp::AllReduce;
  spec.ranks = 2;
  spec.sizes = {256 * 1024};
  spec.codec = CodecPin::Raw;
  spec.data.dist = DataDist::Gaussian;
  auto rows = run_experiment(spec);
  REQUIRE(rows.size() == 1);
  const ReportRow& r = rows[0];
  CHECK(r.speedupVsRaw == 1.0);
  CHECK(r.framesFixed == 0);
  CHECK(r.framesHuffman == 0);
  CHECK(r.framesRaw > 0);
  CHECK(r.crFinal == doctest::Approx(1.0));
  CHECK(r.crQuant == 1.0);
  CHECK(r.msgBytes == 256 * 1024);
  CHECK(r.simTimeSec > 0.0);
  CHECK(r.algBwBytesPerSec > 0.0);
  // AllReduce bus bandwidth is alg * 2(N-1)/N = alg at N = 2.
  CHECK(r.busBwBytesPerSec == doctest::Approx(r.algBwBytesPerSec).epsilon(1e-12));
}

TEST_CASE("quantized geometric data compresses and speeds up") {
  ExperimentSpec spec;
  spec.collective = CollOp::AllReduce;
  spec.ranks = 2;
  spec.sizes = {8ull << 20};
  spec.codec = CodecPin::Auto;
  spec.quant.kind = QuantKind::Eb;
  spec.quant.rel = 1e-3;
  spec.data.dist = DataDist::Geometric;
  auto rows = run_experiment(spec);
  REQUIRE(rows.size() == 1);
  const ReportRow& r = rows[0];
  CHECK(r.crFinal > 1.5);
  CHECK(r.speedupVsRaw > 1.2);
  CHECK(r.wirePayloadBytes < r.wireRawBytes);
  CHECK(r.framesFixed + r.framesHuffman > 0);
  CHECK(r.simTimeSec > 0.0);
  CHECK(r.exposedCodecSimSec >= 0.0);
}

TEST_CASE("incompressible uniform words pin at unity") {
  ExperimentSpec spec;
  spec.collective = CollOp::AllGather;
  spec.ranks = 2;
  spec.sizes = {1ull << 20};
  spec.quant.kind = QuantKind::None;  // bit-cast f32 words
  spec.data.dist = DataDist::Uniform;

  spec.codec = CodecPin::FixedLen;
  auto rows = run_experiment(spec);
  REQUIRE(rows.size() == 1);
  // Sign bits force full 32-bit symbols: no gain, and none claimed.
  CHECK(rows[0].crFinal == doctest::Approx(1.0).epsilon(0.02));
  CHECK(rows[0].crFinal >= 1.0 - 1e-12);

  spec.codec = CodecPin::Auto;
  auto autoRows = run_experiment(spec);
  REQUIRE(autoRows.size() == 1);
  CHECK(autoRows[0].crFinal >= 1.0 - 1e-12);
  CHECK(autoRows[0].crFinal < 1.6);
}

TEST_CASE("file-backed experiment derives its size") {
  TempFile tf("zcomm_bench_run.f32");
  const size_t n = 4096;
  {
    std::ofstream out(tf.path, std::ios::binary);
    for (size_t i = 0; i < n; ++i) {
      float v = float(i % 32) * 0.125f;
      out.write(reinterpret_cast<const char*>(&v), 4);
    }
  }
  ExperimentSpec spec;
  spec.collective = CollOp::Broadcast;
  spec.ranks = 2;
  spec.codec = CodecPin::Raw;
  spec.quant.kind = QuantKind::Eb;
  spec.data.dist = DataDist::File;
  spec.data.path = tf.path;

  auto rows = run_experiment(spec);  // sizes empty: derived from the file
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].msgBytes == 4 * n);
  CHECK(rows[0].dist == DataDist::File);

  spec.sizes = {4 * n + 4};  // conflicting explicit size
  CHECK_THROWS_AS(run_experiment(spec), std::invalid_argument);
}

TEST_CASE("csv round-trip is lossless") {
  ExperimentSpec spec;
  spec.collective = CollOp::AllGather;
  spec.ranks = 2;
  spec.sizes = {64 * 1024, 128 * 1024};
  spec.codec = CodecPin::Auto;
  spec.data.dist = DataDist::Geometric;
  auto rows = run_experiment(spec);
  REQUIRE(rows.size() == 2);

  std::ostringstream first;
  emit_csv(rows, first);
  std::istringstream in(first.str());
  auto parsed = parse_csv(in);
  REQUIRE(parsed.size() == rows.size());
  std::ostringstream second;
  emit_csv(parsed, second);
  CHECK(first.str() == second.str());

  std::istringstream line1(first.str());
  std::string header;
  std::getline(line1, header);
  CHECK(header ==
        "collective,ranks,msg_bytes,codec,quant,dist,seed,overlap,regime,"
        "bw_bytes_per_sec,latency_sec,sim_time_sec,wall_time_sec,wire_raw_bytes,"
        "wire_payload_bytes,wire_total_bytes,frames_raw,frames_fixedlen,frames_huffman,"
        "cr_quant,cr_final,alg_bw_bytes_per_sec,bus_bw_bytes_per_sec,speedup_vs_raw,"
        "exposed_codec_sim_sec,wall_codec_sec");

  std::istringstream badHeader("not,a,real,header\n");
  CHECK_THROWS(parse_csv(badHeader));
  std::istringstream shortRow(header + "\nallreduce,2\n");
  CHECK_THROWS(parse_csv(shortRow));
}

TEST_CASE("markdown report holds a pivot and the full table") {
  ExperimentSpec spec;
  spec.collective = CollOp::AllReduce;
  spec.ranks = 2;
  spec.sizes = {256 * 1024};
  spec.codec = CodecPin::Auto;
  spec.data.dist = DataDist::Geometric;
  auto rows = run_experiment(spec);

  std::ostringstream out;
  emit_markdown(rows, out);
  std::string md = out.str();
  CHECK(md.find("| message size |") != std::string::npos);
  CHECK(md.find("256 KiB") != std::string::npos);
  CHECK(md.find("auto") != std::string::npos);
  CHECK(md.find("allreduce") != std::string::npos);
}

}  // TEST_SUITE
