#include "zcomm/rea.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "zcomm/fixedlen.hpp"

namespace zcomm {
namespace {

// Predicted saving must reach minGainPermil bytes per thousand raw bytes.
bool gain_ok(uint64_t rawBytes, uint64_t payload, uint32_t minGainPermil) {
  if (payload >= rawBytes) return false;
  return (rawBytes - payload) * 1000ull >= static_cast<uint64_t>(minGainPermil) * rawBytes;
}

double stage_sec(uint64_t bytes, double rate) {
  return rate > 0.0 ? static_cast<double>(bytes) / rate : 0.0;
}

CodecEstimate make_estimate(CodecId c, uint64_t rawBytes, uint64_t payload,
                            const TransportHint& hint, const ArbitrationConfig& cfg) {
  const CodecCost& cost = cfg.cost.for_codec(c);
  CodecEstimate e;
  e.codec = c;
  e.predictedPayload = payload;
  e.encSec = stage_sec(rawBytes, cost.encBytesPerSec);
  e.decSec = stage_sec(rawBytes, cost.decBytesPerSec);
  double beta = hint.betaEffBytesPerSec > 0.0 ? hint.betaEffBytesPerSec
                                              : std::numeric_limits<double>::infinity();
  e.predictedSec = cost.alphaSec + cfg.lamEnc * e.encSec +
                   static_cast<double>(payload) / beta + cfg.lamDec * e.decSec;
  return e;
}

EncodeResult commit_raw(std::span<const uint8_t> raw, std::span<uint8_t> stage) {
  size_t total = frame_commit_raw(raw, stage);
  if (total == 0) return {};
  return {CodecId::Raw, raw.size(), total};
}

bool parse_bool(const std::string& v) {
  if (v == "1" || v == "true" || v == "on") return true;
  if (v == "0" || v == "false" || v == "off") return false;
  throw std::invalid_argument("expected boolean, got '" + v + "'");
}

// Applies one key=value pair; throws on unknown key or unparsable value.
void apply_kv(ArbitrationConfig& cfg, const std::string& key, const std::string& value) {
  auto as_u64 = [&] { return static_cast<uint64_t>(std::stoull(value)); };
  auto as_f64 = [&] { return std::stod(value); };
  if (key == "small_batch_threshold") cfg.smallBatchThresholdBytes = as_u64();
  else if (key == "huffman_min_raw_bytes") cfg.huffmanMinRawBytes = as_u64();
  else if (key == "min_gain_permil") cfg.minGainPermil = static_cast<uint32_t>(as_u64());
  else if (key == "embed_codebook") cfg.embedCodebook = parse_bool(value);
  else if (key == "lam_enc") cfg.lamEnc = as_f64();
  else if (key == "lam_dec") cfg.lamDec = as_f64();
  else if (key == "fixedlen_alpha_sec") cfg.cost.fixedlen.alphaSec = as_f64();
  else if (key == "fixedlen_enc_bps") cfg.cost.fixedlen.encBytesPerSec = as_f64();
  else if (key == "fixedlen_dec_bps") cfg.cost.fixedlen.decBytesPerSec = as_f64();
  else if (key == "huffman_alpha_sec") cfg.cost.huffman.alphaSec = as_f64();
  else if (key == "huffman_enc_bps") cfg.cost.huffman.encBytesPerSec = as_f64();
  else if (key == "huffman_dec_bps") cfg.cost.huffman.decBytesPerSec = as_f64();
  else throw std::invalid_argument("unknown config key '" + key + "'");
}

constexpr const char* kConfigKeys[] = {
    "small_batch_threshold", "huffman_min_raw_bytes", "min_gain_permil",
    "embed_codebook",        "lam_enc",               "lam_dec",
    "fixedlen_alpha_sec",    "fixedlen_enc_bps",      "fixedlen_dec_bps",
    "huffman_alpha_sec",     "huffman_enc_bps",       "huffman_dec_bps",
};

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

SampleStats profile_sample(std::span<const uint8_t> raw, const HuffmanContext* ctx) {
  SampleStats st;
  st.sampledBytes = std::min<uint64_t>(raw.size(), kSampleWindowBytes);
  std::span<const uint8_t> win = raw.first(st.sampledBytes);
  for (uint8_t b : win) st.hist[b]++;

  for (size_t i = 0; i + 4 <= win.size(); i += 4) {
    uint32_t u = static_cast<uint32_t>(win[i]) | (static_cast<uint32_t>(win[i + 1]) << 8) |
                 (static_cast<uint32_t>(win[i + 2]) << 16) |
                 (static_cast<uint32_t>(win[i + 3]) << 24);
    uint32_t z = zigzag32(static_cast<int32_t>(u));
    st.maxZigZag = std::max<uint64_t>(st.maxZigZag, z);
  }

  if (ctx != nullptr && ctx->valid) {
    if (auto el = huffman_expected_code_len(*ctx, st.hist)) {
      st.ctxCodeLenBits = *el;
      st.ctxCodeLenValid = true;
    }
  }
  if (auto el = huffman_self_code_len(st.hist)) {
    st.selfCodeLenBits = *el;
    st.selfCodeLenValid = true;
  }
  return st;
}

uint64_t predict_payload(CodecId c, uint64_t rawBytes, const SampleStats& stats,
                         const ArbitrationConfig& cfg) {
  switch (c) {
    case CodecId::Raw:
      return rawBytes;
    case CodecId::FixedLen: {
      if (rawBytes < 4 || rawBytes % 4 != 0) return 0;
      unsigned w = 1;
      uint64_t z = stats.maxZigZag;
      while ((1ull << w) <= z && w < 32) ++w;
      return fixedlen_packed_bytes(rawBytes / 4, w);
    }
    case CodecId::Huffman: {
      bool valid = cfg.embedCodebook ? stats.selfCodeLenValid : stats.ctxCodeLenValid;
      if (!valid) return 0;
      double el = cfg.embedCodebook ? stats.selfCodeLenBits : stats.ctxCodeLenBits;
      double bits = static_cast<double>(rawBytes) * el;
      uint64_t payload = static_cast<uint64_t>((bits + 7.0) / 8.0);
      if (cfg.embedCodebook) payload += kHuffCodebookBytes;
      return payload;
    }
  }
  return rawBytes;
}

ArbitrationPlan arbitrate_plan(uint64_t rawBytes, uint64_t payloadCap,
                               const SampleStats& stats, const TransportHint& hint,
                               const HuffmanContext* ctx, const ArbitrationConfig& cfg) {
  ArbitrationPlan plan;

  plan.raw = make_estimate(CodecId::Raw, rawBytes, rawBytes, hint, cfg);
  plan.raw.admissible = rawBytes > 0 && rawBytes <= payloadCap;

  uint64_t pf = predict_payload(CodecId::FixedLen, rawBytes, stats, cfg);
  plan.fixedlen = make_estimate(CodecId::FixedLen, rawBytes, pf, hint, cfg);
  plan.fixedlen.admissible =
      pf > 0 && pf <= payloadCap && gain_ok(rawBytes, pf, cfg.minGainPermil);

  uint64_t ph = predict_payload(CodecId::Huffman, rawBytes, stats, cfg);
  plan.huffman = make_estimate(CodecId::Huffman, rawBytes, ph, hint, cfg);
  bool ctxUsable = cfg.embedCodebook || (ctx != nullptr && ctx->valid);
  plan.huffman.admissible = ph > 0 && ctxUsable && rawBytes >= cfg.huffmanMinRawBytes &&
                            ph <= payloadCap && gain_ok(rawBytes, ph, cfg.minGainPermil);

  // Raw is always selectable; candidates must beat the incumbent strictly, so
  // ties resolve toward the simpler codec.
  plan.choice = CodecId::Raw;
  double best = plan.raw.predictedSec;
  if (plan.fixedlen.admissible && plan.fixedlen.predictedSec < best) {
    plan.choice = CodecId::FixedLen;
    best = plan.fixedlen.predictedSec;
  }
  if (plan.huffman.admissible && plan.huffman.predictedSec < best) {
    plan.choice = CodecId::Huffman;
  }
  return plan;
}

EncodeResult encode_best(std::span<const uint8_t> raw, std::span<uint8_t> stage,
                         const TransportHint& hint, const HuffmanContext* ctx,
                         const ArbitrationConfig& cfg) {
  if (raw.empty() || stage.size() <= kHeaderBytes) return {};
  uint64_t payloadCap = stage.size() - kHeaderBytes;
  if (raw.size() <= cfg.smallBatchThresholdBytes) return commit_raw(raw, stage);

  SampleStats stats = profile_sample(raw, ctx);
  ArbitrationPlan plan = arbitrate_plan(raw.size(), payloadCap, stats, hint, ctx, cfg);
  std::span<uint8_t> payloadDst = stage.subspan(kHeaderBytes);

  if (plan.choice == CodecId::FixedLen) {
    const int32_t* syms = nullptr;
    std::vector<int32_t> tmp;
    if (reinterpret_cast<uintptr_t>(raw.data()) % alignof(int32_t) == 0) {
      syms = reinterpret_cast<const int32_t*>(raw.data());
    } else {
      tmp.resize(raw.size() / 4);
      std::memcpy(tmp.data(), raw.data(), tmp.size() * 4);
      syms = tmp.data();
    }
    unsigned width = 0;
    size_t payload = fixedlen_encode({syms, raw.size() / 4}, payloadDst, &width);
    if (payload > 0 && payload <= payloadCap && gain_ok(raw.size(), payload, cfg.minGainPermil)) {
      FrameHeader h;
      h.codec = CodecId::FixedLen;
      h.flags = 0;
      h.rawBytes = raw.size();
      h.payloadBytes = payload;
      h.params = width;
      write_header(h, stage);
      return {CodecId::FixedLen, payload, kHeaderBytes + payload};
    }
  } else if (plan.choice == CodecId::Huffman) {
    HuffmanContext own;
    const HuffmanContext* use = ctx;
    if (cfg.embedCodebook) {
      // The embedded code must cover every byte of the batch, not just the
      // profiled window, so it is built from a full histogram.
      std::array<uint64_t, 256> full{};
      for (uint8_t b : raw) full[b]++;
      own = huffman_build_context(full);
      use = &own;
    }
    if (use != nullptr && use->valid) {
      size_t payload = huffman_encode(raw, *use, payloadDst, cfg.embedCodebook);
      if (payload > 0 && payload <= payloadCap &&
          gain_ok(raw.size(), payload, cfg.minGainPermil)) {
        FrameHeader h;
        h.codec = CodecId::Huffman;
        h.flags = cfg.embedCodebook ? kFlagEmbeddedCodebook : 0;
        h.rawBytes = raw.size();
        h.payloadBytes = payload;
        h.params = cfg.embedCodebook ? kHuffCodebookBytes : 0;
        write_header(h, stage);
        return {CodecId::Huffman, payload, kHeaderBytes + payload};
      }
    }
  }
  return commit_raw(raw, stage);
}

void load_arbitration_config(std::istream& in, ArbitrationConfig& cfg) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key=value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    try {
      apply_kv(cfg, key, value);
    } catch (const std::exception& e) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
}

void load_arbitration_config_file(const std::string& path, ArbitrationConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  load_arbitration_config(in, cfg);
}

void apply_env_overrides(ArbitrationConfig& cfg) {
  for (const char* key : kConfigKeys) {
    std::string env = "ZCOMM_";
    for (const char* p = key; *p; ++p) {
      env += static_cast<char>(*p == '-' ? '_' : std::toupper(static_cast<unsigned char>(*p)));
    }
    const char* v = std::getenv(env.c_str());
    if (v != nullptr) apply_kv(cfg, key, v);
  }
}

CostModel calibrate_cost_model(size_t probeBytes) {
  using clock = std::chrono::steady_clock;
  probeBytes = std::max<size_t>(probeBytes, 64 * 1024);
  probeBytes -= probeBytes % 4;

  // Skewed symbols so both codecs have realistic work to do.
  std::mt19937_64 rng(12345);
  std::vector<int32_t> syms(probeBytes / 4);
  std::geometric_distribution<int> geo(0.3);
  for (auto& s : syms) s = geo(rng);
  std::span<const uint8_t> raw{reinterpret_cast<const uint8_t*>(syms.data()), probeBytes};

  std::vector<uint8_t> out(probeBytes + probeBytes / 2 + 1024);
  std::vector<uint8_t> back(probeBytes);

  auto time_best_of3 = [&](auto&& fn) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i) {
      auto t0 = clock::now();
      fn();
      auto t1 = clock::now();
      best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
    }
    return best;
  };

  CostModel m;

  unsigned width = 0;
  size_t fpay = 0;
  double fenc = time_best_of3([&] { fpay = fixedlen_encode(syms, out, &width); });
  FrameHeader fh;
  fh.codec = CodecId::FixedLen;
  fh.rawBytes = probeBytes;
  fh.payloadBytes = fpay;
  fh.params = width;
  double fdec = time_best_of3(
      [&] { fixedlen_decode_into(fh, {out.data(), fpay}, back); });
  m.fixedlen.encBytesPerSec = static_cast<double>(probeBytes) / fenc;
  m.fixedlen.decBytesPerSec = static_cast<double>(probeBytes) / fdec;
  m.fixedlen.alphaSec = 0.0;

  std::array<uint64_t, 256> hist{};
  for (uint8_t b : raw) hist[b]++;
  HuffmanContext ctx = huffman_build_context(hist);
  size_t hpay = 0;
  double henc = time_best_of3([&] { hpay = huffman_encode(raw, ctx, out, false); });
  FrameHeader hh;
  hh.codec = CodecId::Huffman;
  hh.rawBytes = probeBytes;
  hh.payloadBytes = hpay;
  hh.params = 0;
  double hdec = time_best_of3(
      [&] { huffman_decode_into(hh, {out.data(), hpay}, &ctx, back); });
  m.huffman.encBytesPerSec = static_cast<double>(probeBytes) / henc;
  m.huffman.decBytesPerSec = static_cast<double>(probeBytes) / hdec;
  m.huffman.alphaSec = 0.0;

  return m;
}

}  // namespace zcomm
