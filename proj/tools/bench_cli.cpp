// Experiment sweep driver: generates or ingests data, runs collectives over
// the simulated fabric with the chosen quantizer and codec policy, and emits
// CSV (and optionally Markdown) reports. Flags mirror ZCOMM_* env vars.

#include <cctype>
#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "zcomm/bench.hpp"

namespace {

uint64_t parse_one_size(std::string tok) {
  size_t i = 0;
  while (i < tok.size() && (std::isdigit(static_cast<unsigned char>(tok[i])) || tok[i] == '.'))
    ++i;
  if (i == 0) throw CLI::ValidationError("--sizes", "no number in '" + tok + "'");
  double v = std::stod(tok.substr(0, i));
  std::string suf = tok.substr(i);
  for (auto& c : suf) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  double mult = 1.0;
  if (suf.empty() || suf == "b") mult = 1.0;
  else if (suf == "k" || suf == "kib" || suf == "kb") mult = 1024.0;
  else if (suf == "m" || suf == "mib" || suf == "mb") mult = 1048576.0;
  else if (suf == "g" || suf == "gib" || suf == "gb") mult = 1073741824.0;
  else throw CLI::ValidationError("--sizes", "unknown suffix '" + suf + "'");
  double bytes = v * mult;
  if (bytes < 1.0 || bytes > 9.0e18)
    throw CLI::ValidationError("--sizes", "size out of range: '" + tok + "'");
  return static_cast<uint64_t>(bytes);
}

std::vector<uint64_t> parse_sizes(const std::string& list) {
  std::vector<uint64_t> out;
  size_t pos = 0;
  while (pos <= list.size()) {
    size_t comma = list.find(',', pos);
    if (comma == std::string::npos) comma = list.size();
    std::string tok = list.substr(pos, comma - pos);
    if (!tok.empty()) out.push_back(parse_one_size(tok));
    pos = comma + 1;
  }
  if (out.empty()) throw CLI::ValidationError("--sizes", "empty size list");
  return out;
}

zcomm::QuantSpec parse_quant(const std::string& s) {
  zcomm::QuantSpec q;
  if (s == "none") {
    q.kind = zcomm::QuantKind::None;
  } else if (s.rfind("eb:", 0) == 0) {
    q.kind = zcomm::QuantKind::Eb;
    q.rel = std::stod(s.substr(3));
  } else if (s == "eb") {
    q.kind = zcomm::QuantKind::Eb;
  } else if (s.rfind("qsgd:", 0) == 0) {
    q.kind = zcomm::QuantKind::Qsgd;
    q.levels = static_cast<uint32_t>(std::stoul(s.substr(5)));
  } else {
    throw CLI::ValidationError("--quant", "expected eb:REL, qsgd:LEVELS, or none");
  }
  return q;
}

zcomm::DataSpec parse_dist(const std::string& s, uint64_t seed) {
  zcomm::DataSpec d;
  d.seed = seed;
  if (s == "uniform") {
    d.dist = zcomm::DataDist::Uniform;
  } else if (s == "gaussian") {
    d.dist = zcomm::DataDist::Gaussian;
  } else if (s == "geometric") {
    d.dist = zcomm::DataDist::Geometric;
  } else if (s.rfind("geom:", 0) == 0) {
    d.dist = zcomm::DataDist::Geometric;
    d.geomP = std::stod(s.substr(5));
  } else if (s.rfind("file:", 0) == 0) {
    d.dist = zcomm::DataDist::File;
    d.path = s.substr(5);
  } else {
    throw CLI::ValidationError("--dist", "expected uniform, gaussian, geom:P, or file:PATH");
  }
  return d;
}

zcomm::CodecPin parse_codec(const std::string& s) {
  if (s == "fixed") return zcomm::CodecPin::FixedLen;  // CLI shorthand
  return zcomm::codecpin_from_string(s);
}

zcomm::OverlapMode parse_overlap(const std::string& s) {
  if (s == "on") return zcomm::OverlapMode::Pipelined;
  if (s == "off") return zcomm::OverlapMode::Serialized;
  return zcomm::overlap_from_string(s);
}

zcomm::Regime parse_regime(const std::string& s) {
  if (s == "inter") return zcomm::Regime::InterNode;
  if (s == "intra") return zcomm::Regime::IntraNode;
  return zcomm::regime_from_string(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Collective-compression sweep driver: simulated ring collectives with "
               "quantization, per-batch codec arbitration, and wire accounting"};

  std::string collective = "allreduce", sizesArg = "4MiB", codec = "auto", quant = "eb:1e-3";
  std::string regime = "inter", overlap = "on", dist = "uniform", out = "-", md, config;
  int ranks = 4;
  uint64_t seed = 1;
  double bw = 0.0, latency = -1.0;
  bool perSlot = false, calibrate = false;

  app.add_option("--collective", collective, "allreduce|allgather|alltoall|broadcast")
      ->envname("ZCOMM_COLLECTIVE");
  app.add_option("--ranks", ranks, "participating ranks")->envname("ZCOMM_RANKS");
  app.add_option("--sizes", sizesArg,
                 "comma list of per-rank message sizes; suffixes B, KiB, MiB, GiB")
      ->envname("ZCOMM_SIZES");
  app.add_option("--codec", codec, "auto|raw|fixed|huffman")->envname("ZCOMM_CODEC");
  app.add_option("--quant", quant, "eb:REL | qsgd:LEVELS | none")->envname("ZCOMM_QUANT");
  app.add_option("--bw", bw, "link bandwidth, bytes/second (overrides the regime default)")
      ->envname("ZCOMM_BW");
  app.add_option("--latency", latency, "link latency, seconds (overrides the regime default)")
      ->envname("ZCOMM_LATENCY");
  app.add_option("--regime", regime, "inter|intra node network model")->envname("ZCOMM_REGIME");
  app.add_option("--overlap", overlap, "on (pipelined) | off (serialized)")
      ->envname("ZCOMM_OVERLAP");
  app.add_option("--dist", dist, "uniform|gaussian|geom:P|file:PATH")->envname("ZCOMM_DIST");
  app.add_option("--seed", seed, "generator seed")->envname("ZCOMM_SEED");
  app.add_option("--out", out, "CSV path, '-' for stdout")->envname("ZCOMM_OUT");
  app.add_option("--md", md, "also write a Markdown report here")->envname("ZCOMM_MD");
  app.add_option("--config", config, "arbitration config file (key = value lines)")
      ->envname("ZCOMM_CONFIG");
  app.add_flag("--per-slot", perSlot, "frame per 512 KiB slot instead of 8-slot spans")
      ->envname("ZCOMM_PER_SLOT");
  app.add_flag("--calibrate", calibrate,
               "measure codec throughputs on this host for the cost model instead of the "
               "built-in rates");

  CLI11_PARSE(app, argc, argv);

  try {
    zcomm::ExperimentSpec spec;
    spec.collective = zcomm::collop_from_string(collective);
    spec.ranks = ranks;
    spec.sizes = parse_sizes(sizesArg);
    spec.codec = parse_codec(codec);
    spec.quant = parse_quant(quant);
    spec.data = parse_dist(dist, seed);
    spec.overlap = parse_overlap(overlap);
    spec.net = (parse_regime(regime) == zcomm::Regime::IntraNode)
                   ? zcomm::intranode_network()
                   : zcomm::internode_network();
    if (bw > 0.0) spec.net.bytesPerSec = bw;
    if (latency >= 0.0) spec.net.latencySec = latency;
    spec.perSlotFraming = perSlot;

    if (!config.empty()) zcomm::load_arbitration_config_file(config, spec.arb);
    zcomm::apply_env_overrides(spec.arb);
    if (calibrate) spec.arb.cost = zcomm::calibrate_cost_model();

    if (spec.data.dist == zcomm::DataDist::File && sizesArg == "4MiB" &&
        app.count("--sizes") == 0 && std::getenv("ZCOMM_SIZES") == nullptr) {
      spec.sizes.clear();  // size defaults to the whole file
    }

    std::vector<zcomm::ReportRow> rows = zcomm::run_experiment(spec);

    if (out == "-") {
      zcomm::emit_csv(rows, std::cout);
    } else {
      zcomm::emit_csv_file(rows, out);
      std::cerr << "wrote " << rows.size() << " rows to " << out << "\n";
    }
    if (!md.empty()) {
      zcomm::emit_markdown_file(rows, md);
      std::cerr << "wrote Markdown report to " << md << "\n";
    }

    for (const auto& r : rows) {
      std::cerr << zcomm::to_string(r.collective) << " x" << r.ranks << " " << r.msgBytes
                << " B " << zcomm::to_string(r.codec) << ": sim " << r.simTimeSec << " s, CR "
                << r.crFinal << ", busBW " << r.busBwBytesPerSec / 1.0e9 << " GB/s, speedup "
                << r.speedupVsRaw << "\n";
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  }
  return 0;
}
