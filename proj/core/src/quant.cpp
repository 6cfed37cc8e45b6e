#include "zcomm/quant.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace zcomm {
namespace {

double checked_absmax(std::span<const double> x) {
  double amax = 0.0;
  for (double v : x) {
    if (!std::isfinite(v)) throw std::invalid_argument("eb_quantize: non-finite input");
    amax = std::max(amax, std::abs(v));
  }
  return amax;
}

int32_t round_to_symbol(double q) {
  // Half-away-from-zero keeps the bound |x - scale*symbol| <= scale/2 tight.
  if (std::abs(q) >= 2147483647.5)
    throw std::invalid_argument("quantize: bin index exceeds int32 range");
  return static_cast<int32_t>(std::llround(q));
}

}  // namespace

QuantizedStream eb_quantize(std::span<const double> x, double rel) {
  if (!(rel > 0.0) || rel > 1.0)
    throw std::invalid_argument("eb_quantize: rel must be in (0, 1]");
  double amax = checked_absmax(x);
  double scale = amax == 0.0 ? 1.0 : 2.0 * rel * amax;
  QuantizedStream q;
  q.symbols.resize(x.size());
  for (size_t i = 0; i < x.size(); ++i) q.symbols[i] = round_to_symbol(x[i] / scale);
  q.meta = {QuantMode::ErrorBounded, scale, 0, 4 * static_cast<uint64_t>(x.size())};
  return q;
}

QuantizedStream eb_quantize_with_scale(std::span<const double> x, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw std::invalid_argument("eb_quantize_with_scale: scale must be positive and finite");
  checked_absmax(x);
  QuantizedStream q;
  q.symbols.resize(x.size());
  for (size_t i = 0; i < x.size(); ++i) q.symbols[i] = round_to_symbol(x[i] / scale);
  q.meta = {QuantMode::ErrorBounded, scale, 0, 4 * static_cast<uint64_t>(x.size())};
  return q;
}

void eb_quantize_chunk(std::span<const double> x, double scale, std::span<int32_t> out) {
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw std::invalid_argument("eb_quantize_chunk: scale must be positive and finite");
  if (out.size() != x.size()) throw std::invalid_argument("eb_quantize_chunk: size mismatch");
  for (size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) throw std::invalid_argument("eb_quantize_chunk: non-finite input");
    out[i] = round_to_symbol(x[i] / scale);
  }
}

void qsgd_quantize_chunk(std::span<const double> x, uint32_t levels, double norm,
                         std::mt19937_64& rng, std::span<int32_t> out) {
  if (levels == 0 || levels > (1u << 30))
    throw std::invalid_argument("qsgd_quantize_chunk: levels must be in [1, 2^30]");
  if (!(norm >= 0.0) || !std::isfinite(norm))
    throw std::invalid_argument("qsgd_quantize_chunk: norm must be finite and nonnegative");
  if (out.size() != x.size()) throw std::invalid_argument("qsgd_quantize_chunk: size mismatch");
  double scale = norm == 0.0 ? 1.0 : norm;
  for (size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]))
      throw std::invalid_argument("qsgd_quantize_chunk: non-finite input");
    double u = norm == 0.0 ? 0.0 : levels * std::abs(x[i]) / scale;
    double fl = std::floor(u);
    double frac = u - fl;
    double draw = static_cast<double>(rng() >> 11) * 0x1.0p-53; // one draw per element
    int64_t mag = static_cast<int64_t>(fl) + (draw < frac ? 1 : 0);
    out[i] = static_cast<int32_t>(x[i] < 0.0 ? -mag : mag);
  }
}

QuantizedStream qsgd_quantize(std::span<const double> x, uint32_t levels, uint64_t seed) {
  double sumsq = 0.0;
  for (double v : x) {
    if (!std::isfinite(v)) throw std::invalid_argument("qsgd_quantize: non-finite input");
    sumsq += v * v;
  }
  double norm = std::sqrt(sumsq);

  std::mt19937_64 rng(seed);
  QuantizedStream q;
  q.symbols.resize(x.size());
  qsgd_quantize_chunk(x, levels, norm, rng, q.symbols);
  q.meta = {QuantMode::Qsgd, norm == 0.0 ? 1.0 : norm, levels, 4 * static_cast<uint64_t>(x.size())};
  return q;
}

QuantizedStream prequantized(std::vector<int32_t> symbols) {
  QuantizedStream q;
  q.meta = {QuantMode::PreQuantized, 1.0, 0, 4 * static_cast<uint64_t>(symbols.size())};
  q.symbols = std::move(symbols);
  return q;
}

void dequantize_into(std::span<const int32_t> symbols, const QuantMeta& meta,
                     std::span<double> out) {
  if (out.size() != symbols.size())
    throw std::invalid_argument("dequantize_into: size mismatch");
  switch (meta.mode) {
    case QuantMode::ErrorBounded:
      for (size_t i = 0; i < symbols.size(); ++i) out[i] = meta.scale * symbols[i];
      break;
    case QuantMode::Qsgd: {
      if (meta.levels == 0) throw std::invalid_argument("dequantize: qsgd stream with levels 0");
      double k = meta.scale / meta.levels;
      for (size_t i = 0; i < symbols.size(); ++i) out[i] = k * symbols[i];
      break;
    }
    case QuantMode::PreQuantized:
      for (size_t i = 0; i < symbols.size(); ++i) out[i] = symbols[i];
      break;
    default:
      throw std::invalid_argument("dequantize: unknown mode");
  }
}

std::vector<double> dequantize(const QuantizedStream& q) {
  std::vector<double> out(q.symbols.size());
  dequantize_into(q.symbols, q.meta, out);
  return out;
}

}  // namespace zcomm
