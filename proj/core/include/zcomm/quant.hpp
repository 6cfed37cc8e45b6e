#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace zcomm {

enum class QuantMode : uint8_t { ErrorBounded = 0, Qsgd = 1, PreQuantized = 2 };

struct QuantMeta {
  QuantMode mode = QuantMode::PreQuantized;
  double scale = 1.0;        // ErrorBounded: bin width; Qsgd: L2 norm of the input
  uint32_t levels = 0;       // Qsgd only
  uint64_t origRawBytes = 0; // f32 byte count of the pre-quantization input
};

struct QuantizedStream {
  std::vector<int32_t> symbols;
  QuantMeta meta;
  size_t count() const { return symbols.size(); }
};

// Uniform scalar quantizer with absolute error bound rel*max|x| (bin width
// 2*rel*max|x|, symbols round(x/width)). All-zero input keeps scale 1 so the
// stream stays well-formed. Rejects rel outside (0,1], non-finite input, and
// inputs whose bin index does not fit int32.
QuantizedStream eb_quantize(std::span<const double> x, double rel);

// Same quantizer at a caller-fixed bin width (shared-scale collectives).
QuantizedStream eb_quantize_with_scale(std::span<const double> x, double scale);

// Unbiased stochastic quantizer: u = levels*|x_i|/||x||2, symbol =
// sgn(x_i)*xi with xi in {floor(u), floor(u)+1} and P(floor(u)+1) = u-floor(u).
// One RNG draw is consumed per element, so streams are reproducible per seed.
QuantizedStream qsgd_quantize(std::span<const double> x, uint32_t levels, uint64_t seed);

// Wraps an already-quantized symbol buffer (scale 1, identity dequantization).
QuantizedStream prequantized(std::vector<int32_t> symbols);

// Streamed variants for inputs too large to hold at once: quantize one chunk
// at a time under a precomputed global parameter.
void eb_quantize_chunk(std::span<const double> x, double scale, std::span<int32_t> out);

// Draws one variate per element from rng; feeding chunks sequentially from a
// fresh seeded generator reproduces qsgd_quantize exactly.
void qsgd_quantize_chunk(std::span<const double> x, uint32_t levels, double norm,
                         std::mt19937_64& rng, std::span<int32_t> out);

std::vector<double> dequantize(const QuantizedStream& q);
void dequantize_into(std::span<const int32_t> symbols, const QuantMeta& meta,
                     std::span<double> out);

}  // namespace zcomm
