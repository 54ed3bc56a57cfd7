#pragma once

#include "dnas/tensor.hpp"

namespace dnas::quant {

// Bit-widths: 1..8 quantize to a 2^k-point grid, 32 means pass-through.
constexpr int kFullPrecision = 32;

bool valid_bits(int k);

struct QuantConfig {
  int weight_bits = kFullPrecision;
  int act_bits = kFullPrecision;
  double pact_alpha_init = 10.0;
};

// Scalar k-bit grid quantizer: nearest neighbour in {i/(2^k-1)}, ties rounded
// half away from zero on i = x*(2^k-1). Domain [0,1] with 1e-9 slack.
double q_k(double x, int k);

// Test seam: while a bypass guard is alive, q_k-based ops skip the rounding
// step so the straight-through surrogate can be evaluated directly (used by
// the finite-difference gradient checks).
class QuantRoundingBypass {
 public:
  QuantRoundingBypass();
  ~QuantRoundingBypass();
  QuantRoundingBypass(const QuantRoundingBypass&) = delete;
  QuantRoundingBypass& operator=(const QuantRoundingBypass&) = delete;
};
bool rounding_bypassed();

// Elementwise q_k on a tensor with straight-through gradient (identity).
Tensor qk_ste(const Tensor& x, int k);

// DoReFa weight quantization:
//   w_q = 2 * q_k( tanh(w) / (2 max|tanh(W)|) + 0.5 ) - 1
// The max is taken over the whole tensor and recomputed every forward; an
// all-zero tensor maps to all zeros. k = 32 returns the input unchanged.
// Backward: quantization step is identity (STE); the tanh / max / divide
// chain carries its analytic gradient, with max routing a subgradient to the
// first-argmax element.
Tensor dorefa_weights(const Tensor& w, int k);

// PACT clip y = 0.5(|x| - |x-alpha| + alpha) == clamp(x, 0, alpha).
// d/dx = 1 on 0 < x < alpha; d/dalpha = 1 where x >= alpha.
Tensor pact_clip(const Tensor& x, const Tensor& alpha);

// y_k = q_k(y/alpha) * alpha on pre-clipped y; straight-through identity in y,
// no gradient to alpha from this step. k = 32 returns y unchanged.
Tensor pact_quantize(const Tensor& y, const Tensor& alpha, int k);

}  // namespace dnas::quant
