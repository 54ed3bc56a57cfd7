#include "dnas/quantizers.hpp"

#include <atomic>
#include <cmath>

namespace dnas::quant {

bool valid_bits(int k) { return (k >= 1 && k <= 8) || k == kFullPrecision; }

namespace {

std::atomic<int> g_bypass_depth{0};

void check_bits_1_8(int k) {
  if (k < 1 || k > 8) fail("q_k: bit-width must be in [1,8], got " + std::to_string(k));
}

double clamp01_tolerant(double x, const char* who) {
  if (x < -1e-9 || x > 1.0 + 1e-9)
    fail(std::string(who) + ": input " + std::to_string(x) + " outside [0,1]");
  return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x);
}

}  // namespace

QuantRoundingBypass::QuantRoundingBypass() { ++g_bypass_depth; }
QuantRoundingBypass::~QuantRoundingBypass() { --g_bypass_depth; }
bool rounding_bypassed() { return g_bypass_depth.load() > 0; }

double q_k(double x, int k) {
  check_bits_1_8(k);
  x = clamp01_tolerant(x, "q_k");
  const double levels = static_cast<double>((1 << k) - 1);
  double i = std::round(x * levels);  // std::round is half away from zero
  if (i < 0.0) i = 0.0;
  if (i > levels) i = levels;
  return i / levels;
}

Tensor qk_ste(const Tensor& x, int k) {
  check_bits_1_8(k);
  const auto n = static_cast<std::size_t>(x.numel());
  std::vector<double> y(n);
  if (rounding_bypassed()) {
    for (std::size_t i = 0; i < n; ++i) y[i] = clamp01_tolerant(x.data()[i], "q_k");
  } else {
    for (std::size_t i = 0; i < n; ++i) y[i] = q_k(x.data()[i], k);
  }
  Tensor out(x.shape(), std::move(y));
  if (active_tape() && x.requires_grad()) {
    auto xi = x.impl(), oi = out.impl();
    out.set_requires_grad(true);
    active_tape()->record({"qk_ste", out.impl(), [xi, oi] {
                             xi->ensure_grad();
                             for (std::size_t i = 0; i < oi->grad.size(); ++i)
                               xi->grad[i] += oi->grad[i];
                           }});
  }
  return out;
}

Tensor dorefa_weights(const Tensor& w, int k) {
  if (!valid_bits(k)) fail("dorefa_weights: invalid bit-width " + std::to_string(k));
  if (w.numel() == 0) fail("dorefa_weights: empty tensor");
  if (k == kFullPrecision) return w;
  Tensor t = tanh_op(w);
  Tensor m = max_abs(t);
  if (m.value() == 0.0) return scale(w, 0.0);
  Tensor z = add_const(div_by_scalar(t, scale(m, 2.0)), 0.5);
  Tensor q = qk_ste(z, k);
  return add_const(scale(q, 2.0), -1.0);
}

Tensor pact_clip(const Tensor& x, const Tensor& alpha) {
  if (alpha.numel() != 1) fail("pact_clip: alpha must be a single-element tensor");
  const double a = alpha.value();
  if (a <= 0.0) fail("pact_clip: alpha must be > 0, got " + std::to_string(a));
  const auto n = static_cast<std::size_t>(x.numel());
  std::vector<double> y(n);
  // 0.5(|x| - |x-a| + a) == clamp(x, 0, a); the clamp form is used so clipped
  // values are exact (the abs form leaves 1-ulp residue).
  for (std::size_t i = 0; i < n; ++i) {
    const double v = x.data()[i];
    y[i] = v < 0.0 ? 0.0 : (v > a ? a : v);
  }
  Tensor out(x.shape(), std::move(y));
  bool rec = active_tape() && (x.requires_grad() || alpha.requires_grad());
  if (rec) {
    auto xi = x.impl(), ai = alpha.impl(), oi = out.impl();
    out.set_requires_grad(true);
    active_tape()->record({"pact_clip", out.impl(), [xi, ai, oi, a] {
                             if (xi->requires_grad) {
                               xi->ensure_grad();
                               for (std::size_t i = 0; i < oi->grad.size(); ++i)
                                 if (xi->data[i] > 0.0 && xi->data[i] < a)
                                   xi->grad[i] += oi->grad[i];
                             }
                             if (ai->requires_grad) {
                               ai->ensure_grad();
                               for (std::size_t i = 0; i < oi->grad.size(); ++i)
                                 if (xi->data[i] >= a) ai->grad[0] += oi->grad[i];
                             }
                           }});
  }
  return out;
}

Tensor pact_quantize(const Tensor& y, const Tensor& alpha, int k) {
  if (!valid_bits(k)) fail("pact_quantize: invalid bit-width " + std::to_string(k));
  if (alpha.numel() != 1) fail("pact_quantize: alpha must be a single-element tensor");
  const double a = alpha.value();
  if (a <= 0.0) fail("pact_quantize: alpha must be > 0, got " + std::to_string(a));
  if (k == kFullPrecision) return y;
  const auto n = static_cast<std::size_t>(y.numel());
  std::vector<double> out_v(n);
  if (rounding_bypassed()) {
    for (std::size_t i = 0; i < n; ++i) out_v[i] = y.data()[i];
  } else {
    for (std::size_t i = 0; i < n; ++i) out_v[i] = q_k(y.data()[i] / a, k) * a;
  }
  Tensor out(y.shape(), std::move(out_v));
  if (active_tape() && y.requires_grad()) {
    auto yi = y.impl(), oi = out.impl();
    out.set_requires_grad(true);
    active_tape()->record({"pact_quantize", out.impl(), [yi, oi] {
                             yi->ensure_grad();
                             for (std::size_t i = 0; i < oi->grad.size(); ++i)
                               yi->grad[i] += oi->grad[i];
                           }});
  }
  return out;
}

}  // namespace dnas::quant
