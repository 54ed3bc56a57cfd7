#include "dnas/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace dnas {

void fail(const std::string& msg) { throw std::runtime_error(msg); }

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << ',';
    os << s[i];
  }
  os << ']';
  return os.str();
}

std::int64_t shape_numel(const Shape& s) {
  std::int64_t n = 1;
  for (int d : s) {
    if (d <= 0) fail("tensor: non-positive dimension in shape " + shape_str(s));
    n *= d;
  }
  return n;
}

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad) {
  const std::int64_t n = shape_numel(shape);
  if (n != static_cast<std::int64_t>(data.size()))
    fail("tensor: shape " + shape_str(shape) + " wants " + std::to_string(n) + " values, got " +
         std::to_string(data.size()));
  impl_ = std::make_shared<TensorImpl>();
  impl_->shape = std::move(shape);
  impl_->data = std::move(data);
  impl_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const auto n = static_cast<std::size_t>(shape_numel(shape));
  return Tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const auto n = static_cast<std::size_t>(shape_numel(shape));
  return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor(Shape{1}, std::vector<double>{value}, requires_grad);
}

Tensor Tensor::from_vector(const std::vector<double>& v, bool requires_grad) {
  return Tensor(Shape{static_cast<int>(v.size())}, v, requires_grad);
}

const std::vector<double>& Tensor::grad() const {
  static const std::vector<double> kEmpty;
  return impl_->grad.empty() ? kEmpty : impl_->grad;
}

double Tensor::value() const {
  if (numel() != 1) fail("Tensor::value: tensor has " + std::to_string(numel()) + " elements");
  return impl_->data[0];
}

bool Tensor::all_finite() const {
  for (double v : impl_->data)
    if (!std::isfinite(v)) return false;
  return true;
}

void Tensor::check_finite(const std::string& context) const {
  if (!all_finite()) fail(context + ": non-finite value in tensor " + shape_str(shape()));
}

Tensor Tensor::clone_detached() const {
  Tensor out(impl_->shape, impl_->data, impl_->requires_grad);
  return out;
}

// ---- tape ----

namespace {
thread_local Tape* g_active_tape = nullptr;
}

Tape* active_tape() { return g_active_tape; }

TapeScope::TapeScope() : prev_(g_active_tape) { g_active_tape = &tape_; }
TapeScope::~TapeScope() { g_active_tape = prev_; }

NoGradScope::NoGradScope() : prev_(g_active_tape) { g_active_tape = nullptr; }
NoGradScope::~NoGradScope() { g_active_tape = prev_; }

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1)
    fail("backward: loss must be a single-element tensor");
  bool found = false;
  for (const auto& op : ops_) {
    if (op.output == loss.impl()) found = true;
    op.output->ensure_grad();
    op.output->zero_grad();
  }
  if (!found) fail("backward: loss tensor is not recorded on this tape");
  loss.impl()->ensure_grad();
  loss.impl()->grad[0] = 1.0;
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) it->backward();
}

// ---- op helpers ----

namespace {

bool recording(const std::initializer_list<const Tensor*>& ins) {
  if (!g_active_tape) return false;
  for (const Tensor* t : ins)
    if (t->requires_grad()) return true;
  return false;
}

void mark_and_record(Tensor& out, TapeOp op) {
  out.set_requires_grad(true);
  g_active_tape->record(std::move(op));
}

void check_same_shape(const char* name, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    fail(std::string(name) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
         shape_str(b.shape()));
}

}  // namespace

// ---- elementwise ----

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape("add", a, b);
  const auto n = static_cast<std::size_t>(a.numel());
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = a.data()[i] + b.data()[i];
  Tensor out(a.shape(), std::move(y));
  if (recording({&a, &b})) {
    auto ai = a.impl(), bi = b.impl(), oi = out.impl();
    mark_and_record(out, {"add", oi, [ai, bi, oi] {
                            if (ai->requires_grad) {
                              ai->ensure_grad();
                              for (std::size_t i = 0; i < oi->grad.size(); ++i)
                                ai->grad[i] += oi->grad[i];
                            }
                            if (bi->requires_grad) {
                              bi->ensure_grad();
                              for (std::size_t i = 0; i < oi->grad.size(); ++i)
                                bi->grad[i] += oi->grad[i];
                            }
                          }});
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape("sub", a, b);
  const auto n = static_cast<std::size_t>(a.numel());
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = a.data()[i] - b.data()[i];
  Tensor out(a.shape(), std::move(y));
  if (recording({&a, &b})) {
    auto ai = a.impl(), bi = b.impl(), oi = out.impl();
    mark_and_record(out, {"sub", oi, [ai, bi, oi] {
                            if (ai->requires_grad) {
                              ai->ensure_grad();
                              for (std::size_t i = 0; i < oi->grad.size(); ++i)
                                ai->grad[i] += oi->grad[i];
                            }
                            if (bi->requires_grad) {
                              bi->ensure_grad();
                              for (std::size_t i = 0; i < oi->grad.size(); ++i)
                                bi->grad[i] -= oi->grad[i];
                            }
                          }});
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape("mul", a, b);
  const auto n = static_cast<std::size_t>(a.numel());
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = a.data()[i] * b.data()[i];
  Tensor out(a.shape(), std::move(y));
  if (recording({&a, &b})) {
    auto ai = a.impl(), bi = b.impl(), oi = out.impl();
    mark_and_record(out, {"mul", oi, [ai, bi, oi] {
                            if (ai->requires_grad) {
                              ai->ensure_grad();
                              for (std::size_t i = 0; i < oi->grad.size(); ++i)
                                ai->grad[i] += oi->grad[i] * bi->data[i];
                            }
                            if (bi->requires_grad) {
                              bi->ensure_grad();
                              for (std::size_t i = 0; i < oi->grad.size(); ++i)
                                bi->grad[i] += oi->grad[i] * ai->data[i];
                            }
                          }});
  }
  return out;
}

Tensor scale(const Tensor& x, double c) {
  const auto n = static_cast<std::size_t>(x.numel());
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = x.data()[i] * c;
  Tensor out(x.shape(), std::move(y));
  if (recording({&x})) {
    auto xi = x.impl(), oi = out.impl();
    mark_and_record(out, {"scale", oi, [xi, oi, c] {
                            xi->ensure_grad();
                            for (std::size_t i = 0; i < oi->grad.size(); ++i)
                              xi->grad[i] += oi->grad[i] * c;
                          }});
  }
  return out;
}

Tensor add_const(const Tensor& x, double c) {
  const auto n = static_cast<std::size_t>(x.numel());
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = x.data()[i] + c;
  Tensor out(x.shape(), std::move(y));
  if (recording({&x})) {
    auto xi = x.impl(), oi = out.impl();
    mark_and_record(out, {"add_const", oi, [xi, oi] {
                            xi->ensure_grad();
                            for (std::size_t i = 0; i < oi->grad.size(); ++i)
                              xi->grad[i] += oi->grad[i];
                          }});
  }
  return out;
}

Tensor add_const_vec(const Tensor& x, const std::vector<double>& c) {
  if (static_cast<std::size_t>(x.numel()) != c.size())
    fail("add_const_vec: size mismatch " + shape_str(x.shape()) + " vs " +
         std::to_string(c.size()));
  std::vector<double> y(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) y[i] = x.data()[i] + c[i];
  Tensor out(x.shape(), std::move(y));
  if (recording({&x})) {
    auto xi = x.impl(), oi = out.impl();
    mark_and_record(out, {"add_const_vec", oi, [xi, oi] {
                            xi->ensure_grad();
                            for (std::size_t i = 0; i < oi->grad.size(); ++i)
                              xi->grad[i] += oi->grad[i];
                          }});
  }
  return out;
}

Tensor relu(const Tensor& x) {
  const auto n = static_cast<std::size_t>(x.numel());
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = x.data()[i] > 0.0 ? x.data()[i] : 0.0;
  Tensor out(x.shape(), std::move(y));
  if (recording({&x})) {
    auto xi = x.impl(), oi = out.impl();
    // subgradient at 0 is 0
    mark_and_record(out, {"relu", oi, [xi, oi] {
                            xi->ensure_grad();
                            for (std::size_t i = 0; i < oi->grad.size(); ++i)
                              if (xi->data[i] > 0.0) xi->grad[i] += oi->grad[i];
                          }});
  }
  return out;
}

Tensor tanh_op(const Tensor& x) {
  const auto n = static_cast<std::size_t>(x.numel());
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = std::tanh(x.data()[i]);
  Tensor out(x.shape(), std::move(y));
  if (recording({&x})) {
    auto xi = x.impl(), oi = out.impl();
    mark_and_record(out, {"tanh", oi, [xi, oi] {
                            xi->ensure_grad();
                            for (std::size_t i = 0; i < oi->grad.size(); ++i)
                              xi->grad[i] += oi->grad[i] * (1.0 - oi->data[i] * oi->data[i]);
                          }});
  }
  return out;
}

Tensor log_op(const Tensor& x) {
  const auto n = static_cast<std::size_t>(x.numel());
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (x.data()[i] <= 0.0)
      fail("log: non-positive input " + std::to_string(x.data()[i]));
    y[i] = std::log(x.data()[i]);
  }
  Tensor out(x.shape(), std::move(y));
  if (recording({&x})) {
    auto xi = x.impl(), oi = out.impl();
    mark_and_record(out, {"log", oi, [xi, oi] {
                            xi->ensure_grad();
                            for (std::size_t i = 0; i < oi->grad.size(); ++i)
                              xi->grad[i] += oi->grad[i] / xi->data[i];
                          }});
  }
  return out;
}

Tensor pow_const(const Tensor& x, double p) {
  const auto n = static_cast<std::size_t>(x.numel());
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (x.data()[i] <= 0.0 && p != std::floor(p))
      fail("pow: non-positive base " + std::to_string(x.data()[i]) + " with fractional exponent");
    y[i] = std::pow(x.data()[i], p);
  }
  Tensor out(x.shape(), std::move(y));
  if (recording({&x})) {
    auto xi = x.impl(), oi = out.impl();
    mark_and_record(out, {"pow", oi, [xi, oi, p] {
                            xi->ensure_grad();
                            for (std::size_t i = 0; i < oi->grad.size(); ++i) {
                              double d = (p == 0.0) ? 0.0 : p * std::pow(xi->data[i], p - 1.0);
                              xi->grad[i] += oi->grad[i] * d;
                            }
                          }});
  }
  return out;
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  Tensor out = Tensor::scalar(s);
  if (recording({&x})) {
    auto xi = x.impl(), oi = out.impl();
    mark_and_record(out, {"sum", oi, [xi, oi] {
                            xi->ensure_grad();
                            for (auto& g : xi->grad) g += oi->grad[0];
                          }});
  }
  return out;
}

Tensor mean(const Tensor& x) {
  const double inv = 1.0 / static_cast<double>(x.numel());
  double s = 0.0;
  for (double v : x.data()) s += v;
  Tensor out = Tensor::scalar(s * inv);
  if (recording({&x})) {
    auto xi = x.impl(), oi = out.impl();
    mark_and_record(out, {"mean", oi, [xi, oi, inv] {
                            xi->ensure_grad();
                            for (auto& g : xi->grad) g += oi->grad[0] * inv;
                          }});
  }
  return out;
}

Tensor max_abs(const Tensor& x) {
  if (x.numel() == 0) fail("max_abs: empty tensor");
  std::size_t arg = 0;
  double best = std::abs(x.data()[0]);
  for (std::size_t i = 1; i < x.data().size(); ++i) {
    const double a = std::abs(x.data()[i]);
    if (a > best) {
      best = a;
      arg = i;
    }
  }
  Tensor out = Tensor::scalar(best);
  if (recording({&x})) {
    auto xi = x.impl(), oi = out.impl();
    mark_and_record(out, {"max_abs", oi, [xi, oi, arg] {
                            xi->ensure_grad();
                            const double sign = xi->data[arg] >= 0.0 ? 1.0 : -1.0;
                            xi->grad[arg] += oi->grad[0] * sign;
                          }});
  }
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
    fail("matmul: incompatible shapes " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> y(static_cast<std::size_t>(m) * n, 0.0);
  for (int i = 0; i < m; ++i)
    for (int p = 0; p < k; ++p) {
      const double av = a.data()[static_cast<std::size_t>(i) * k + p];
      for (int j = 0; j < n; ++j)
        y[static_cast<std::size_t>(i) * n + j] += av * b.data()[static_cast<std::size_t>(p) * n + j];
    }
  Tensor out(Shape{m, n}, std::move(y));
  if (recording({&a, &b})) {
    auto ai = a.impl(), bi = b.impl(), oi = out.impl();
    mark_and_record(out, {"matmul", oi, [ai, bi, oi, m, k, n] {
                            // dL/da = g b^T, dL/db = a^T g
                            if (ai->requires_grad) {
                              ai->ensure_grad();
                              for (int i = 0; i < m; ++i)
                                for (int p = 0; p < k; ++p) {
                                  double s = 0.0;
                                  for (int j = 0; j < n; ++j)
                                    s += oi->grad[static_cast<std::size_t>(i) * n + j] *
                                         bi->data[static_cast<std::size_t>(p) * n + j];
                                  ai->grad[static_cast<std::size_t>(i) * k + p] += s;
                                }
                            }
                            if (bi->requires_grad) {
                              bi->ensure_grad();
                              for (int p = 0; p < k; ++p)
                                for (int j = 0; j < n; ++j) {
                                  double s = 0.0;
                                  for (int i = 0; i < m; ++i)
                                    s += ai->data[static_cast<std::size_t>(i) * k + p] *
                                         oi->grad[static_cast<std::size_t>(i) * n + j];
                                  bi->grad[static_cast<std::size_t>(p) * n + j] += s;
                                }
                            }
                          }});
  }
  return out;
}

Tensor add_rowvec(const Tensor& x, const Tensor& b) {
  if (x.rank() != 2 || b.rank() != 1 || x.dim(1) != b.dim(0))
    fail("add_rowvec: incompatible shapes " + shape_str(x.shape()) + " + " + shape_str(b.shape()));
  const int m = x.dim(0), n = x.dim(1);
  std::vector<double> y(x.data());
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) y[static_cast<std::size_t>(i) * n + j] += b.data()[j];
  Tensor out(x.shape(), std::move(y));
  if (recording({&x, &b})) {
    auto xi = x.impl(), bi = b.impl(), oi = out.impl();
    mark_and_record(out, {"add_rowvec", oi, [xi, bi, oi, m, n] {
                            if (xi->requires_grad) {
                              xi->ensure_grad();
                              for (std::size_t i = 0; i < oi->grad.size(); ++i)
                                xi->grad[i] += oi->grad[i];
                            }
                            if (bi->requires_grad) {
                              bi->ensure_grad();
                              for (int i = 0; i < m; ++i)
                                for (int j = 0; j < n; ++j)
                                  bi->grad[j] += oi->grad[static_cast<std::size_t>(i) * n + j];
                            }
                          }});
  }
  return out;
}

Tensor softmax1d(const Tensor& x) {
  if (x.rank() != 1) fail("softmax1d: expected 1-D tensor, got " + shape_str(x.shape()));
  const auto n = static_cast<std::size_t>(x.numel());
  double mx = x.data()[0];
  for (double v : x.data()) mx = std::max(mx, v);
  std::vector<double> y(n);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = std::exp(x.data()[i] - mx);
    z += y[i];
  }
  for (auto& v : y) v /= z;
  Tensor out(x.shape(), std::move(y));
  if (recording({&x})) {
    auto xi = x.impl(), oi = out.impl();
    mark_and_record(out, {"softmax1d", oi, [xi, oi] {
                            xi->ensure_grad();
                            double dot = 0.0;
                            for (std::size_t i = 0; i < oi->data.size(); ++i)
                              dot += oi->grad[i] * oi->data[i];
                            for (std::size_t i = 0; i < oi->data.size(); ++i)
                              xi->grad[i] += oi->data[i] * (oi->grad[i] - dot);
                          }});
  }
  return out;
}

Tensor div_by_scalar(const Tensor& x, const Tensor& s) {
  if (s.numel() != 1) fail("div_by_scalar: divisor must be a single-element tensor");
  const double sv = s.value();
  if (sv == 0.0) fail("div_by_scalar: division by zero");
  const auto n = static_cast<std::size_t>(x.numel());
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = x.data()[i] / sv;
  Tensor out(x.shape(), std::move(y));
  if (recording({&x, &s})) {
    auto xi = x.impl(), si = s.impl(), oi = out.impl();
    mark_and_record(out, {"div_by_scalar", oi, [xi, si, oi, sv] {
                            if (xi->requires_grad) {
                              xi->ensure_grad();
                              for (std::size_t i = 0; i < oi->grad.size(); ++i)
                                xi->grad[i] += oi->grad[i] / sv;
                            }
                            if (si->requires_grad) {
                              si->ensure_grad();
                              double acc = 0.0;
                              for (std::size_t i = 0; i < oi->grad.size(); ++i)
                                acc += oi->grad[i] * xi->data[i];
                              si->grad[0] -= acc / (sv * sv);
                            }
                          }});
  }
  return out;
}

Tensor mul_by_scalar(const Tensor& x, const Tensor& s) {
  if (s.numel() != 1) fail("mul_by_scalar: multiplier must be a single-element tensor");
  const double sv = s.value();
  const auto n = static_cast<std::size_t>(x.numel());
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = x.data()[i] * sv;
  Tensor out(x.shape(), std::move(y));
  if (recording({&x, &s})) {
    auto xi = x.impl(), si = s.impl(), oi = out.impl();
    mark_and_record(out, {"mul_by_scalar", oi, [xi, si, oi, sv] {
                            if (xi->requires_grad) {
                              xi->ensure_grad();
                              for (std::size_t i = 0; i < oi->grad.size(); ++i)
                                xi->grad[i] += oi->grad[i] * sv;
                            }
                            if (si->requires_grad) {
                              si->ensure_grad();
                              double acc = 0.0;
                              for (std::size_t i = 0; i < oi->grad.size(); ++i)
                                acc += oi->grad[i] * xi->data[i];
                              si->grad[0] += acc;
                            }
                          }});
  }
  return out;
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel())
    fail("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
  Tensor out(std::move(shape), x.data());
  if (recording({&x})) {
    auto xi = x.impl(), oi = out.impl();
    mark_and_record(out, {"reshape", oi, [xi, oi] {
                            xi->ensure_grad();
                            for (std::size_t i = 0; i < oi->grad.size(); ++i)
                              xi->grad[i] += oi->grad[i];
                          }});
  }
  return out;
}

Tensor weighted_sum(const Tensor& mask, const std::vector<Tensor>& parts) {
  if (mask.rank() != 1 || static_cast<std::size_t>(mask.numel()) != parts.size())
    fail("weighted_sum: mask " + shape_str(mask.shape()) + " does not match " +
         std::to_string(parts.size()) + " parts");
  if (parts.empty()) fail("weighted_sum: no parts");
  for (const auto& p : parts) check_same_shape("weighted_sum", parts[0], p);
  const auto n = static_cast<std::size_t>(parts[0].numel());
  std::vector<double> y(n, 0.0);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const double w = mask.data()[k];
    for (std::size_t i = 0; i < n; ++i) y[i] += w * parts[k].data()[i];
  }
  Tensor out(parts[0].shape(), std::move(y));
  bool any = mask.requires_grad();
  for (const auto& p : parts) any = any || p.requires_grad();
  if (g_active_tape && any) {
    auto mi = mask.impl();
    auto oi = out.impl();
    std::vector<std::shared_ptr<TensorImpl>> pis;
    pis.reserve(parts.size());
    for (const auto& p : parts) pis.push_back(p.impl());
    mark_and_record(out, {"weighted_sum", oi, [mi, pis, oi] {
                            for (std::size_t k = 0; k < pis.size(); ++k) {
                              const double w = mi->data[k];
                              if (pis[k]->requires_grad) {
                                pis[k]->ensure_grad();
                                for (std::size_t i = 0; i < oi->grad.size(); ++i)
                                  pis[k]->grad[i] += w * oi->grad[i];
                              }
                            }
                            if (mi->requires_grad) {
                              mi->ensure_grad();
                              for (std::size_t k = 0; k < pis.size(); ++k) {
                                double dot = 0.0;
                                for (std::size_t i = 0; i < oi->grad.size(); ++i)
                                  dot += oi->grad[i] * pis[k]->data[i];
                                mi->grad[k] += dot;
                              }
                            }
                          }});
  }
  return out;
}

Tensor dot_const(const Tensor& mask, const std::vector<double>& coeffs, double constant) {
  if (mask.rank() != 1 || static_cast<std::size_t>(mask.numel()) != coeffs.size())
    fail("dot_const: mask " + shape_str(mask.shape()) + " does not match " +
         std::to_string(coeffs.size()) + " coefficients");
  double s = constant;
  for (std::size_t i = 0; i < coeffs.size(); ++i) s += mask.data()[i] * coeffs[i];
  Tensor out = Tensor::scalar(s);
  if (recording({&mask})) {
    auto mi = mask.impl(), oi = out.impl();
    mark_and_record(out, {"dot_const", oi, [mi, oi, coeffs] {
                            mi->ensure_grad();
                            for (std::size_t i = 0; i < coeffs.size(); ++i)
                              mi->grad[i] += oi->grad[0] * coeffs[i];
                          }});
  }
  return out;
}

}  // namespace dnas
