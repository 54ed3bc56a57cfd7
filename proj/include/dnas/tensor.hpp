#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace dnas {

[[noreturn]] void fail(const std::string& msg);

using Shape = std::vector<int>;

std::string shape_str(const Shape& s);
std::int64_t shape_numel(const Shape& s);

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  bool requires_grad = false;
  std::vector<double> grad;  // empty until first accumulation

  std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  }
  void zero_grad() {
    if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
  }
};

// Value-semantics handle to a shared dense buffer. Ops produce fresh tensors;
// buffers are treated as immutable once an op has consumed them, except for
// parameter updates applied between forward passes.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor from_vector(const std::vector<double>& v, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::int64_t numel() const { return impl_->numel(); }
  int dim(int i) const { return impl_->shape[static_cast<std::size_t>(i)]; }
  int rank() const { return static_cast<int>(impl_->shape.size()); }

  const std::vector<double>& data() const { return impl_->data; }
  std::vector<double>& mutable_data() { return impl_->data; }

  bool requires_grad() const { return impl_ && impl_->requires_grad; }
  Tensor& set_requires_grad(bool v) {
    impl_->requires_grad = v;
    return *this;
  }

  // Gradient accumulated by the most recent backward passes; empty vector if
  // none has been accumulated yet.
  const std::vector<double>& grad() const;
  void zero_grad() { impl_->zero_grad(); }

  double value() const;  // single-element tensors only

  bool all_finite() const;
  void check_finite(const std::string& context) const;

  std::shared_ptr<TensorImpl> impl() const { return impl_; }

  // Deep copy of values (fresh buffer, no grad, same requires_grad flag).
  Tensor clone_detached() const;

 private:
  std::shared_ptr<TensorImpl> impl_;
};

// Recorded reverse rule. `backward` reads output->grad and accumulates into
// input grads; inputs are owned by the closure via shared_ptr captures.
struct TapeOp {
  const char* name;
  std::shared_ptr<TensorImpl> output;
  std::function<void()> backward;
};

// Reverse-mode tape. Invariants: records are appended in execution order, so
// every op's inputs precede it; backward() walks the list exactly once in
// reverse. Reset contract: one backward() per recording; clear() (or the end
// of a TapeScope) discards the recording. Leaf gradients accumulate across
// backward calls and are cleared by the caller (optimizer zero_grad).
class Tape {
 public:
  void record(TapeOp op) { ops_.push_back(std::move(op)); }

  // Requires a single-element loss recorded on this tape. Zeroes every
  // intermediate (op output) gradient, seeds d(loss)/d(loss)=1 and runs all
  // reverse rules once, newest first.
  void backward(const Tensor& loss);

  void clear() { ops_.clear(); }
  std::size_t size() const { return ops_.size(); }

 private:
  std::vector<TapeOp> ops_;
};

// Thread-local recording context. Ops record onto the innermost active tape;
// with no active tape (or inside NoGradScope) they run forward-only.
Tape* active_tape();

class TapeScope {
 public:
  TapeScope();
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

  Tape& tape() { return tape_; }
  void backward(const Tensor& loss) { tape_.backward(loss); }

 private:
  Tape tape_;
  Tape* prev_;
};

class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Tape* prev_;
};

// ---- elementwise / linear-algebra ops (all differentiable) ----

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);           // hadamard
Tensor scale(const Tensor& x, double c);
Tensor add_const(const Tensor& x, double c);
Tensor add_const_vec(const Tensor& x, const std::vector<double>& c);
Tensor relu(const Tensor& x);
Tensor tanh_op(const Tensor& x);
Tensor log_op(const Tensor& x);                          // requires x > 0
Tensor pow_const(const Tensor& x, double p);             // requires x > 0 unless p integer>=0
Tensor sum(const Tensor& x);                             // -> scalar
Tensor mean(const Tensor& x);                            // -> scalar
Tensor max_abs(const Tensor& x);                         // -> scalar; subgradient to first argmax
Tensor matmul(const Tensor& a, const Tensor& b);         // [m,k]x[k,n]
Tensor add_rowvec(const Tensor& x, const Tensor& b);     // [m,n] + [n]
Tensor softmax1d(const Tensor& x);                       // 1-D, max-subtracted
Tensor div_by_scalar(const Tensor& x, const Tensor& s);  // s: single element
Tensor mul_by_scalar(const Tensor& x, const Tensor& s);  // s: single element
Tensor reshape(const Tensor& x, Shape shape);

// out = sum_i mask[i] * parts[i]; mask is 1-D with mask.numel()==parts.size().
Tensor weighted_sum(const Tensor& mask, const std::vector<Tensor>& parts);

// out = sum_i mask[i] * coeffs[i] (+ constant); coeffs are non-differentiable.
Tensor dot_const(const Tensor& mask, const std::vector<double>& coeffs, double constant = 0.0);

}  // namespace dnas
