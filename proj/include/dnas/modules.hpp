#pragma once

#include <memory>
#include <string>
#include <vector>

#include "dnas/nn_ops.hpp"
#include "dnas/quantizers.hpp"
#include "dnas/rng.hpp"
#include "dnas/tensor.hpp"

namespace dnas {

enum class Mode { kTrain, kEval };

struct ParamRef {
  std::string name;
  Tensor tensor;
  double clamp_min = 0.0;  // > 0: project data to >= clamp_min after optimizer steps
  bool has_clamp = false;
};

struct BufferRef {
  std::string name;
  std::vector<double>* data;
};

// Minimal layer abstraction for candidate blocks: owns parameters, supports
// deterministic init, deep cloning and symbolic shape propagation.
class Module {
 public:
  virtual ~Module() = default;
  virtual Tensor forward(const Tensor& x, Mode mode) = 0;
  virtual void collect_params(const std::string&, std::vector<ParamRef>&) {}
  virtual void collect_buffers(const std::string&, std::vector<BufferRef>&) {}
  virtual void init_weights(Rng&) {}
  virtual std::unique_ptr<Module> clone() const = 0;
  virtual Shape out_shape(const Shape& in) const = 0;
};

// Convolution without bias (normalization follows); weights optionally
// DoReFa-quantized each forward when weight_bits < 32.
class Conv2d final : public Module {
 public:
  Conv2d(int in_c, int out_c, int kernel, int stride, int pad, int groups,
         int weight_bits = quant::kFullPrecision);
  Tensor forward(const Tensor& x, Mode mode) override;
  void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override;
  void init_weights(Rng& rng) override;
  std::unique_ptr<Module> clone() const override;
  Shape out_shape(const Shape& in) const override;

  int in_c() const { return in_c_; }
  int out_c() const { return out_c_; }
  Tensor& weight() { return w_; }

 private:
  int in_c_, out_c_, kernel_, stride_, pad_, groups_, weight_bits_;
  Tensor w_;
};

class BatchNorm2d final : public Module {
 public:
  explicit BatchNorm2d(int channels, double momentum = 0.1, double eps = 1e-5);
  Tensor forward(const Tensor& x, Mode mode) override;
  void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override;
  void collect_buffers(const std::string& prefix, std::vector<BufferRef>& out) override;
  void init_weights(Rng& rng) override;
  std::unique_ptr<Module> clone() const override;
  Shape out_shape(const Shape& in) const override { return in; }

 private:
  int channels_;
  double momentum_, eps_;
  Tensor gamma_, beta_;
  std::vector<double> running_mean_, running_var_;
};

class ReLU final : public Module {
 public:
  Tensor forward(const Tensor& x, Mode) override { return relu(x); }
  std::unique_ptr<Module> clone() const override { return std::make_unique<ReLU>(); }
  Shape out_shape(const Shape& in) const override { return in; }
};

// PACT activation: clip to learnable [0, alpha], then k-bit quantization.
class PactActivation final : public Module {
 public:
  explicit PactActivation(int act_bits, double alpha_init = 10.0);
  Tensor forward(const Tensor& x, Mode mode) override;
  void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override;
  void init_weights(Rng& rng) override;
  std::unique_ptr<Module> clone() const override;
  Shape out_shape(const Shape& in) const override { return in; }

 private:
  int act_bits_;
  double alpha_init_;
  Tensor alpha_;
};

class Shift final : public Module {
 public:
  explicit Shift(int kernel) : kernel_(kernel) {}
  Tensor forward(const Tensor& x, Mode) override { return shift(x, kernel_); }
  std::unique_ptr<Module> clone() const override { return std::make_unique<Shift>(kernel_); }
  Shape out_shape(const Shape& in) const override { return in; }

 private:
  int kernel_;
};

class ChannelShuffle final : public Module {
 public:
  explicit ChannelShuffle(int groups) : groups_(groups) {}
  Tensor forward(const Tensor& x, Mode) override { return channel_shuffle(x, groups_); }
  std::unique_ptr<Module> clone() const override {
    return std::make_unique<ChannelShuffle>(groups_);
  }
  Shape out_shape(const Shape& in) const override { return in; }

 private:
  int groups_;
};

class GlobalAvgPool final : public Module {
 public:
  Tensor forward(const Tensor& x, Mode) override { return global_avgpool(x); }
  std::unique_ptr<Module> clone() const override { return std::make_unique<GlobalAvgPool>(); }
  Shape out_shape(const Shape& in) const override;
};

class MaxPool2 final : public Module {
 public:
  Tensor forward(const Tensor& x, Mode) override { return maxpool2(x); }
  std::unique_ptr<Module> clone() const override { return std::make_unique<MaxPool2>(); }
  Shape out_shape(const Shape& in) const override;
};

class Linear final : public Module {
 public:
  Linear(int in_f, int out_f);
  Tensor forward(const Tensor& x, Mode) override;
  void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override;
  void init_weights(Rng& rng) override;
  std::unique_ptr<Module> clone() const override;
  Shape out_shape(const Shape& in) const override;

 private:
  int in_f_, out_f_;
  Tensor w_, b_;
};

class Sequential final : public Module {
 public:
  Sequential() = default;
  void append(std::unique_ptr<Module> m) { items_.push_back(std::move(m)); }
  Tensor forward(const Tensor& x, Mode mode) override;
  void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override;
  void collect_buffers(const std::string& prefix, std::vector<BufferRef>& out) override;
  void init_weights(Rng& rng) override;
  std::unique_ptr<Module> clone() const override;
  Shape out_shape(const Shape& in) const override;
  std::size_t size() const { return items_.size(); }

 private:
  std::vector<std::unique_ptr<Module>> items_;
};

// Pre-activation-free residual block: y = act(main(x) + shortcut(x)).
// The shortcut is identity when shapes match, otherwise a strided projection.
class ResidualBlock final : public Module {
 public:
  ResidualBlock(std::unique_ptr<Module> main, std::unique_ptr<Module> shortcut,
                std::unique_ptr<Module> post_act);
  Tensor forward(const Tensor& x, Mode mode) override;
  void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override;
  void collect_buffers(const std::string& prefix, std::vector<BufferRef>& out) override;
  void init_weights(Rng& rng) override;
  std::unique_ptr<Module> clone() const override;
  Shape out_shape(const Shape& in) const override;

 private:
  std::unique_ptr<Module> main_, shortcut_, post_act_;  // shortcut_ may be null
};

}  // namespace dnas
