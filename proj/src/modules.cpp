#include "dnas/modules.hpp"

#include <cmath>

namespace dnas {

// ---- Conv2d ----

Conv2d::Conv2d(int in_c, int out_c, int kernel, int stride, int pad, int groups, int weight_bits)
    : in_c_(in_c),
      out_c_(out_c),
      kernel_(kernel),
      stride_(stride),
      pad_(pad),
      groups_(groups),
      weight_bits_(weight_bits) {
  if (in_c < 1 || out_c < 1 || kernel < 1) fail("Conv2d: bad dimensions");
  if (in_c % groups != 0 || out_c % groups != 0)
    fail("Conv2d: channels (" + std::to_string(in_c) + "," + std::to_string(out_c) +
         ") not divisible by groups=" + std::to_string(groups));
  if (!quant::valid_bits(weight_bits)) fail("Conv2d: invalid weight bit-width");
  w_ = Tensor::zeros({out_c, in_c / groups, kernel, kernel}, true);
}

Tensor Conv2d::forward(const Tensor& x, Mode) {
  Tensor w_eff = weight_bits_ == quant::kFullPrecision ? w_ : quant::dorefa_weights(w_, weight_bits_);
  return conv2d(x, w_eff, stride_, pad_, groups_);
}

void Conv2d::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
  out.push_back({prefix + "w", w_});
}

void Conv2d::init_weights(Rng& rng) {
  const double fan_in = static_cast<double>(in_c_ / groups_) * kernel_ * kernel_;
  const double std = std::sqrt(2.0 / fan_in);
  for (auto& v : w_.mutable_data()) v = std * rng.normal();
}

std::unique_ptr<Module> Conv2d::clone() const {
  auto m = std::make_unique<Conv2d>(in_c_, out_c_, kernel_, stride_, pad_, groups_, weight_bits_);
  m->w_.mutable_data() = w_.data();
  return m;
}

Shape Conv2d::out_shape(const Shape& in) const {
  if (in.size() != 4 || in[1] != in_c_)
    fail("Conv2d: expected input [B," + std::to_string(in_c_) + ",H,W], got " + shape_str(in));
  const int ho = (in[2] + 2 * pad_ - kernel_) / stride_ + 1;
  const int wo = (in[3] + 2 * pad_ - kernel_) / stride_ + 1;
  if (ho <= 0 || wo <= 0) fail("Conv2d: non-positive output size from input " + shape_str(in));
  return {in[0], out_c_, ho, wo};
}

// ---- BatchNorm2d ----

BatchNorm2d::BatchNorm2d(int channels, double momentum, double eps)
    : channels_(channels), momentum_(momentum), eps_(eps) {
  gamma_ = Tensor::full({channels}, 1.0, true);
  beta_ = Tensor::zeros({channels}, true);
  running_mean_.assign(static_cast<std::size_t>(channels), 0.0);
  running_var_.assign(static_cast<std::size_t>(channels), 1.0);
}

Tensor BatchNorm2d::forward(const Tensor& x, Mode mode) {
  if (mode == Mode::kTrain) {
    auto r = batchnorm2d_train(x, gamma_, beta_, eps_);
    for (int c = 0; c < channels_; ++c) {
      running_mean_[c] = (1.0 - momentum_) * running_mean_[c] + momentum_ * r.batch_mean[c];
      running_var_[c] = (1.0 - momentum_) * running_var_[c] + momentum_ * r.batch_var[c];
    }
    return r.y;
  }
  return batchnorm2d_eval(x, gamma_, beta_, running_mean_, running_var_, eps_);
}

void BatchNorm2d::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
  out.push_back({prefix + "gamma", gamma_});
  out.push_back({prefix + "beta", beta_});
}

void BatchNorm2d::collect_buffers(const std::string& prefix, std::vector<BufferRef>& out) {
  out.push_back({prefix + "running_mean", &running_mean_});
  out.push_back({prefix + "running_var", &running_var_});
}

void BatchNorm2d::init_weights(Rng&) {
  std::fill(gamma_.mutable_data().begin(), gamma_.mutable_data().end(), 1.0);
  std::fill(beta_.mutable_data().begin(), beta_.mutable_data().end(), 0.0);
  running_mean_.assign(static_cast<std::size_t>(channels_), 0.0);
  running_var_.assign(static_cast<std::size_t>(channels_), 1.0);
}

std::unique_ptr<Module> BatchNorm2d::clone() const {
  auto m = std::make_unique<BatchNorm2d>(channels_, momentum_, eps_);
  m->gamma_.mutable_data() = gamma_.data();
  m->beta_.mutable_data() = beta_.data();
  m->running_mean_ = running_mean_;
  m->running_var_ = running_var_;
  return m;
}

// ---- PactActivation ----

PactActivation::PactActivation(int act_bits, double alpha_init)
    : act_bits_(act_bits), alpha_init_(alpha_init) {
  if (!quant::valid_bits(act_bits)) fail("PactActivation: invalid act bit-width");
  alpha_ = Tensor::scalar(alpha_init, true);
}

Tensor PactActivation::forward(const Tensor& x, Mode) {
  Tensor y = quant::pact_clip(x, alpha_);
  return quant::pact_quantize(y, alpha_, act_bits_);
}

void PactActivation::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
  ParamRef r{prefix + "alpha", alpha_};
  r.clamp_min = 1e-3;
  r.has_clamp = true;
  out.push_back(std::move(r));
}

void PactActivation::init_weights(Rng&) { alpha_.mutable_data()[0] = alpha_init_; }

std::unique_ptr<Module> PactActivation::clone() const {
  auto m = std::make_unique<PactActivation>(act_bits_, alpha_init_);
  m->alpha_.mutable_data() = alpha_.data();
  return m;
}

// ---- pools ----

Shape GlobalAvgPool::out_shape(const Shape& in) const {
  if (in.size() != 4) fail("GlobalAvgPool: expected 4-D input, got " + shape_str(in));
  return {in[0], in[1]};
}

Shape MaxPool2::out_shape(const Shape& in) const {
  if (in.size() != 4 || in[2] % 2 != 0 || in[3] % 2 != 0)
    fail("MaxPool2: expected 4-D input with even spatial dims, got " + shape_str(in));
  return {in[0], in[1], in[2] / 2, in[3] / 2};
}

// ---- Linear ----

Linear::Linear(int in_f, int out_f) : in_f_(in_f), out_f_(out_f) {
  w_ = Tensor::zeros({in_f, out_f}, true);
  b_ = Tensor::zeros({out_f}, true);
}

Tensor Linear::forward(const Tensor& x, Mode) { return add_rowvec(matmul(x, w_), b_); }

void Linear::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
  out.push_back({prefix + "w", w_});
  out.push_back({prefix + "b", b_});
}

void Linear::init_weights(Rng& rng) {
  const double std = std::sqrt(2.0 / static_cast<double>(in_f_));
  for (auto& v : w_.mutable_data()) v = std * rng.normal();
  std::fill(b_.mutable_data().begin(), b_.mutable_data().end(), 0.0);
}

std::unique_ptr<Module> Linear::clone() const {
  auto m = std::make_unique<Linear>(in_f_, out_f_);
  m->w_.mutable_data() = w_.data();
  m->b_.mutable_data() = b_.data();
  return m;
}

Shape Linear::out_shape(const Shape& in) const {
  if (in.size() != 2 || in[1] != in_f_)
    fail("Linear: expected input [B," + std::to_string(in_f_) + "], got " + shape_str(in));
  return {in[0], out_f_};
}

// ---- Sequential ----

Tensor Sequential::forward(const Tensor& x, Mode mode) {
  Tensor h = x;
  for (auto& m : items_) h = m->forward(h, mode);
  return h;
}

void Sequential::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
  for (std::size_t i = 0; i < items_.size(); ++i)
    items_[i]->collect_params(prefix + std::to_string(i) + ".", out);
}

void Sequential::collect_buffers(const std::string& prefix, std::vector<BufferRef>& out) {
  for (std::size_t i = 0; i < items_.size(); ++i)
    items_[i]->collect_buffers(prefix + std::to_string(i) + ".", out);
}

void Sequential::init_weights(Rng& rng) {
  for (auto& m : items_) m->init_weights(rng);
}

std::unique_ptr<Module> Sequential::clone() const {
  auto s = std::make_unique<Sequential>();
  for (const auto& m : items_) s->append(m->clone());
  return s;
}

Shape Sequential::out_shape(const Shape& in) const {
  Shape s = in;
  for (const auto& m : items_) s = m->out_shape(s);
  return s;
}

// ---- ResidualBlock ----

ResidualBlock::ResidualBlock(std::unique_ptr<Module> main, std::unique_ptr<Module> shortcut,
                             std::unique_ptr<Module> post_act)
    : main_(std::move(main)), shortcut_(std::move(shortcut)), post_act_(std::move(post_act)) {}

Tensor ResidualBlock::forward(const Tensor& x, Mode mode) {
  Tensor m = main_->forward(x, mode);
  Tensor s = shortcut_ ? shortcut_->forward(x, mode) : x;
  Tensor y = add(m, s);
  return post_act_ ? post_act_->forward(y, mode) : y;
}

void ResidualBlock::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
  main_->collect_params(prefix + "main.", out);
  if (shortcut_) shortcut_->collect_params(prefix + "shortcut.", out);
  if (post_act_) post_act_->collect_params(prefix + "act.", out);
}

void ResidualBlock::collect_buffers(const std::string& prefix, std::vector<BufferRef>& out) {
  main_->collect_buffers(prefix + "main.", out);
  if (shortcut_) shortcut_->collect_buffers(prefix + "shortcut.", out);
  if (post_act_) post_act_->collect_buffers(prefix + "act.", out);
}

void ResidualBlock::init_weights(Rng& rng) {
  main_->init_weights(rng);
  if (shortcut_) shortcut_->init_weights(rng);
  if (post_act_) post_act_->init_weights(rng);
}

std::unique_ptr<Module> ResidualBlock::clone() const {
  return std::make_unique<ResidualBlock>(main_->clone(),
                                         shortcut_ ? shortcut_->clone() : nullptr,
                                         post_act_ ? post_act_->clone() : nullptr);
}

Shape ResidualBlock::out_shape(const Shape& in) const {
  Shape m = main_->out_shape(in);
  Shape s = shortcut_ ? shortcut_->out_shape(in) : in;
  if (m != s)
    fail("ResidualBlock: main path " + shape_str(m) + " does not match shortcut " + shape_str(s));
  return post_act_ ? post_act_->out_shape(m) : m;
}

}  // namespace dnas
