#pragma once

#include "dnas/tensor.hpp"

namespace dnas {

// Grouped 2-D cross-correlation (no kernel flip).
// x: [B, M, F, F], w: [N, M/G, K, K] -> [B, N, F', F'] with
// F' = (F + 2*pad - K)/stride + 1. M and N must be divisible by groups.
Tensor conv2d(const Tensor& x, const Tensor& w, int stride, int pad, int groups);

// Zero-parameter spatial shift. Channels are split into K*K contiguous groups
// of floor(M/K^2) channels; group g translates by the g-th offset of the K x K
// displacement grid in row-major order, vacated positions are zero. The
// M mod K^2 leftover channels join the centre (no-shift) group. K must be odd.
Tensor shift(const Tensor& x, int kernel_size);

// Channel permutation equal to reshape (g, C/g) -> transpose -> flatten.
Tensor channel_shuffle(const Tensor& x, int groups);

// [B, C, F, F] -> [B, C]
Tensor global_avgpool(const Tensor& x);

// 2x2 stride-2 max pooling; requires even spatial dims.
Tensor maxpool2(const Tensor& x);

struct BatchNormResult {
  Tensor y;
  std::vector<double> batch_mean;  // per channel (biased variance)
  std::vector<double> batch_var;
};

// Training-mode batch normalization over (B, H, W) per channel; differentiable
// in x, gamma and beta. Running-stat bookkeeping is the caller's (module's)
// job, using the returned batch statistics.
BatchNormResult batchnorm2d_train(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                                  double eps);

// Eval-mode normalization with fixed statistics.
Tensor batchnorm2d_eval(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                        const std::vector<double>& mean, const std::vector<double>& var,
                        double eps);

// Mean over the batch of -log softmax(logits)[label]; max-subtracted.
Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels);

}  // namespace dnas
