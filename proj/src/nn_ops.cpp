#include "dnas/nn_ops.hpp"

#include <algorithm>
#include <cmath>

namespace dnas {

namespace {

inline std::size_t idx4(int b, int c, int h, int w, int C, int H, int W) {
  return ((static_cast<std::size_t>(b) * C + c) * H + h) * W + w;
}

void check4d(const char* name, const Tensor& x) {
  if (x.rank() != 4) fail(std::string(name) + ": expected 4-D input, got " + shape_str(x.shape()));
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, int stride, int pad, int groups) {
  check4d("conv2d", x);
  if (w.rank() != 4) fail("conv2d: expected 4-D kernel, got " + shape_str(w.shape()));
  if (stride < 1) fail("conv2d: stride must be >= 1");
  if (pad < 0) fail("conv2d: pad must be >= 0");
  if (groups < 1) fail("conv2d: groups must be >= 1");
  const int B = x.dim(0), M = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int N = w.dim(0), Mg = w.dim(1), K = w.dim(2), Kw = w.dim(3);
  if (K != Kw) fail("conv2d: non-square kernel " + shape_str(w.shape()));
  if (M % groups != 0 || N % groups != 0)
    fail("conv2d: channels M=" + std::to_string(M) + " N=" + std::to_string(N) +
         " not divisible by groups=" + std::to_string(groups));
  if (Mg != M / groups)
    fail("conv2d: kernel expects " + std::to_string(Mg) + " input channels per group, input has " +
         std::to_string(M / groups));
  const int Ho = (H + 2 * pad - K) / stride + 1;
  const int Wo = (W + 2 * pad - K) / stride + 1;
  if (H + 2 * pad < K || W + 2 * pad < K || Ho <= 0 || Wo <= 0)
    fail("conv2d: negative output size for input " + shape_str(x.shape()) + " kernel " +
         shape_str(w.shape()) + " stride=" + std::to_string(stride) +
         " pad=" + std::to_string(pad));
  const int n_per_g = N / groups;
  const int m_per_g = M / groups;

  std::vector<double> y(static_cast<std::size_t>(B) * N * Ho * Wo, 0.0);
  // Loop nest fixed (b, i, j, n, m, p, q) for a reproducible summation order.
  for (int b = 0; b < B; ++b)
    for (int i = 0; i < Ho; ++i)
      for (int j = 0; j < Wo; ++j)
        for (int n = 0; n < N; ++n) {
          const int g = n / n_per_g;
          double acc = 0.0;
          for (int m = 0; m < m_per_g; ++m) {
            const int mi = g * m_per_g + m;
            for (int p = 0; p < K; ++p) {
              const int hi = i * stride + p - pad;
              if (hi < 0 || hi >= H) continue;
              for (int q = 0; q < K; ++q) {
                const int wi = j * stride + q - pad;
                if (wi < 0 || wi >= W) continue;
                acc += x.data()[idx4(b, mi, hi, wi, M, H, W)] *
                       w.data()[((static_cast<std::size_t>(n) * m_per_g + m) * K + p) * K + q];
              }
            }
          }
          y[idx4(b, n, i, j, N, Ho, Wo)] += acc;
        }

  Tensor out(Shape{B, N, Ho, Wo}, std::move(y));
  bool rec = active_tape() && (x.requires_grad() || w.requires_grad());
  if (rec) {
    auto xi = x.impl(), wi = w.impl(), oi = out.impl();
    auto bw = [xi, wi, oi, B, M, H, W, N, K, Ho, Wo, stride, pad, n_per_g, m_per_g] {
      const bool gx = xi->requires_grad, gw = wi->requires_grad;
      if (gx) xi->ensure_grad();
      if (gw) wi->ensure_grad();
      for (int b = 0; b < B; ++b)
        for (int i = 0; i < Ho; ++i)
          for (int j = 0; j < Wo; ++j)
            for (int n = 0; n < N; ++n) {
              const double go = oi->grad[idx4(b, n, i, j, N, Ho, Wo)];
              if (go == 0.0) continue;
              const int g = n / n_per_g;
              for (int m = 0; m < m_per_g; ++m) {
                const int mi = g * m_per_g + m;
                for (int p = 0; p < K; ++p) {
                  const int hi = i * stride + p - pad;
                  if (hi < 0 || hi >= H) continue;
                  for (int q = 0; q < K; ++q) {
                    const int wcol = j * stride + q - pad;
                    if (wcol < 0 || wcol >= W) continue;
                    const std::size_t xoff = idx4(b, mi, hi, wcol, M, H, W);
                    const std::size_t woff =
                        ((static_cast<std::size_t>(n) * m_per_g + m) * K + p) * K + q;
                    if (gx) xi->grad[xoff] += go * wi->data[woff];
                    if (gw) wi->grad[woff] += go * xi->data[xoff];
                  }
                }
              }
            }
    };
    out.set_requires_grad(true);
    active_tape()->record({"conv2d", out.impl(), std::move(bw)});
  }
  return out;
}

Tensor shift(const Tensor& x, int kernel_size) {
  check4d("shift", x);
  if (kernel_size < 1 || kernel_size % 2 == 0)
    fail("shift: kernel size must be odd, got " + std::to_string(kernel_size));
  const int B = x.dim(0), M = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int K = kernel_size;
  const int ngroups = K * K;
  const int per_group = M / ngroups;
  const int half = K / 2;
  const int center = (K * K) / 2;

  // Channel c belongs to offset group c / per_group (row-major over the K x K
  // grid); leftover channels use the centre group.
  auto group_of = [per_group, ngroups, center](int c) {
    if (per_group == 0) return center;
    const int g = c / per_group;
    return g < ngroups ? g : center;
  };

  std::vector<double> y(x.data().size(), 0.0);
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < M; ++c) {
      const int g = group_of(c);
      const int dy = g / K - half;
      const int dx = g % K - half;
      for (int i = 0; i < H; ++i) {
        const int si = i + dy;
        if (si < 0 || si >= H) continue;
        for (int j = 0; j < W; ++j) {
          const int sj = j + dx;
          if (sj < 0 || sj >= W) continue;
          y[idx4(b, c, i, j, M, H, W)] = x.data()[idx4(b, c, si, sj, M, H, W)];
        }
      }
    }
  Tensor out(x.shape(), std::move(y));
  if (active_tape() && x.requires_grad()) {
    auto xi = x.impl(), oi = out.impl();
    auto bw = [xi, oi, B, M, H, W, K, half, group_of] {
      xi->ensure_grad();
      for (int b = 0; b < B; ++b)
        for (int c = 0; c < M; ++c) {
          const int g = group_of(c);
          const int dy = g / K - half;
          const int dx = g % K - half;
          for (int i = 0; i < H; ++i) {
            const int si = i + dy;
            if (si < 0 || si >= H) continue;
            for (int j = 0; j < W; ++j) {
              const int sj = j + dx;
              if (sj < 0 || sj >= W) continue;
              xi->grad[idx4(b, c, si, sj, M, H, W)] += oi->grad[idx4(b, c, i, j, M, H, W)];
            }
          }
        }
    };
    out.set_requires_grad(true);
    active_tape()->record({"shift", out.impl(), std::move(bw)});
  }
  return out;
}

Tensor channel_shuffle(const Tensor& x, int groups) {
  check4d("channel_shuffle", x);
  const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (groups < 1 || C % groups != 0)
    fail("channel_shuffle: C=" + std::to_string(C) + " not divisible by groups=" +
         std::to_string(groups));
  const int per = C / groups;
  // out channel (j*groups + g) <- in channel (g*per + j)
  std::vector<int> src(static_cast<std::size_t>(C));
  for (int g = 0; g < groups; ++g)
    for (int j = 0; j < per; ++j) src[static_cast<std::size_t>(j) * groups + g] = g * per + j;

  std::vector<double> y(x.data().size());
  const std::size_t plane = static_cast<std::size_t>(H) * W;
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      const std::size_t dst_off = (static_cast<std::size_t>(b) * C + c) * plane;
      const std::size_t src_off = (static_cast<std::size_t>(b) * C + src[c]) * plane;
      std::copy_n(x.data().begin() + src_off, plane, y.begin() + dst_off);
    }
  Tensor out(x.shape(), std::move(y));
  if (active_tape() && x.requires_grad()) {
    auto xi = x.impl(), oi = out.impl();
    auto bw = [xi, oi, B, C, plane, src] {
      xi->ensure_grad();
      for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c) {
          const std::size_t dst_off = (static_cast<std::size_t>(b) * C + c) * plane;
          const std::size_t src_off = (static_cast<std::size_t>(b) * C + src[c]) * plane;
          for (std::size_t i = 0; i < plane; ++i) xi->grad[src_off + i] += oi->grad[dst_off + i];
        }
    };
    out.set_requires_grad(true);
    active_tape()->record({"channel_shuffle", out.impl(), std::move(bw)});
  }
  return out;
}

Tensor global_avgpool(const Tensor& x) {
  check4d("global_avgpool", x);
  const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const double inv = 1.0 / (static_cast<double>(H) * W);
  std::vector<double> y(static_cast<std::size_t>(B) * C, 0.0);
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      double s = 0.0;
      for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j) s += x.data()[idx4(b, c, i, j, C, H, W)];
      y[static_cast<std::size_t>(b) * C + c] = s * inv;
    }
  Tensor out(Shape{B, C}, std::move(y));
  if (active_tape() && x.requires_grad()) {
    auto xi = x.impl(), oi = out.impl();
    auto bw = [xi, oi, B, C, H, W, inv] {
      xi->ensure_grad();
      for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c) {
          const double g = oi->grad[static_cast<std::size_t>(b) * C + c] * inv;
          for (int i = 0; i < H; ++i)
            for (int j = 0; j < W; ++j) xi->grad[idx4(b, c, i, j, C, H, W)] += g;
        }
    };
    out.set_requires_grad(true);
    active_tape()->record({"global_avgpool", out.impl(), std::move(bw)});
  }
  return out;
}

Tensor maxpool2(const Tensor& x) {
  check4d("maxpool2", x);
  const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (H % 2 != 0 || W % 2 != 0)
    fail("maxpool2: spatial dims must be even, got " + shape_str(x.shape()));
  const int Ho = H / 2, Wo = W / 2;
  std::vector<double> y(static_cast<std::size_t>(B) * C * Ho * Wo);
  std::vector<std::size_t> argmax(y.size());
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c)
      for (int i = 0; i < Ho; ++i)
        for (int j = 0; j < Wo; ++j) {
          std::size_t best_off = idx4(b, c, 2 * i, 2 * j, C, H, W);
          double best = x.data()[best_off];
          for (int p = 0; p < 2; ++p)
            for (int q = 0; q < 2; ++q) {
              const std::size_t off = idx4(b, c, 2 * i + p, 2 * j + q, C, H, W);
              if (x.data()[off] > best) {  // first max wins ties
                best = x.data()[off];
                best_off = off;
              }
            }
          const std::size_t oidx = idx4(b, c, i, j, C, Ho, Wo);
          y[oidx] = best;
          argmax[oidx] = best_off;
        }
  Tensor out(Shape{B, C, Ho, Wo}, std::move(y));
  if (active_tape() && x.requires_grad()) {
    auto xi = x.impl(), oi = out.impl();
    auto bw = [xi, oi, argmax] {
      xi->ensure_grad();
      for (std::size_t i = 0; i < oi->grad.size(); ++i) xi->grad[argmax[i]] += oi->grad[i];
    };
    out.set_requires_grad(true);
    active_tape()->record({"maxpool2", out.impl(), std::move(bw)});
  }
  return out;
}

BatchNormResult batchnorm2d_train(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                                  double eps) {
  check4d("batchnorm2d", x);
  if (eps <= 0.0) fail("batchnorm2d: eps must be > 0");
  const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (B * H * W == 0) fail("batchnorm2d: zero-size batch");
  if (gamma.numel() != C || beta.numel() != C)
    fail("batchnorm2d: gamma/beta must have " + std::to_string(C) + " entries");
  const double n = static_cast<double>(B) * H * W;

  std::vector<double> mu(static_cast<std::size_t>(C), 0.0), var(static_cast<std::size_t>(C), 0.0);
  for (int c = 0; c < C; ++c) {
    double s = 0.0;
    for (int b = 0; b < B; ++b)
      for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j) s += x.data()[idx4(b, c, i, j, C, H, W)];
    mu[c] = s / n;
    double v = 0.0;
    for (int b = 0; b < B; ++b)
      for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j) {
          const double d = x.data()[idx4(b, c, i, j, C, H, W)] - mu[c];
          v += d * d;
        }
    var[c] = v / n;
  }

  std::vector<double> y(x.data().size());
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      const double inv_std = 1.0 / std::sqrt(var[c] + eps);
      for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j) {
          const std::size_t off = idx4(b, c, i, j, C, H, W);
          y[off] = gamma.data()[c] * (x.data()[off] - mu[c]) * inv_std + beta.data()[c];
        }
    }
  Tensor out(x.shape(), std::move(y));
  bool rec = active_tape() &&
             (x.requires_grad() || gamma.requires_grad() || beta.requires_grad());
  if (rec) {
    auto xi = x.impl(), gi = gamma.impl(), bi = beta.impl(), oi = out.impl();
    auto bw = [xi, gi, bi, oi, B, C, H, W, n, eps, mu, var] {
      for (int c = 0; c < C; ++c) {
        const double inv_std = 1.0 / std::sqrt(var[c] + eps);
        double sum_g = 0.0, sum_gx = 0.0;
        for (int b = 0; b < B; ++b)
          for (int i = 0; i < H; ++i)
            for (int j = 0; j < W; ++j) {
              const std::size_t off = idx4(b, c, i, j, C, H, W);
              const double xhat = (xi->data[off] - mu[c]) * inv_std;
              sum_g += oi->grad[off];
              sum_gx += oi->grad[off] * xhat;
            }
        if (gi->requires_grad) {
          gi->ensure_grad();
          gi->grad[c] += sum_gx;
        }
        if (bi->requires_grad) {
          bi->ensure_grad();
          bi->grad[c] += sum_g;
        }
        if (xi->requires_grad) {
          xi->ensure_grad();
          const double gam = gi->data[c];
          for (int b = 0; b < B; ++b)
            for (int i = 0; i < H; ++i)
              for (int j = 0; j < W; ++j) {
                const std::size_t off = idx4(b, c, i, j, C, H, W);
                const double xhat = (xi->data[off] - mu[c]) * inv_std;
                xi->grad[off] +=
                    gam * inv_std * (oi->grad[off] - sum_g / n - xhat * sum_gx / n);
              }
        }
      }
    };
    out.set_requires_grad(true);
    active_tape()->record({"batchnorm2d_train", out.impl(), std::move(bw)});
  }
  return {out, std::move(mu), std::move(var)};
}

Tensor batchnorm2d_eval(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                        const std::vector<double>& mean, const std::vector<double>& var,
                        double eps) {
  check4d("batchnorm2d", x);
  if (eps <= 0.0) fail("batchnorm2d: eps must be > 0");
  const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (gamma.numel() != C || beta.numel() != C || static_cast<int>(mean.size()) != C ||
      static_cast<int>(var.size()) != C)
    fail("batchnorm2d: per-channel parameter size mismatch");
  std::vector<double> y(x.data().size());
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      const double inv_std = 1.0 / std::sqrt(var[c] + eps);
      for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j) {
          const std::size_t off = idx4(b, c, i, j, C, H, W);
          y[off] = gamma.data()[c] * (x.data()[off] - mean[c]) * inv_std + beta.data()[c];
        }
    }
  Tensor out(x.shape(), std::move(y));
  bool rec = active_tape() &&
             (x.requires_grad() || gamma.requires_grad() || beta.requires_grad());
  if (rec) {
    auto xi = x.impl(), gi = gamma.impl(), bi = beta.impl(), oi = out.impl();
    auto bw = [xi, gi, bi, oi, B, C, H, W, mean, var, eps] {
      for (int c = 0; c < C; ++c) {
        const double inv_std = 1.0 / std::sqrt(var[c] + eps);
        for (int b = 0; b < B; ++b)
          for (int i = 0; i < H; ++i)
            for (int j = 0; j < W; ++j) {
              const std::size_t off = idx4(b, c, i, j, C, H, W);
              if (xi->requires_grad) {
                xi->ensure_grad();
                xi->grad[off] += oi->grad[off] * gi->data[c] * inv_std;
              }
              if (gi->requires_grad) {
                gi->ensure_grad();
                gi->grad[c] += oi->grad[off] * (xi->data[off] - mean[c]) * inv_std;
              }
              if (bi->requires_grad) {
                bi->ensure_grad();
                bi->grad[c] += oi->grad[off];
              }
            }
      }
    };
    out.set_requires_grad(true);
    active_tape()->record({"batchnorm2d_eval", out.impl(), std::move(bw)});
  }
  return out;
}

Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
  if (logits.rank() != 2)
    fail("softmax_cross_entropy: expected [B,C] logits, got " + shape_str(logits.shape()));
  const int B = logits.dim(0), C = logits.dim(1);
  if (static_cast<int>(labels.size()) != B)
    fail("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for batch of " +
         std::to_string(B));
  for (int b = 0; b < B; ++b)
    if (labels[b] < 0 || labels[b] >= C)
      fail("softmax_cross_entropy: label " + std::to_string(labels[b]) + " out of range [0," +
           std::to_string(C) + ")");

  std::vector<double> probs(logits.data().size());
  double loss = 0.0;
  for (int b = 0; b < B; ++b) {
    const std::size_t row = static_cast<std::size_t>(b) * C;
    double mx = logits.data()[row];
    for (int c = 1; c < C; ++c) mx = std::max(mx, logits.data()[row + c]);
    double z = 0.0;
    for (int c = 0; c < C; ++c) {
      probs[row + c] = std::exp(logits.data()[row + c] - mx);
      z += probs[row + c];
    }
    for (int c = 0; c < C; ++c) probs[row + c] /= z;
    loss -= std::log(std::max(probs[row + labels[b]], 1e-300));
  }
  loss /= static_cast<double>(B);
  Tensor out = Tensor::scalar(loss);
  if (active_tape() && logits.requires_grad()) {
    auto li = logits.impl(), oi = out.impl();
    auto bw = [li, oi, probs, labels, B, C] {
      li->ensure_grad();
      const double inv_b = 1.0 / static_cast<double>(B);
      for (int b = 0; b < B; ++b) {
        const std::size_t row = static_cast<std::size_t>(b) * C;
        for (int c = 0; c < C; ++c) {
          const double onehot = (c == labels[b]) ? 1.0 : 0.0;
          li->grad[row + c] += oi->grad[0] * (probs[row + c] - onehot) * inv_b;
        }
      }
    };
    out.set_requires_grad(true);
    active_tape()->record({"softmax_cross_entropy", out.impl(), std::move(bw)});
  }
  return out;
}

}  // namespace dnas
