#pragma once

#include <vector>

#include "dnas/modules.hpp"
#include "dnas/tensor.hpp"

namespace dnas {

// v <- mu*v + g ; p <- p - lr*v
class SgdMomentum {
 public:
  SgdMomentum(std::vector<ParamRef> params, double lr, double momentum);
  void step();
  void zero_grad();

  std::vector<std::vector<double>>& velocity() { return v_; }
  const std::vector<ParamRef>& params() const { return params_; }

 private:
  std::vector<ParamRef> params_;
  double lr_, momentum_;
  std::vector<std::vector<double>> v_;
};

// Adam with bias correction.
class Adam {
 public:
  Adam(std::vector<Tensor> params, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);
  void step();
  void zero_grad();

  std::vector<std::vector<double>>& m() { return m_; }
  std::vector<std::vector<double>>& v() { return v_; }
  long& t() { return t_; }

 private:
  std::vector<Tensor> params_;
  double lr_, beta1_, beta2_, eps_;
  std::vector<std::vector<double>> m_, v_;
  long t_ = 0;
};

}  // namespace dnas
