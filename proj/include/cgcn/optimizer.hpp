#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "cgcn/model.hpp"
#include "cgcn/tensor.hpp"

namespace cgcn {

/// Adam with the usual defaults. Per-parameter first/second moment state is
/// keyed by parameter name; one instance per training phase.
class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  /// Applies one update. `state` holds the authoritative values, `taped` the
  /// leaf mirror used in the forward pass, `grads` the backward result.
  /// Parameters that were not leaves are left untouched.
  void step(ModelState& state, ModelState& taped, const GradientMap& grads) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    auto state_params = parameters(state);
    auto taped_params = parameters(taped);
    for (std::size_t p = 0; p < state_params.size(); ++p) {
      Tensor& leaf = *taped_params[p].second;
      if (!leaf.requires_grad()) continue;
      const Tensor g = grads.get(leaf);
      Tensor& value = *state_params[p].second;
      auto& m = moments_[state_params[p].first];
      if (m.m.empty()) {
        m.m.assign(value.size(), 0.0);
        m.v.assign(value.size(), 0.0);
      }
      const auto gv = g.data();
      const auto xv = value.data();
      std::vector<double> next(value.size());
      for (std::size_t i = 0; i < next.size(); ++i) {
        m.m[i] = beta1_ * m.m[i] + (1.0 - beta1_) * gv[i];
        m.v[i] = beta2_ * m.v[i] + (1.0 - beta2_) * gv[i] * gv[i];
        const double mhat = m.m[i] / bc1;
        const double vhat = m.v[i] / bc2;
        next[i] = xv[i] - lr_ * mhat / (std::sqrt(vhat) + eps_);
      }
      value = Tensor(value.rows(), value.cols(), std::move(next));
    }
  }

  [[nodiscard]] double learning_rate() const noexcept { return lr_; }

 private:
  struct Moments {
    std::vector<double> m;
    std::vector<double> v;
  };
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::map<std::string, Moments> moments_;
};

}  // namespace cgcn
