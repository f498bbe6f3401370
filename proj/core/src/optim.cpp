#include "ammfm/optim.hpp"

#include <cmath>

#include "ammfm/errors.hpp"

namespace ammfm::training {

Adam::Adam(std::vector<Tensor> parameters, AdamConfig config)
    : params_(std::move(parameters)), config_(config) {
  if (!(config_.learning_rate >= 0.0)) throw ConfigError("adam: learning rate must be >= 0");
  if (!(config_.beta1 >= 0.0 && config_.beta1 < 1.0) ||
      !(config_.beta2 >= 0.0 && config_.beta2 < 1.0)) {
    throw ConfigError("adam: betas must lie in [0, 1)");
  }
  if (!(config_.epsilon > 0.0)) throw ConfigError("adam: epsilon must be positive");
  for (const auto& p : params_) {
    if (!p.requires_grad() || !p.is_leaf()) {
      throw ContractError("adam: every parameter must be a requires_grad leaf");
    }
    m_.emplace_back(p.numel(), 0.0);
    v_.emplace_back(p.numel(), 0.0);
  }
}

void Adam::step() {
  ++steps_;
  const auto t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  const double lr = config_.learning_rate;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    const auto g = p.grad();
    auto w = p.mutable_values();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = config_.beta1 * m[k] + (1.0 - config_.beta1) * g[k];
      v[k] = config_.beta2 * v[k] + (1.0 - config_.beta2) * g[k] * g[k];
      if (lr == 0.0) continue;
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      w[k] -= lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

void Adam::zero_grad() noexcept {
  for (auto& p : params_) p.zero_grad();
}

}  // namespace ammfm::training
