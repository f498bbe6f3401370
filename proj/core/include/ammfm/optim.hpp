#pragma once

#include <cstddef>
#include <vector>

#include "ammfm/tensor.hpp"

namespace ammfm::training {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction. Reads the gradients accumulated on each
/// parameter and writes the update in place.
class Adam {
 public:
  Adam(std::vector<Tensor> parameters, AdamConfig config = {});

  void step();
  void zero_grad() noexcept;

  [[nodiscard]] std::size_t step_count() const noexcept { return steps_; }
  [[nodiscard]] const AdamConfig& config() const noexcept { return config_; }
  [[nodiscard]] const std::vector<std::vector<double>>& first_moment() const noexcept { return m_; }
  [[nodiscard]] const std::vector<std::vector<double>>& second_moment() const noexcept {
    return v_;
  }

 private:
  std::vector<Tensor> params_;
  AdamConfig config_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::size_t steps_ = 0;
};

}  // namespace ammfm::training
