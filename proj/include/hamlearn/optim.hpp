#pragma once

#include <vector>

#include "hamlearn/autodiff.hpp"

namespace hamlearn {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // decoupled: applied to weights, not moments
};

// AdamW with bias-corrected moments. Weight decay multiplies parameters by
// (1 - lr*wd) independently of the gradient step.
class AdamW {
 public:
  explicit AdamW(const AdamWConfig& cfg = {}) : cfg_(cfg) {}

  void step(std::vector<autodiff::Parameter>& params, double lr);

  const AdamWConfig& config() const { return cfg_; }
  long step_count() const { return t_; }

 private:
  AdamWConfig cfg_;
  long t_ = 0;
  std::vector<autodiff::Matrix> m_, v_;
};

// Linear ramp from lr_start at epoch 0 to lr_end at the final epoch.
double lr_schedule(int epoch, int total_epochs, double lr_start = 5e-3,
                   double lr_end = 2.5e-4);

}  // namespace hamlearn
