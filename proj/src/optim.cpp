#include "hamlearn/optim.hpp"

#include <cmath>

#include "hamlearn/errors.hpp"

namespace hamlearn {

void AdamW::step(std::vector<autodiff::Parameter>& params, double lr) {
  if (m_.empty()) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const auto& p : params) {
      m_.push_back(autodiff::Matrix::Zero(p.value.rows(), p.value.cols()));
      v_.push_back(autodiff::Matrix::Zero(p.value.rows(), p.value.cols()));
    }
  }
  if (m_.size() != params.size()) throw ContractError("AdamW: parameter set changed");

  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols()) {
      throw ContractError("AdamW: gradient shape mismatch for " + p.name);
    }
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * p.grad;
    v_[i] = (cfg_.beta2 * v_[i].array() + (1.0 - cfg_.beta2) * p.grad.array().square()).matrix();
    if (cfg_.weight_decay != 0.0) p.value *= 1.0 - lr * cfg_.weight_decay;
    p.value.array() -=
        lr * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + cfg_.eps);
  }
}

double lr_schedule(int epoch, int total_epochs, double lr_start, double lr_end) {
  if (total_epochs < 1 || epoch < 0 || epoch >= total_epochs) {
    throw ContractError("lr_schedule: epoch out of range");
  }
  if (total_epochs == 1) return lr_start;
  const double f = static_cast<double>(epoch) / static_cast<double>(total_epochs - 1);
  return lr_start + (lr_end - lr_start) * f;
}

}  // namespace hamlearn
