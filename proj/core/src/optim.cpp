#include "mamp/optim.hpp"

#include <cmath>
#include <numbers>

#include "mamp/error.hpp"

namespace mamp {

void AdamW::attach(Parameter& p, double lr_mult, bool apply_decay) {
  for (const Slot& s : slots_) {
    if (s.param == &p) throw ContractViolation("AdamW: parameter attached twice: " + p.name());
  }
  slots_.push_back(Slot{&p, DenseArray(p.value().shape()), DenseArray(p.value().shape()),
                        lr_mult, apply_decay});
}

void AdamW::step(double lr) {
  if (lr < 0.0) throw ContractViolation("AdamW: negative learning rate");
  ++step_count_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));
  for (Slot& s : slots_) {
    auto& p = s.param->value().values();
    const auto& g = s.param->grad().values();
    if (g.size() != p.size() || s.m.size() != p.size()) {
      throw ContractViolation("AdamW: shape mismatch for " + s.param->name());
    }
    const double eff_lr = lr * s.lr_mult;
    const double decay = s.apply_decay ? 1.0 - eff_lr * cfg_.weight_decay : 1.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] *= decay;
      s.m[i] = cfg_.beta1 * s.m[i] + (1.0 - cfg_.beta1) * g[i];
      s.v[i] = cfg_.beta2 * s.v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      const double m_hat = s.m[i] / bc1;
      const double v_hat = s.v[i] / bc2;
      p[i] -= eff_lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
    }
  }
}

void AdamW::zero_grads() {
  for (Slot& s : slots_) s.param->zero_grad();
}

void SgdMomentum::attach(Parameter& p) {
  slots_.push_back(Slot{&p, DenseArray(p.value().shape())});
}

void SgdMomentum::step(double lr) {
  for (Slot& s : slots_) {
    auto& p = s.param->value().values();
    const auto& g = s.param->grad().values();
    for (std::size_t i = 0; i < p.size(); ++i) {
      s.velocity[i] = momentum_ * s.velocity[i] + g[i];
      p[i] -= lr * s.velocity[i];
    }
  }
}

void SgdMomentum::zero_grads() {
  for (Slot& s : slots_) s.param->zero_grad();
}

void ScheduleConfig::validate() const {
  if (total_epochs == 0 || steps_per_epoch == 0) {
    throw ConfigError("schedule: total_epochs and steps_per_epoch must be positive");
  }
  if (warmup_epochs >= total_epochs) {
    throw ConfigError("schedule: warmup_epochs must be < total_epochs");
  }
  if (floor_lr < 0.0 || peak_lr < floor_lr) {
    throw ConfigError("schedule: need 0 <= floor_lr <= peak_lr");
  }
}

double lr_at(std::size_t step, const ScheduleConfig& cfg) {
  cfg.validate();
  const std::size_t warmup = cfg.warmup_steps();
  const std::size_t total = cfg.total_steps();
  if (step > total) {
    throw ContractViolation("lr_at: step " + std::to_string(step) + " past total " +
                            std::to_string(total));
  }
  if (step <= warmup && warmup > 0) {
    return cfg.peak_lr * static_cast<double>(step) / static_cast<double>(warmup);
  }
  const double progress =
      static_cast<double>(step - warmup) / static_cast<double>(total - warmup);
  return cfg.floor_lr +
         0.5 * (cfg.peak_lr - cfg.floor_lr) * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace mamp
