#pragma once

#include <cstddef>
#include <vector>

#include "mamp/array.hpp"
#include "mamp/autodiff.hpp"

namespace mamp {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.95;
  double eps = 1e-8;
  double weight_decay = 0.05;
};

// Decoupled weight decay optimizer. Parameters are attached once; step()
// consumes the gradients currently accumulated on them. A per-slot lr
// multiplier supports layer-wise learning-rate decay; the multiplier scales
// the effective lr for both the decay and the gradient step.
class AdamW {
 public:
  struct Slot {
    Parameter* param;
    DenseArray m;
    DenseArray v;
    double lr_mult;
    bool apply_decay;
  };

  explicit AdamW(AdamWConfig cfg) : cfg_(cfg) {}

  void attach(Parameter& p, double lr_mult = 1.0, bool apply_decay = true);
  void step(double lr);
  void zero_grads();

  const AdamWConfig& config() const { return cfg_; }
  std::size_t step_count() const { return step_count_; }
  void set_step_count(std::size_t t) { step_count_ = t; }
  std::vector<Slot>& slots() { return slots_; }
  const std::vector<Slot>& slots() const { return slots_; }

 private:
  AdamWConfig cfg_;
  std::vector<Slot> slots_;
  std::size_t step_count_ = 0;
};

// Plain SGD with momentum for the linear-probe protocol.
class SgdMomentum {
 public:
  explicit SgdMomentum(double momentum) : momentum_(momentum) {}

  void attach(Parameter& p);
  void step(double lr);
  void zero_grads();

 private:
  struct Slot {
    Parameter* param;
    DenseArray velocity;
  };
  double momentum_;
  std::vector<Slot> slots_;
};

struct ScheduleConfig {
  std::size_t warmup_epochs = 0;
  std::size_t total_epochs = 1;
  std::size_t steps_per_epoch = 1;
  double peak_lr = 1e-3;
  double floor_lr = 0.0;

  std::size_t warmup_steps() const { return warmup_epochs * steps_per_epoch; }
  std::size_t total_steps() const { return total_epochs * steps_per_epoch; }
  void validate() const;  // throws ContractViolation on invariant breach
};

// Linear ramp 0 -> peak_lr over the warmup steps, then cosine decay
// floor + 0.5*(peak-floor)*(1+cos(pi*progress)) down to floor_lr at
// step == total_steps. Domain is [0, total_steps]; out of range throws.
double lr_at(std::size_t step, const ScheduleConfig& cfg);

}  // namespace mamp
