#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mamp/model.hpp"
#include "mamp/optim.hpp"

namespace mamp {

// Binary container: magic "MAMPCKP1", a JSON header (arch config, seed,
// schedule step, optimizer hyperparameters, parameter manifest), then raw
// little-endian doubles for every parameter value and, when optimizer state
// is included, its first/second moments. Write-then-reload is bit-exact.
void save_checkpoint(const std::string& path, ModelParams& params, std::uint64_t seed,
                     std::uint64_t schedule_step, const AdamW* optimizer = nullptr);

struct LoadedCheckpoint {
  ModelParams params;
  std::uint64_t seed = 0;
  std::uint64_t schedule_step = 0;
  bool has_optimizer = false;
  AdamWConfig optimizer_config;
  std::size_t optimizer_step_count = 0;
  // Per parameter, in ModelParams::all() order: (m, v).
  std::vector<std::pair<DenseArray, DenseArray>> moments;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

// Attaches every parameter of ckpt.params to opt (unit lr multiplier) and
// restores moments and step count. Requires has_optimizer.
void restore_optimizer(LoadedCheckpoint& ckpt, AdamW& opt);

}  // namespace mamp
