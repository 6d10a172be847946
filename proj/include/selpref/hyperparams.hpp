// Training knobs. Lives apart from the trainer because the model file
// records the exact values a model was trained with.
#pragma once

#include <cstdint>
#include <string>

#include "selpref/errors.hpp"

namespace selpref {

enum class TrainMode { Deterministic, Parallel };

inline std::string to_string(TrainMode m) {
  return m == TrainMode::Deterministic ? "deterministic" : "parallel";
}

inline TrainMode train_mode_from_string(const std::string& s) {
  if (s == "deterministic") return TrainMode::Deterministic;
  if (s == "parallel") return TrainMode::Parallel;
  throw config_error("unknown train mode '" + s + "' (expected deterministic|parallel)");
}

struct Hyperparams {
  std::uint32_t dimension = 300;
  std::uint32_t negatives = 15;
  std::uint32_t epochs = 5;
  double initial_lr = 0.025;
  double min_lr = -1.0;  // < 0: defaults to initial_lr * 1e-4
  std::uint64_t seed = 1;
  TrainMode mode = TrainMode::Deterministic;
  std::uint32_t threads = 2;        // parallel mode only
  double subsample_t = 1e-4;        // <= 0 disables term subsampling

  double resolved_min_lr() const { return min_lr < 0.0 ? initial_lr * 1e-4 : min_lr; }

  void validate() const {
    if (dimension < 1) throw config_error("dimension must be >= 1");
    if (negatives < 1) throw config_error("negatives must be >= 1");
    if (initial_lr <= 0.0) throw config_error("initial_lr must be > 0");
    if (min_lr >= 0.0 && min_lr > initial_lr) throw config_error("min_lr must be <= initial_lr");
    if (mode == TrainMode::Parallel && threads < 1) throw config_error("threads must be >= 1");
  }
};

}  // namespace selpref
