#pragma once

#include <cstdint>
#include <random>

#include "wdmair/core.hpp"

namespace wdmair {

class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  /// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
  Complex cscg(double variance);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace wdmair
