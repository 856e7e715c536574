#pragma once

#include <cstdint>
#include <vector>

namespace mixrl {

// Per-run reward record. regret_per_step is defined as rho_star minus the
// empirical mean reward; rewards/rho_hat are filled only when the runner is
// asked to keep full traces.
struct RegretTrace {
  double rho_star = 0.0;
  long steps = 0;
  std::uint64_t seed = 0;
  double reward_sum = 0.0;
  std::vector<double> rewards;
  std::vector<double> rho_hat;

  double mean_reward() const {
    return steps > 0 ? reward_sum / static_cast<double>(steps) : 0.0;
  }
  double regret_per_step() const { return rho_star - mean_reward(); }
};

}  // namespace mixrl
