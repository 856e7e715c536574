#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mixrl/agents.hpp"
#include "mixrl/chain_analysis.hpp"
#include "mixrl/envs.hpp"
#include "mixrl/trace.hpp"

namespace mixrl {

// One continuing run; rho_star comes from the env's cached solve unless the
// caller supplies an override (NaN means "use the env"). Agent exceptions
// surface with the failing step index attached.
RegretTrace run_lifelong(const EnvInstance& env, const AgentConfig& cfg,
                         long steps, std::uint64_t seed,
                         bool keep_trace = false,
                         double rho_star_override =
                             std::numeric_limits<double>::quiet_NaN());

struct SweepCell {
  AgentConfig cfg;
  std::vector<double> regrets;  // per seed, in seed order
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation over seeds
};

struct SweepResult {
  std::vector<SweepCell> cells;  // completed cells only
  int n_seeds = 0;
  int best = -1;  // lowest mean regret, ties to the first
  bool truncated = false;
  std::uint64_t master_seed = 0;

  const SweepCell& best_cell() const;
};

// Cross product of configs x seeds. Seed k of every cell shares the run seed
// derive_seed(master_seed, k), so per-seed comparisons are paired. Runs are
// independent work items fanned out over up to `jobs` threads (0 = one per
// hardware thread); each owns its agent and RNG, so results do not depend on
// the thread count. A positive time budget stops cleanly between runs; cells
// cut short are dropped and the result is flagged truncated.
SweepResult sweep(const EnvInstance& env,
                  const std::vector<AgentConfig>& grid, long steps,
                  int n_seeds, std::uint64_t master_seed,
                  double time_budget_sec = 0.0, int jobs = 0);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  long n = 0;
};

// Ordinary least squares; needs >= 2 points and a non-degenerate x spread.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

enum class ScaleQuantity {
  t_ret_exact,
  t_ret_empirical,
  t_mix_exact,
  min_diameter
};

std::string scale_quantity_name(ScaleQuantity q);
ScaleQuantity parse_scale_quantity(const std::string& name);

struct ScalingConfig {
  ScaleQuantity quantity = ScaleQuantity::t_ret_exact;
  // Settling threshold. For the return kinds `relative` reads it as a
  // fraction of the policy gain; the TV kind always takes it as absolute.
  double epsilon = 0.1;
  bool relative = true;
  long horizon = 1000000;
  int n_seeds = 1;       // empirical estimator only
  int max_tracked = 64;  // reservoir size, empirical estimator only
  bool use_optimal_policy = false;  // default: the greedy reference policy
  std::uint64_t seed = 0;
  double time_budget_sec = 0.0;
  int jobs = 0;  // axis points in parallel; 0 = one per hardware thread
};

struct ScalingPoint {
  double nu = 0.0;
  double axis = 0.0;  // the varied parameter's value at this point
  double value = 0.0;
  double worst = 0.0;
  double normalized = 0.0;  // value / (tau * #regions), exact division
  double stderr_ = 0.0;     // over seeds; 0 for exact quantities
  long n_states = 0;
  long tau = 0;
  long regions = 1;
  std::string env_id;
};

struct ScalingStudy {
  std::string family;
  std::string axis_name;
  std::string quantity;
  double epsilon = 0.0;
  bool relative = false;
  std::vector<ScalingPoint> points;
  LinearFit fit;            // value vs axis
  LinearFit loglog_states;  // log value vs log n_states, when all values > 0
  bool truncated = false;
};

// Sweeps nu over scale(family, spec, nu) instances and measures one chain
// quantity per point under the reference policy. Deterministic TV mixing runs
// on the smoothed policy chain since the reference policies are mostly
// deterministic (periodic kernels never settle in TV).
ScalingStudy mixing_scaling_study(const std::string& family,
                                  const ScalingSpec& spec,
                                  std::span<const double> nus,
                                  const ScalingConfig& cfg);

}  // namespace mixrl
