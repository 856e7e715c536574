#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mixrl/mdp.hpp"

namespace mixrl {

// One tracked start point: the state it belongs to and, per epsilon in the
// report grid, the certified settling step (NaN when no step qualified).
struct MixingPoint {
  int state = 0;
  std::vector<double> t;
};

struct MixingReport {
  std::string kind;  // "tv", "cesaro", "return_exact", "return_empirical"
  std::vector<double> epsilons;
  std::vector<double> relative_errors;  // eps / |rho| for return kinds
  double rho = 0.0;                     // long-run rate (return kinds)
  std::vector<MixingPoint> points;
  std::vector<double> mean_t;  // per epsilon, over retained points
  std::vector<double> max_t;
  long excluded = 0;  // (point, epsilon) pairs with no qualifying step
  long horizon = 0;
  std::string to_text() const;
};

// Smallest h >= 0 with worst-case start TV(P^h(s0,.), mu) <= eps.
// Throws HorizonError if the cap is reached first (e.g. periodic chains).
long exact_mixing_time(const MarkovChain& chain, double eps = 0.25,
                       long horizon_cap = 100000);

// Same for the step-averaged kernel (1/h) sum_{t=1..h} P^t; index starts at 1.
// Finite for periodic unichain kernels where exact_mixing_time diverges.
long cesaro_mixing_time(const MarkovChain& chain, double eps = 0.25,
                        long horizon_cap = 100000);

// Per start state, smallest h >= 1 such that every partial average of
// expected reward over h' in [h, horizon_cap] stays within eps of rho.
// Throws HorizonError if any state still violates at the cap.
MixingReport return_mixing_time_exact(const TabularMdp& mdp,
                                      const PolicyTable& pi,
                                      const std::vector<double>& epsilons,
                                      long horizon_cap);

// Two-rollout estimator: rollout one estimates rho, rollout two tracks up to
// max_tracked time-uniform (reservoir sampled) start points and scans each
// suffix reward history for the last violation. Points still violating at
// the end of their history are excluded and counted.
MixingReport return_mixing_time_empirical(const TabularMdp& mdp,
                                          const PolicyTable& pi,
                                          const std::vector<double>& epsilons,
                                          int max_tracked, long horizon,
                                          uint64_t seed, int start = 0);

struct HittingTimes {
  int n_states = 0;
  std::vector<double> m;  // [target * n_states + start]
  double at(int start, int target) const {
    return m[static_cast<size_t>(target) * n_states + start];
  }
};

// Expected steps to reach each target from each start, one linear solve per
// target. Throws SolverError when some target is unreachable.
HittingTimes expected_hitting_times(const MarkovChain& chain);

struct DiameterReport {
  double policy_diameter = 0.0;  // max over ordered pairs of expected hitting
  long graph_diameter = 0;       // symmetrized transition support graph
  std::string to_text() const;
};

DiameterReport diameter_report(const MarkovChain& chain);

// Best-case expected travel time between the worst state pair: per-target
// stochastic-shortest-path value iteration over all actions.
double min_diameter(const TabularMdp& mdp);

struct BottleneckReport {
  double mu_region = 0.0;
  double edge_flow = 0.0;            // sum_{s in R, s' not in R} mu(s) P(s'|s)
  double ratio = 0.0;                // edge_flow / mu_region
  double residence_analytic = 0.0;   // 1 / ratio; inf for the full space
  std::vector<int> boundary;         // states in R with positive exit prob
  std::string to_text() const;
};

BottleneckReport bottleneck_ratio(const MarkovChain& chain,
                                  const StationaryDistribution& sd,
                                  const std::vector<int>& region);

struct ResidenceStat {
  double mean = 0.0;
  double se = 0.0;
  long count = 0;  // completed sojourns observed
};

// Mean contiguous sojourn length in the region after burn-in. The burn-in is
// the exact mixing time when cheaply computable, otherwise steps / 10.
// Returns an infinite mean for the full space; throws Error if the region is
// never entered.
ResidenceStat residence_time_simulated(const MarkovChain& chain,
                                       const std::vector<int>& region,
                                       long steps, uint64_t seed);

// 1 - |lambda_2| for the dense kernel; ~0 flags periodic or near-reducible
// chains.
double spectral_gap(const MarkovChain& chain);

}  // namespace mixrl
