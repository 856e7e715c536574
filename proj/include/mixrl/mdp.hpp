#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mixrl/errors.hpp"
#include "mixrl/tolerances.hpp"

namespace mixrl {

// Finite MDP with dense row-major tables.
//   transition prob:  t[(s * n_actions + a) * n_states + s2]
//   reward:           r[s * n_actions + a], bounded in [0, r_max]
struct TabularMdp {
  int n_states = 0;
  int n_actions = 0;
  double r_max = 1.0;
  std::vector<double> t;
  std::vector<double> r;

  static TabularMdp zeros(int n_states, int n_actions, double r_max = 1.0);

  double tp(int s, int a, int s2) const {
    return t[(static_cast<size_t>(s) * n_actions + a) * n_states + s2];
  }
  double& tp(int s, int a, int s2) {
    return t[(static_cast<size_t>(s) * n_actions + a) * n_states + s2];
  }
  std::span<const double> row(int s, int a) const {
    return {t.data() + (static_cast<size_t>(s) * n_actions + a) * n_states,
            static_cast<size_t>(n_states)};
  }
  std::span<double> row(int s, int a) {
    return {t.data() + (static_cast<size_t>(s) * n_actions + a) * n_states,
            static_cast<size_t>(n_states)};
  }
  double rew(int s, int a) const {
    return r[static_cast<size_t>(s) * n_actions + a];
  }
  double& rew(int s, int a) {
    return r[static_cast<size_t>(s) * n_actions + a];
  }

  // Throws std::invalid_argument naming the offending (s, a) on bad shape,
  // non-stochastic rows, negative probabilities, or out-of-range rewards.
  void validate() const;
};

// Stochastic policy over a tabular MDP's state/action sets.
struct PolicyTable {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> p;

  static PolicyTable uniform(int n_states, int n_actions);
  static PolicyTable deterministic(const std::vector<int>& actions,
                                   int n_actions);

  double at(int s, int a) const {
    return p[static_cast<size_t>(s) * n_actions + a];
  }
  double& at(int s, int a) {
    return p[static_cast<size_t>(s) * n_actions + a];
  }
  std::span<const double> row(int s) const {
    return {p.data() + static_cast<size_t>(s) * n_actions,
            static_cast<size_t>(n_actions)};
  }
  bool is_deterministic() const;
  int argmax_action(int s) const;  // ties resolve to the lowest index
  void set_action(int s, int a);   // overwrite row s with a one-hot
  void validate() const;
};

// Row-stochastic kernel of a Markov chain, dense row-major.
struct MarkovChain {
  int n_states = 0;
  std::vector<double> p;

  static MarkovChain zeros(int n_states);

  double at(int s, int s2) const {
    return p[static_cast<size_t>(s) * n_states + s2];
  }
  double& at(int s, int s2) {
    return p[static_cast<size_t>(s) * n_states + s2];
  }
  std::span<const double> row(int s) const {
    return {p.data() + static_cast<size_t>(s) * n_states,
            static_cast<size_t>(n_states)};
  }
  void validate() const;
};

struct StationaryDistribution {
  std::vector<double> mu;
  double residual = 0.0;  // inf-norm of mu P - mu
};

struct DifferentialValue {
  double rho = 0.0;
  std::vector<double> h;  // bias, mu-weighted mean zero
  double residual = 0.0;  // worst per-state defect of the bias equation
};

struct OptimalResult {
  double rho_star = 0.0;
  PolicyTable policy;
  long iterations = 0;
};

// P_pi(s, s2) = sum_a pi(a|s) T(s2|s, a)
MarkovChain induce_chain(const TabularMdp& mdp, const PolicyTable& pi);

// r_pi(s) = sum_a pi(a|s) R(s, a)
std::vector<double> policy_reward(const TabularMdp& mdp,
                                  const PolicyTable& pi);

// T'(s2|s,a) = (T(s2|s,a) + eps) / (1 + n_states * eps); rewards untouched.
TabularMdp smooth_ergodic(const TabularMdp& mdp, double eps = tol::kSmoothEps);
MarkovChain smooth_chain(const MarkovChain& chain,
                         double eps = tol::kSmoothEps);

// Solves the balance equations directly: (P^T - I) mu = 0 with one equation
// replaced by sum(mu) = 1. Throws SolverError when the system is singular or
// the residual exceeds tol::kSteadyState.
StationaryDistribution steady_state(const MarkovChain& chain);

double average_reward(const MarkovChain& chain, std::span<const double> r_pi);
double average_reward(const TabularMdp& mdp, const PolicyTable& pi);

// Gain and bias from the Poisson equation h = r_pi - rho + P h with
// mu-weighted mean-zero normalization.
DifferentialValue differential_value(const TabularMdp& mdp,
                                     const PolicyTable& pi);

// Relative value iteration with span-seminorm stopping. Throws SolverError if
// the span has not converged after tol::kRviMaxIter sweeps.
OptimalResult optimal_average_reward(const TabularMdp& mdp);

}  // namespace mixrl
