#include "mixrl/mdp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace mixrl {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void check_distribution(std::span<const double> row, const std::string& what) {
  double sum = 0.0;
  for (size_t i = 0; i < row.size(); ++i) {
    if (row[i] < -tol::kStochastic)
      throw std::invalid_argument(what + ": negative probability at index " +
                                  std::to_string(i));
    sum += row[i];
  }
  if (std::abs(sum - 1.0) > tol::kStochastic)
    throw std::invalid_argument(what + ": row sums to " + std::to_string(sum));
}

double inf_norm_residual(const MarkovChain& chain,
                         const std::vector<double>& mu) {
  // inf-norm of mu P - mu
  int n = chain.n_states;
  double worst = 0.0;
  for (int j = 0; j < n; ++j) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += mu[i] * chain.at(i, j);
    worst = std::max(worst, std::abs(acc - mu[j]));
  }
  return worst;
}

}  // namespace

TabularMdp TabularMdp::zeros(int n_states, int n_actions, double r_max) {
  TabularMdp m;
  m.n_states = n_states;
  m.n_actions = n_actions;
  m.r_max = r_max;
  m.t.assign(static_cast<size_t>(n_states) * n_actions * n_states, 0.0);
  m.r.assign(static_cast<size_t>(n_states) * n_actions, 0.0);
  return m;
}

void TabularMdp::validate() const {
  if (n_states <= 0 || n_actions <= 0)
    throw std::invalid_argument("mdp: empty state or action set");
  if (t.size() != static_cast<size_t>(n_states) * n_actions * n_states)
    throw std::invalid_argument("mdp: transition table has wrong size");
  if (r.size() != static_cast<size_t>(n_states) * n_actions)
    throw std::invalid_argument("mdp: reward table has wrong size");
  for (int s = 0; s < n_states; ++s)
    for (int a = 0; a < n_actions; ++a) {
      check_distribution(row(s, a), "mdp transition row (s=" +
                                        std::to_string(s) +
                                        ", a=" + std::to_string(a) + ")");
      double rv = rew(s, a);
      if (rv < 0.0 || rv > r_max + tol::kStochastic)
        throw std::invalid_argument(
            "mdp: reward out of [0, r_max] at (s=" + std::to_string(s) +
            ", a=" + std::to_string(a) + ")");
    }
}

PolicyTable PolicyTable::uniform(int n_states, int n_actions) {
  PolicyTable pi;
  pi.n_states = n_states;
  pi.n_actions = n_actions;
  pi.p.assign(static_cast<size_t>(n_states) * n_actions, 1.0 / n_actions);
  return pi;
}

PolicyTable PolicyTable::deterministic(const std::vector<int>& actions,
                                       int n_actions) {
  PolicyTable pi;
  pi.n_states = static_cast<int>(actions.size());
  pi.n_actions = n_actions;
  pi.p.assign(static_cast<size_t>(pi.n_states) * n_actions, 0.0);
  for (int s = 0; s < pi.n_states; ++s) {
    if (actions[s] < 0 || actions[s] >= n_actions)
      throw std::invalid_argument("policy: action out of range at s=" +
                                  std::to_string(s));
    pi.at(s, actions[s]) = 1.0;
  }
  return pi;
}

bool PolicyTable::is_deterministic() const {
  for (int s = 0; s < n_states; ++s)
    for (int a = 0; a < n_actions; ++a) {
      double v = at(s, a);
      if (v != 0.0 && v != 1.0) return false;
    }
  return true;
}

int PolicyTable::argmax_action(int s) const {
  int best = 0;
  double bv = at(s, 0);
  for (int a = 1; a < n_actions; ++a)
    if (at(s, a) > bv) {
      bv = at(s, a);
      best = a;
    }
  return best;
}

void PolicyTable::set_action(int s, int a) {
  for (int b = 0; b < n_actions; ++b) at(s, b) = (b == a) ? 1.0 : 0.0;
}

void PolicyTable::validate() const {
  if (p.size() != static_cast<size_t>(n_states) * n_actions)
    throw std::invalid_argument("policy: table has wrong size");
  for (int s = 0; s < n_states; ++s)
    check_distribution(row(s), "policy row (s=" + std::to_string(s) + ")");
}

MarkovChain MarkovChain::zeros(int n_states) {
  MarkovChain c;
  c.n_states = n_states;
  c.p.assign(static_cast<size_t>(n_states) * n_states, 0.0);
  return c;
}

void MarkovChain::validate() const {
  if (p.size() != static_cast<size_t>(n_states) * n_states)
    throw std::invalid_argument("chain: kernel has wrong size");
  for (int s = 0; s < n_states; ++s)
    check_distribution(row(s), "chain row (s=" + std::to_string(s) + ")");
}

MarkovChain induce_chain(const TabularMdp& mdp, const PolicyTable& pi) {
  if (pi.n_states != mdp.n_states || pi.n_actions != mdp.n_actions)
    throw std::invalid_argument("induce_chain: policy shape mismatch");
  MarkovChain c = MarkovChain::zeros(mdp.n_states);
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a) {
      double w = pi.at(s, a);
      if (w == 0.0) continue;
      auto trow = mdp.row(s, a);
      double* crow = c.p.data() + static_cast<size_t>(s) * c.n_states;
      for (int s2 = 0; s2 < mdp.n_states; ++s2) crow[s2] += w * trow[s2];
    }
  return c;
}

std::vector<double> policy_reward(const TabularMdp& mdp,
                                  const PolicyTable& pi) {
  std::vector<double> r_pi(mdp.n_states, 0.0);
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a)
      r_pi[s] += pi.at(s, a) * mdp.rew(s, a);
  return r_pi;
}

TabularMdp smooth_ergodic(const TabularMdp& mdp, double eps) {
  if (eps <= 0.0) throw std::invalid_argument("smooth_ergodic: eps must be > 0");
  TabularMdp out = mdp;
  double denom = 1.0 + mdp.n_states * eps;
  for (double& v : out.t) v = (v + eps) / denom;
  return out;
}

MarkovChain smooth_chain(const MarkovChain& chain, double eps) {
  if (eps <= 0.0) throw std::invalid_argument("smooth_chain: eps must be > 0");
  MarkovChain out = chain;
  double denom = 1.0 + chain.n_states * eps;
  for (double& v : out.p) v = (v + eps) / denom;
  return out;
}

StationaryDistribution steady_state(const MarkovChain& chain) {
  int n = chain.n_states;
  if (n <= 0) throw std::invalid_argument("steady_state: empty chain");
  MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = chain.at(j, i) - (i == j ? 1.0 : 0.0);
  a.row(0).setOnes();  // replace one balance equation with normalization
  VectorXd b = VectorXd::Zero(n);
  b(0) = 1.0;
  // Rank-revealing LU: a singular system here means the unichain assumption
  // is violated (several recurrent classes), not just bad conditioning.
  Eigen::FullPivLU<MatrixXd> lu(a);
  if (!lu.isInvertible())
    throw SolverError("steady_state: singular balance system (chain not unichain)",
                      0.0);
  VectorXd mu = lu.solve(b);

  StationaryDistribution out;
  out.mu.assign(mu.data(), mu.data() + n);
  for (double& v : out.mu) {
    if (v < 0.0 && v >= -tol::kStochastic) v = 0.0;
  }
  double sum = 0.0;
  for (double v : out.mu) {
    if (v < 0.0)
      throw SolverError("steady_state: negative stationary mass", v);
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-8)
    throw SolverError("steady_state: solution does not normalize", sum - 1.0);
  for (double& v : out.mu) v /= sum;
  out.residual = inf_norm_residual(chain, out.mu);
  if (!(out.residual <= tol::kSteadyState))
    throw SolverError("steady_state: balance residual above tolerance",
                      out.residual);
  return out;
}

double average_reward(const MarkovChain& chain, std::span<const double> r_pi) {
  StationaryDistribution sd = steady_state(chain);
  double rho = 0.0;
  for (int s = 0; s < chain.n_states; ++s) rho += sd.mu[s] * r_pi[s];
  return rho;
}

double average_reward(const TabularMdp& mdp, const PolicyTable& pi) {
  auto r_pi = policy_reward(mdp, pi);
  return average_reward(induce_chain(mdp, pi), r_pi);
}

DifferentialValue differential_value(const TabularMdp& mdp,
                                     const PolicyTable& pi) {
  MarkovChain chain = induce_chain(mdp, pi);
  auto r_pi = policy_reward(mdp, pi);
  StationaryDistribution sd = steady_state(chain);
  int n = chain.n_states;
  double rho = 0.0;
  for (int s = 0; s < n; ++s) rho += sd.mu[s] * r_pi[s];

  // (I - P + 1 mu^T) h = r_pi - rho; the rank-one term pins mu.h = 0.
  MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      a(i, j) = (i == j ? 1.0 : 0.0) - chain.at(i, j) + sd.mu[j];
  VectorXd rhs(n);
  for (int i = 0; i < n; ++i) rhs(i) = r_pi[i] - rho;
  VectorXd h = Eigen::PartialPivLU<MatrixXd>(a).solve(rhs);

  DifferentialValue out;
  out.rho = rho;
  out.h.assign(h.data(), h.data() + n);
  double drift = 0.0;
  for (int s = 0; s < n; ++s) drift += sd.mu[s] * out.h[s];
  for (double& v : out.h) v -= drift;

  double worst = 0.0;
  for (int s = 0; s < n; ++s) {
    double ph = 0.0;
    for (int s2 = 0; s2 < n; ++s2) ph += chain.at(s, s2) * out.h[s2];
    worst = std::max(worst, std::abs(out.h[s] - (r_pi[s] - rho + ph)));
  }
  out.residual = worst;
  if (!(worst <= tol::kBias))
    throw SolverError("differential_value: bias residual above tolerance",
                      worst);
  return out;
}

OptimalResult optimal_average_reward(const TabularMdp& mdp) {
  mdp.validate();
  int n = mdp.n_states, na = mdp.n_actions;

  // Sparse successor lists; most generated instances are near-deterministic.
  std::vector<int> offs(static_cast<size_t>(n) * na + 1, 0);
  std::vector<int> idx;
  std::vector<double> val;
  idx.reserve(static_cast<size_t>(n) * na * 2);
  val.reserve(static_cast<size_t>(n) * na * 2);
  for (int s = 0; s < n; ++s)
    for (int a = 0; a < na; ++a) {
      auto row = mdp.row(s, a);
      for (int s2 = 0; s2 < n; ++s2)
        if (row[s2] != 0.0) {
          idx.push_back(s2);
          val.push_back(row[s2]);
        }
      offs[static_cast<size_t>(s) * na + a + 1] = static_cast<int>(idx.size());
    }

  // Half-lazy relative value iteration: the damped operator
  //   w(s) = 0.5 v(s) + 0.5 max_a [R(s,a) + sum T(s2|s,a) v(s2)]
  // has the same gain and greedy actions and always converges in span.
  std::vector<double> v(n, 0.0), w(n, 0.0), delta(n, 0.0);
  std::vector<int> best(n, 0);
  long it = 0;
  for (; it < tol::kRviMaxIter; ++it) {
    for (int s = 0; s < n; ++s) {
      double bq = -std::numeric_limits<double>::infinity();
      int ba = 0;
      for (int a = 0; a < na; ++a) {
        size_t k = static_cast<size_t>(s) * na + a;
        double q = mdp.rew(s, a);
        for (int e = offs[k]; e < offs[k + 1]; ++e) q += val[e] * v[idx[e]];
        if (q > bq) {
          bq = q;
          ba = a;
        }
      }
      w[s] = 0.5 * v[s] + 0.5 * bq;
      best[s] = ba;
    }
    double lo = w[0] - v[0], hi = lo;
    for (int s = 0; s < n; ++s) {
      delta[s] = w[s] - v[s];
      lo = std::min(lo, delta[s]);
      hi = std::max(hi, delta[s]);
    }
    double ref = w[0];
    for (int s = 0; s < n; ++s) v[s] = w[s] - ref;
    if (hi - lo < tol::kRviSpan) {
      OptimalResult out;
      // The damped operator advances half a step, so the per-sweep gain
      // estimate is twice the span midpoint.
      out.rho_star = hi + lo;  // 2 * (hi + lo) / 2
      out.policy = PolicyTable::deterministic(best, na);
      out.iterations = it + 1;
      return out;
    }
  }
  throw SolverError("optimal_average_reward: span did not converge",
                    std::numeric_limits<double>::quiet_NaN());
}

}  // namespace mixrl
