#pragma once

// Test-only reference implementations, written independently of the library
// paths they check: plain loops, no Eigen, no shared solver code.

#include <cmath>
#include <cstdint>
#include <vector>

#include "mixrl/mdp.hpp"
#include "mixrl/rng.hpp"

namespace oracle {

using mixrl::MarkovChain;
using mixrl::PolicyTable;
using mixrl::Rng;
using mixrl::TabularMdp;

// mu <- mu P until the update stops moving.
inline std::vector<double> power_iteration_mu(const MarkovChain& c,
                                              double tol = 1e-14,
                                              long max_iter = 2000000) {
  int n = c.n_states;
  std::vector<double> mu(n, 1.0 / n), nxt(n, 0.0);
  for (long it = 0; it < max_iter; ++it) {
    for (int j = 0; j < n; ++j) nxt[j] = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) nxt[j] += mu[i] * c.at(i, j);
    double sum = 0.0;
    for (double v : nxt) sum += v;
    for (double& v : nxt) v /= sum;
    double diff = 0.0;
    for (int j = 0; j < n; ++j) diff = std::max(diff, std::abs(nxt[j] - mu[j]));
    mu.swap(nxt);
    if (diff < tol) break;
  }
  return mu;
}

inline double tv_distance(const std::vector<double>& p,
                          const std::vector<double>& q) {
  double acc = 0.0;
  for (size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - q[i]);
  return 0.5 * acc;
}

// C = A B for dense row-major square matrices held as flat vectors.
inline std::vector<double> matmul(const std::vector<double>& a,
                                  const std::vector<double>& b, int n) {
  std::vector<double> c(static_cast<size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      double aik = a[static_cast<size_t>(i) * n + k];
      if (aik == 0.0) continue;
      for (int j = 0; j < n; ++j)
        c[static_cast<size_t>(i) * n + j] += aik * b[static_cast<size_t>(k) * n + j];
    }
  return c;
}

// Smallest h >= 0 with max_s TV(P^h(s,.), mu) <= eps, by explicit powers.
// Returns -1 if the cap is hit.
inline long brute_tv_mixing_time(const MarkovChain& c,
                                 const std::vector<double>& mu, double eps,
                                 long cap) {
  int n = c.n_states;
  std::vector<double> ph(static_cast<size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) ph[static_cast<size_t>(i) * n + i] = 1.0;
  for (long h = 0; h <= cap; ++h) {
    double worst = 0.0;
    for (int s = 0; s < n; ++s) {
      std::vector<double> row(ph.begin() + static_cast<size_t>(s) * n,
                              ph.begin() + static_cast<size_t>(s + 1) * n);
      worst = std::max(worst, tv_distance(row, mu));
    }
    if (worst <= eps + 1e-12) return h;
    ph = matmul(ph, c.p, n);
  }
  return -1;
}

// Smallest h >= 1 with max_s TV((1/h) sum_{t=1..h} P^t(s,.), mu) <= eps.
inline long brute_cesaro_mixing_time(const MarkovChain& c,
                                     const std::vector<double>& mu, double eps,
                                     long cap) {
  int n = c.n_states;
  std::vector<double> ph = c.p;  // P^1
  std::vector<double> acc(static_cast<size_t>(n) * n, 0.0);
  for (long h = 1; h <= cap; ++h) {
    for (size_t i = 0; i < acc.size(); ++i) acc[i] += ph[i];
    double worst = 0.0;
    for (int s = 0; s < n; ++s) {
      std::vector<double> row(n);
      for (int j = 0; j < n; ++j)
        row[j] = acc[static_cast<size_t>(s) * n + j] / h;
      worst = std::max(worst, tv_distance(row, mu));
    }
    if (worst <= eps + 1e-12) return h;
    ph = matmul(ph, c.p, n);
  }
  return -1;
}

// Expected steps from s0 to s1 by damped fixed-point sweeps of
// m = 1 + sum_{s' != s1} P(s'|s) m(s'). Independent of any linear solver.
inline std::vector<double> hitting_fixed_point(const MarkovChain& c, int target,
                                               long iters = 2000000,
                                               double tol = 1e-12) {
  int n = c.n_states;
  std::vector<double> m(n, 0.0), nxt(n, 0.0);
  for (long it = 0; it < iters; ++it) {
    double diff = 0.0;
    for (int s = 0; s < n; ++s) {
      if (s == target) {
        nxt[s] = 0.0;
        continue;
      }
      double acc = 1.0;
      for (int s2 = 0; s2 < n; ++s2)
        if (s2 != target) acc += c.at(s, s2) * m[s2];
      nxt[s] = acc;
      diff = std::max(diff, std::abs(nxt[s] - m[s]));
    }
    m.swap(nxt);
    if (diff < tol) break;
  }
  return m;
}

struct SimStat {
  double mean = 0.0;
  double se = 0.0;
  long count = 0;
};

// Monte-Carlo hitting time s0 -> s1 over independent episodes.
inline SimStat simulate_hitting(const MarkovChain& c, int s0, int s1,
                                long episodes, uint64_t seed,
                                long max_len = 1000000) {
  Rng rng(seed);
  double sum = 0.0, sumsq = 0.0;
  long done = 0;
  int n = c.n_states;
  for (long e = 0; e < episodes; ++e) {
    int s = s0;
    long steps = 0;
    while (s != s1 && steps < max_len) {
      double u = rng.uniform();
      double acc = 0.0;
      int nxt = n - 1;
      for (int j = 0; j < n; ++j) {
        acc += c.at(s, j);
        if (u < acc) {
          nxt = j;
          break;
        }
      }
      s = nxt;
      ++steps;
    }
    if (s == s1) {
      sum += steps;
      sumsq += static_cast<double>(steps) * steps;
      ++done;
    }
  }
  SimStat st;
  st.count = done;
  if (done > 0) {
    st.mean = sum / done;
    double var = sumsq / done - st.mean * st.mean;
    st.se = std::sqrt(std::max(var, 0.0) / done);
  }
  return st;
}

// Long-run reward rate of a fixed policy by direct simulation.
inline double simulate_rate(const TabularMdp& mdp, const PolicyTable& pi,
                            int start, long steps, uint64_t seed) {
  Rng rng(seed);
  int s = start;
  double total = 0.0;
  int n = mdp.n_states, na = mdp.n_actions;
  for (long t = 0; t < steps; ++t) {
    double u = rng.uniform();
    double acc = 0.0;
    int a = na - 1;
    for (int b = 0; b < na; ++b) {
      acc += pi.at(s, b);
      if (u < acc) {
        a = b;
        break;
      }
    }
    total += mdp.rew(s, a);
    double u2 = rng.uniform();
    double acc2 = 0.0;
    int nxt = n - 1;
    for (int j = 0; j < n; ++j) {
      acc2 += mdp.tp(s, a, j);
      if (u2 < acc2) {
        nxt = j;
        break;
      }
    }
    s = nxt;
  }
  return total / steps;
}

// Exhaustive search over deterministic policies; gain via power iteration.
inline double enumerate_optimal_rho(const TabularMdp& mdp) {
  int n = mdp.n_states, na = mdp.n_actions;
  std::vector<int> acts(n, 0);
  double best = -1.0;
  long total = 1;
  for (int s = 0; s < n; ++s) total *= na;
  for (long code = 0; code < total; ++code) {
    long c = code;
    for (int s = 0; s < n; ++s) {
      acts[s] = static_cast<int>(c % na);
      c /= na;
    }
    MarkovChain chain = MarkovChain::zeros(n);
    for (int s = 0; s < n; ++s)
      for (int j = 0; j < n; ++j) chain.at(s, j) = mdp.tp(s, acts[s], j);
    std::vector<double> mu = power_iteration_mu(chain);
    double rho = 0.0;
    for (int s = 0; s < n; ++s) rho += mu[s] * mdp.rew(s, acts[s]);
    best = std::max(best, rho);
  }
  return best;
}

// Random ergodic test fixtures.
inline MarkovChain random_chain(int n, Rng& rng, double smooth = 1e-3) {
  MarkovChain c = MarkovChain::zeros(n);
  for (int s = 0; s < n; ++s) {
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
      double w = -std::log(1.0 - rng.uniform());
      if (rng.uniform() < 0.5) w *= 0.05;  // uneven rows mix slower
      c.at(s, j) = w;
      sum += w;
    }
    for (int j = 0; j < n; ++j)
      c.at(s, j) = (c.at(s, j) / sum + smooth) / (1.0 + n * smooth);
  }
  return c;
}

inline TabularMdp random_mdp(int n, int na, Rng& rng, double smooth = 1e-3) {
  TabularMdp m = TabularMdp::zeros(n, na, 1.0);
  for (int s = 0; s < n; ++s)
    for (int a = 0; a < na; ++a) {
      double sum = 0.0;
      auto row = m.row(s, a);
      for (int j = 0; j < n; ++j) {
        row[j] = -std::log(1.0 - rng.uniform());
        sum += row[j];
      }
      for (int j = 0; j < n; ++j)
        row[j] = (row[j] / sum + smooth) / (1.0 + n * smooth);
      m.rew(s, a) = rng.uniform();
    }
  return m;
}

}  // namespace oracle
