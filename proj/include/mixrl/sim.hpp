#pragma once

#include <vector>

#include "mixrl/mdp.hpp"
#include "mixrl/rng.hpp"

namespace mixrl {

// Sparse row view over a dense row-major nonnegative matrix. Keeps both the
// raw values (for sparse matvecs) and within-row cumulative sums (for
// sampling). Zero entries are dropped at build time.
struct SparseRows {
  int n_rows = 0;
  int n_cols = 0;
  std::vector<int> offs;   // n_rows + 1
  std::vector<int> idx;    // nnz column indices
  std::vector<double> val; // nnz values
  std::vector<double> cum; // nnz running row sums

  static SparseRows from(const double* data, int n_rows, int n_cols) {
    SparseRows sr;
    sr.n_rows = n_rows;
    sr.n_cols = n_cols;
    sr.offs.assign(n_rows + 1, 0);
    for (int i = 0; i < n_rows; ++i) {
      const double* row = data + static_cast<size_t>(i) * n_cols;
      double acc = 0.0;
      for (int j = 0; j < n_cols; ++j) {
        if (row[j] == 0.0) continue;
        acc += row[j];
        sr.idx.push_back(j);
        sr.val.push_back(row[j]);
        sr.cum.push_back(acc);
      }
      sr.offs[i + 1] = static_cast<int>(sr.idx.size());
    }
    return sr;
  }

  // Draw a column index from row i proportional to its values.
  int sample(int i, Rng& rng) const {
    int lo = offs[i], hi = offs[i + 1];
    double total = cum[hi - 1];
    double u = rng.uniform() * total;
    // Linear scan for short rows, binary search for long ones.
    if (hi - lo <= 8) {
      for (int k = lo; k < hi; ++k)
        if (u < cum[k]) return idx[k];
      return idx[hi - 1];
    }
    int a = lo, b = hi - 1;
    while (a < b) {
      int m = (a + b) / 2;
      if (u < cum[m])
        b = m;
      else
        a = m + 1;
    }
    return idx[a];
  }

  // y = M^T x restricted to nonzeros (used for distribution pushes x P).
  void push_forward(const std::vector<double>& x, std::vector<double>& y) const {
    y.assign(n_cols, 0.0);
    for (int i = 0; i < n_rows; ++i) {
      double xi = x[i];
      if (xi == 0.0) continue;
      for (int k = offs[i]; k < offs[i + 1]; ++k) y[idx[k]] += xi * val[k];
    }
  }

  // y = M x (used for expected-value pulls P v).
  void pull_back(const std::vector<double>& x, std::vector<double>& y) const {
    y.assign(n_rows, 0.0);
    for (int i = 0; i < n_rows; ++i) {
      double acc = 0.0;
      for (int k = offs[i]; k < offs[i + 1]; ++k) acc += val[k] * x[idx[k]];
      y[i] = acc;
    }
  }
};

// Step-by-step sampler for a Markov chain.
class ChainSim {
 public:
  ChainSim(const MarkovChain& chain, int start, uint64_t seed)
      : rows_(SparseRows::from(chain.p.data(), chain.n_states, chain.n_states)),
        state_(start),
        rng_(seed) {}

  int state() const { return state_; }
  int step() {
    state_ = rows_.sample(state_, rng_);
    return state_;
  }

 private:
  SparseRows rows_;
  int state_;
  Rng rng_;
};

// Step-by-step sampler for a tabular MDP; rewards come from the R table.
class MdpSim {
 public:
  MdpSim(const TabularMdp& mdp, int start, uint64_t seed)
      : mdp_(&mdp),
        rows_(SparseRows::from(mdp.t.data(),
                               mdp.n_states * mdp.n_actions, mdp.n_states)),
        state_(start),
        rng_(seed) {}

  int state() const { return state_; }
  void reset(int s) { state_ = s; }

  struct Step {
    int next;
    double reward;
  };
  Step step(int action) {
    double r = mdp_->rew(state_, action);
    state_ = rows_.sample(state_ * mdp_->n_actions + action, rng_);
    return {state_, r};
  }

  Rng& rng() { return rng_; }

 private:
  const TabularMdp* mdp_;
  SparseRows rows_;
  int state_;
  Rng rng_;
};

// Samples an action from a policy row.
inline int sample_action(const PolicyTable& pi, int s, Rng& rng) {
  return rng.categorical(pi.row(s));
}

}  // namespace mixrl
