#pragma once

#include <cstdint>
#include <vector>

#include "mixrl/envs.hpp"
#include "mixrl/rng.hpp"

#include <Eigen/Dense>

namespace mixrl {

// Two-hidden-layer softmax policy over a flat feature vector. Weights start
// zero-mean uniform scaled by 1/sqrt(fan_in), biases at zero.
class MlpPolicy {
 public:
  MlpPolicy(int n_in, int n_hidden, int n_out, std::uint64_t seed);

  int n_in() const { return static_cast<int>(w1.cols()); }
  int n_hidden() const { return static_cast<int>(w1.rows()); }
  int n_out() const { return static_cast<int>(w3.rows()); }

  Eigen::VectorXd probs(const Eigen::VectorXd& x) const;
  int sample(const Eigen::VectorXd& x, Rng& rng) const;

  long n_params() const;
  Eigen::VectorXd flatten() const;          // w1, b1, w2, b2, w3, b3
  void load(const Eigen::VectorXd& theta);  // same layout
  bool finite() const;

  Eigen::MatrixXd w1, w2, w3;
  Eigen::VectorXd b1, b2, b3;
};

// One closed on-policy segment (goal reached or task switched under it).
struct EpisodeBatch {
  std::vector<Eigen::VectorXd> obs;
  std::vector<int> actions;
  std::vector<double> rewards;

  size_t size() const { return actions.size(); }
  void clear() {
    obs.clear();
    actions.clear();
    rewards.clear();
  }
};

struct ReinforceConfig {
  int hidden = 100;
  double lr = 0.1;
  double entropy_coef = 0.1;
  double clip_norm = 10.0;
  // gamma = 0 makes the episodic gradient a sum of independent per-step
  // terms, so by default each term is applied as its own clipped SGD step.
  // episodic = true batches the update per closed episode instead; with
  // long episodes the clipped batch direction moves the policy in jumps too
  // coarse to learn from.
  bool episodic = false;
  std::uint64_t seed = 0;

  void validate() const;
};

// Ascent objective: sum_t [ r_t * log pi(a_t|x_t) + beta * H(pi(.|x_t)) ].
// The immediate reward stands in for the return (gamma = 0).
double surrogate(const MlpPolicy& pol, const EpisodeBatch& batch, double beta);
// Gradient of surrogate() in flatten() layout.
Eigen::VectorXd surrogate_grad(const MlpPolicy& pol, const EpisodeBatch& batch,
                               double beta);

struct ReinforceResult {
  MlpPolicy policy;
  long episodes = 0;
  long updates = 0;
  std::vector<double> episode_rates;  // in-episode mean reward, per episode
};

// REINFORCE on the task grid (see ReinforceConfig for the update
// granularity). Episode rates cover closed episodes; a trailing unfinished
// episode is dropped from them. Throws Error with the step index if the
// loss goes non-finite.
ReinforceResult train_reinforce(TaskGridSim& sim, const ReinforceConfig& cfg,
                                long total_steps);

// Mean per-step reward of the frozen policy, averaged over tasks pinned one
// at a time on a fresh sim built from env_seed (so the task set matches
// training). Evaluates min(sample_tasks, n_tasks) distinct tasks.
double evaluate_reward_rate(const MlpPolicy& pol, int dim, int n_tasks,
                            long tau, std::uint64_t env_seed, int sample_tasks,
                            long steps_per_task, std::uint64_t eval_seed);

}  // namespace mixrl
