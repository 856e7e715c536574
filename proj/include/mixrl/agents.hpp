#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "mixrl/envs.hpp"
#include "mixrl/mdp.hpp"
#include "mixrl/rng.hpp"
#include "mixrl/tolerances.hpp"
#include "mixrl/trace.hpp"

#include <Eigen/Dense>

namespace mixrl {

enum class Algo { q_on, q_off, dyna, nstep_td, rho_on, rho_off };

std::string algo_name(Algo algo);
Algo parse_algo(const std::string& name);  // invalid_argument on junk

struct AgentConfig {
  Algo algo = Algo::q_off;
  double epsilon = 0.1;   // exploration probability
  double lr = 0.1;        // TD step size (baselines)
  double gamma = 0.99;    // discount (baselines only)
  int B = 1;              // improvement sites per step (rho_off)
  int planning_steps = 0; // dyna
  int n = 1;              // nstep_td rollout depth
  bool update_model_always = false;  // rho_on sensitivity switch
  std::uint64_t seed = 0;

  void validate() const;  // invalid_argument naming the field
};

// Empirical transition/reward model. Rows with no observations fall back to
// the uniform distribution.
struct ModelEstimate {
  int n_states = 0;
  int n_actions = 0;
  std::vector<long> transition_counts;  // [s][a][s2]
  std::vector<long> visit_counts;       // [s][a]
  std::vector<double> reward_sums;      // [s][a]

  ModelEstimate() = default;
  ModelEstimate(int n_states, int n_actions);

  void observe(int s, int a, int s2, double r);
  long visits(int s, int a) const {
    return visit_counts[static_cast<size_t>(s) * n_actions + a];
  }
  long count(int s, int a, int s2) const {
    return transition_counts[(static_cast<size_t>(s) * n_actions + a) *
                                 n_states +
                             s2];
  }
  double t_hat(int s, int a, int s2) const;
  void t_hat_row(int s, int a, double* out) const;
  double r_hat(int s, int a) const;
  // Exact integer sampling from the observed successor counts; the row must
  // have at least one visit.
  int sample_next(int s, int a, Rng& rng) const;
};

// Model views feed the planner smoothed transition rows, either from a
// ModelEstimate or from a known tabular MDP (used when the true dynamics
// stand in for the learned model).
class ModelView {
 public:
  virtual ~ModelView() = default;
  virtual int n_states() const = 0;
  virtual int n_actions() const = 0;
  virtual void t_row(int s, int a, double* out) const = 0;
  virtual double r(int s, int a) const = 0;
};

class EstimateView final : public ModelView {
 public:
  explicit EstimateView(const ModelEstimate* model,
                        double smooth_eps = tol::kSmoothEps);
  int n_states() const override { return model_->n_states; }
  int n_actions() const override { return model_->n_actions; }
  void t_row(int s, int a, double* out) const override;
  double r(int s, int a) const override;

 private:
  const ModelEstimate* model_;
  double eps_;
};

class MdpView final : public ModelView {
 public:
  explicit MdpView(const TabularMdp* mdp, double smooth_eps = tol::kSmoothEps);
  int n_states() const override { return mdp_->n_states; }
  int n_actions() const override { return mdp_->n_actions; }
  void t_row(int s, int a, double* out) const override;
  double r(int s, int a) const override;

 private:
  const TabularMdp* mdp_;
  double eps_;
};

// Average-reward policy improvement on a model: solves the steady state of
// the policy-induced chain once per model/policy revision, then scores the
// candidate policies pi_m(s, a, pi), which differ in a single kernel row,
// with a rank-one (Sherman-Morrison) update of the cached factorization.
class RhoPlanner {
 public:
  RhoPlanner(const ModelView* view, PolicyTable* pi);

  void mark_dirty();  // call after any model or external policy change

  // Model gain of pi with action a forced at state s.
  double candidate_rho(int s, int a);
  // Gain of pi as it stands.
  double rho();
  // Commits argmax_a candidate_rho(s, a) into pi when it strictly beats the
  // current gain (ties among winners to the lowest action); an uninformed
  // model scores every action equally and leaves the row alone, so a uniform
  // initial policy stays exploratory. Returns the committed action, or -1
  // when the row is kept.
  int improve(int s);
  // Gain after the last improve() call (current gain if nothing committed).
  double last_rho() const { return last_rho_; }

 private:
  void refresh();
  const ModelView* view_;
  PolicyTable* pi_;
  bool dirty_ = true;
  double last_rho_ = 0.0;
  Eigen::MatrixXd p_;  // chain kernel under pi
  Eigen::VectorXd rpi_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  Eigen::VectorXd x_;  // stationary vector of p_
  std::vector<double> row_buf_;
};

// Step-wise agent: learn from the reward earned entering obs, return the
// next action. The first call carries no pending transition.
class Agent {
 public:
  virtual ~Agent() = default;
  virtual int step(int obs, double reward) = 0;
  virtual double rho_hat() const { return 0.0; }  // model gain when available
  virtual const PolicyTable* policy() const { return nullptr; }
  virtual const ModelEstimate* model() const { return nullptr; }
};

std::unique_ptr<Agent> make_agent(const AgentConfig& cfg, int n_states,
                                  int n_actions, std::uint64_t seed);

// Lifelong run of one agent on one MDP; rho_star is left at zero for the
// caller to fill. keep_trace stores per-step rewards and rho_hat.
RegretTrace run_agent(const TabularMdp& mdp, int start,
                      const AgentConfig& cfg, long steps, std::uint64_t seed,
                      bool keep_trace = false);
// Same loop against a caller-owned agent, which keeps its final state.
RegretTrace run_agent(const TabularMdp& mdp, int start, Agent& agent,
                      long steps, std::uint64_t seed, bool keep_trace = false);

struct RhoLearnResult {
  PolicyTable policy;
  ModelEstimate model;
  RegretTrace trace;
};

RhoLearnResult rho_learning_on_policy(const EnvInstance& env, double epsilon,
                                      long steps, std::uint64_t seed);
RhoLearnResult rho_learning_off_policy(const EnvInstance& env, double epsilon,
                                       int B, long steps, std::uint64_t seed);

// n-step model-rollout target used by the nstep_td agent; exposed for the
// corridor oracle tests.
double model_nstep_target(const ModelEstimate& model,
                          const std::vector<double>& q, int n_actions, int s,
                          int a, int n, double gamma, Rng& rng);

}  // namespace mixrl
