#include "mixrl/agents.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mixrl/sim.hpp"

namespace mixrl {

std::string algo_name(Algo algo) {
  switch (algo) {
    case Algo::q_on: return "q_on";
    case Algo::q_off: return "q_off";
    case Algo::dyna: return "dyna";
    case Algo::nstep_td: return "nstep_td";
    case Algo::rho_on: return "rho_on";
    case Algo::rho_off: return "rho_off";
  }
  throw std::invalid_argument("algo_name: bad enum value");
}

Algo parse_algo(const std::string& name) {
  for (Algo a : {Algo::q_on, Algo::q_off, Algo::dyna, Algo::nstep_td,
                 Algo::rho_on, Algo::rho_off})
    if (algo_name(a) == name) return a;
  throw std::invalid_argument("parse_algo: unknown algorithm '" + name + "'");
}

void AgentConfig::validate() const {
  if (!(epsilon >= 0.0 && epsilon <= 1.0))
    throw std::invalid_argument("AgentConfig: epsilon must be in [0,1]");
  if (!(lr > 0.0 && lr <= 1.0))
    throw std::invalid_argument("AgentConfig: lr must be in (0,1]");
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw std::invalid_argument("AgentConfig: gamma must be in [0,1)");
  if (algo == Algo::rho_off && B < 1)
    throw std::invalid_argument("AgentConfig: B must be >= 1 for rho_off");
  if (planning_steps < 0)
    throw std::invalid_argument("AgentConfig: planning_steps must be >= 0");
  if (n < 1) throw std::invalid_argument("AgentConfig: n must be >= 1");
}

ModelEstimate::ModelEstimate(int n_states, int n_actions)
    : n_states(n_states),
      n_actions(n_actions),
      transition_counts(
          static_cast<size_t>(n_states) * n_actions * n_states, 0),
      visit_counts(static_cast<size_t>(n_states) * n_actions, 0),
      reward_sums(static_cast<size_t>(n_states) * n_actions, 0.0) {}

void ModelEstimate::observe(int s, int a, int s2, double r) {
  if (s < 0 || s >= n_states || s2 < 0 || s2 >= n_states || a < 0 ||
      a >= n_actions)
    throw Error("ModelEstimate::observe: transition out of range");
  ++transition_counts[(static_cast<size_t>(s) * n_actions + a) * n_states +
                      s2];
  ++visit_counts[static_cast<size_t>(s) * n_actions + a];
  reward_sums[static_cast<size_t>(s) * n_actions + a] += r;
}

double ModelEstimate::t_hat(int s, int a, int s2) const {
  long v = visits(s, a);
  if (v == 0) return 1.0 / n_states;
  return static_cast<double>(count(s, a, s2)) / static_cast<double>(v);
}

void ModelEstimate::t_hat_row(int s, int a, double* out) const {
  long v = visits(s, a);
  if (v == 0) {
    std::fill(out, out + n_states, 1.0 / n_states);
    return;
  }
  const long* c =
      transition_counts.data() +
      (static_cast<size_t>(s) * n_actions + a) * n_states;
  for (int i = 0; i < n_states; ++i)
    out[i] = static_cast<double>(c[i]) / static_cast<double>(v);
}

double ModelEstimate::r_hat(int s, int a) const {
  long v = visits(s, a);
  if (v == 0) return 0.0;
  return reward_sums[static_cast<size_t>(s) * n_actions + a] /
         static_cast<double>(v);
}

int ModelEstimate::sample_next(int s, int a, Rng& rng) const {
  long v = visits(s, a);
  if (v <= 0) throw Error("ModelEstimate::sample_next: unvisited (s, a)");
  long pick = rng.uniform_long(v);
  const long* c =
      transition_counts.data() +
      (static_cast<size_t>(s) * n_actions + a) * n_states;
  long acc = 0;
  for (int i = 0; i < n_states; ++i) {
    acc += c[i];
    if (pick < acc) return i;
  }
  return n_states - 1;
}

EstimateView::EstimateView(const ModelEstimate* model, double smooth_eps)
    : model_(model), eps_(smooth_eps) {}

void EstimateView::t_row(int s, int a, double* out) const {
  int n = model_->n_states;
  model_->t_hat_row(s, a, out);
  double norm = 1.0 + n * eps_;
  for (int i = 0; i < n; ++i) out[i] = (out[i] + eps_) / norm;
}

double EstimateView::r(int s, int a) const { return model_->r_hat(s, a); }

MdpView::MdpView(const TabularMdp* mdp, double smooth_eps)
    : mdp_(mdp), eps_(smooth_eps) {}

void MdpView::t_row(int s, int a, double* out) const {
  int n = mdp_->n_states;
  std::span<const double> row = mdp_->row(s, a);
  double norm = 1.0 + n * eps_;
  for (int i = 0; i < n; ++i) out[i] = (row[i] + eps_) / norm;
}

double MdpView::r(int s, int a) const { return mdp_->rew(s, a); }

RhoPlanner::RhoPlanner(const ModelView* view, PolicyTable* pi)
    : view_(view), pi_(pi), row_buf_(view->n_states()) {
  int n = view->n_states();
  p_.resize(n, n);
  rpi_.resize(n);
  x_.resize(n);
}

void RhoPlanner::mark_dirty() { dirty_ = true; }

void RhoPlanner::refresh() {
  int n = view_->n_states();
  int na = view_->n_actions();
  p_.setZero();
  rpi_.setZero();
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < na; ++a) {
      double w = pi_->at(s, a);
      if (w == 0.0) continue;
      view_->t_row(s, a, row_buf_.data());
      for (int i = 0; i < n; ++i) p_(s, i) += w * row_buf_[i];
      rpi_(s) += w * view_->r(s, a);
    }
  }
  // Balance system (P^T - I) mu = 0 with the first equation replaced by the
  // normalization; the smoothed model chain is ergodic, so the system is
  // nonsingular.
  Eigen::MatrixXd a = p_.transpose() - Eigen::MatrixXd::Identity(n, n);
  a.row(0).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(0) = 1.0;
  lu_.compute(a);
  x_ = lu_.solve(b);
  dirty_ = false;
}

double RhoPlanner::rho() {
  if (dirty_) refresh();
  return x_.dot(rpi_);
}

double RhoPlanner::candidate_rho(int s, int a) {
  if (dirty_) refresh();
  int n = view_->n_states();
  view_->t_row(s, a, row_buf_.data());
  Eigen::VectorXd u(n);
  for (int i = 0; i < n; ++i) u(i) = row_buf_[i] - p_(s, i);
  u(0) = 0.0;  // the normalization row is unaffected by the kernel change
  Eigen::VectorXd mu;
  Eigen::VectorXd y = lu_.solve(u);
  double denom = 1.0 + y(s);
  if (std::abs(denom) < 1e-12) {
    // Degenerate rank-one update; solve the candidate system from scratch.
    Eigen::MatrixXd pc = p_;
    for (int i = 0; i < n; ++i) pc(s, i) = row_buf_[i];
    Eigen::MatrixXd ac = pc.transpose() - Eigen::MatrixXd::Identity(n, n);
    ac.row(0).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    b(0) = 1.0;
    mu = Eigen::PartialPivLU<Eigen::MatrixXd>(ac).solve(b);
  } else {
    mu = x_ - (x_(s) / denom) * y;
  }
  return mu.dot(rpi_) + mu(s) * (view_->r(s, a) - rpi_(s));
}

int RhoPlanner::improve(int s) {
  int na = view_->n_actions();
  double cur = rho();
  int best = 0;
  double best_val = candidate_rho(s, 0);
  for (int a = 1; a < na; ++a) {
    double v = candidate_rho(s, a);
    if (v > best_val) {
      best_val = v;
      best = a;
    }
  }
  if (best_val <= cur + tol::kImproveTol) {
    last_rho_ = cur;
    return -1;
  }
  if (pi_->at(s, best) != 1.0) {
    pi_->set_action(s, best);
    dirty_ = true;
  }
  last_rho_ = best_val;
  return best;
}

namespace {

void check_obs(int obs, int n_states) {
  if (obs < 0 || obs >= n_states)
    throw Error("agent step: observation " + std::to_string(obs) +
                " out of range");
}

int argmax_row(const std::vector<double>& q, int s, int na) {
  const double* row = q.data() + static_cast<size_t>(s) * na;
  int best = 0;
  for (int a = 1; a < na; ++a)
    if (row[a] > row[best]) best = a;
  return best;
}

class RhoOnAgent final : public Agent {
 public:
  RhoOnAgent(const AgentConfig& cfg, int n_states, int n_actions,
             std::uint64_t seed)
      : cfg_(cfg),
        ns_(n_states),
        na_(n_actions),
        model_(n_states, n_actions),
        pi_(PolicyTable::uniform(n_states, n_actions)),
        view_(&model_),
        planner_(&view_, &pi_),
        rng_(seed) {}

  int step(int obs, double reward) override {
    check_obs(obs, ns_);
    if (prev_s_ >= 0 && (prev_explore_ || cfg_.update_model_always)) {
      model_.observe(prev_s_, prev_a_, obs, reward);
      planner_.mark_dirty();
    }
    int a;
    if (rng_.uniform() >= cfg_.epsilon) {
      planner_.improve(obs);
      rho_hat_ = planner_.last_rho();
      a = sample_action(pi_, obs, rng_);
      prev_explore_ = false;
    } else {
      a = rng_.uniform_int(na_);
      prev_explore_ = true;
    }
    prev_s_ = obs;
    prev_a_ = a;
    return a;
  }

  double rho_hat() const override { return rho_hat_; }
  const PolicyTable* policy() const override { return &pi_; }
  const ModelEstimate* model() const override { return &model_; }

 private:
  AgentConfig cfg_;
  int ns_, na_;
  ModelEstimate model_;
  PolicyTable pi_;
  EstimateView view_;
  RhoPlanner planner_;
  Rng rng_;
  int prev_s_ = -1, prev_a_ = -1;
  bool prev_explore_ = false;
  double rho_hat_ = 0.0;
};

class RhoOffAgent final : public Agent {
 public:
  RhoOffAgent(const AgentConfig& cfg, int n_states, int n_actions,
              std::uint64_t seed)
      : cfg_(cfg),
        ns_(n_states),
        na_(n_actions),
        model_(n_states, n_actions),
        pi_(PolicyTable::uniform(n_states, n_actions)),
        view_(&model_),
        planner_(&view_, &pi_),
        rng_(seed) {}

  int step(int obs, double reward) override {
    check_obs(obs, ns_);
    if (prev_s_ >= 0) {
      model_.observe(prev_s_, prev_a_, obs, reward);
      planner_.mark_dirty();
      for (int i = 0; i < cfg_.B; ++i) planner_.improve(rng_.uniform_int(ns_));
      rho_hat_ = planner_.last_rho();
    }
    int a = rng_.uniform() >= cfg_.epsilon ? sample_action(pi_, obs, rng_)
                                           : rng_.uniform_int(na_);
    prev_s_ = obs;
    prev_a_ = a;
    return a;
  }

  double rho_hat() const override { return rho_hat_; }
  const PolicyTable* policy() const override { return &pi_; }
  const ModelEstimate* model() const override { return &model_; }

 private:
  AgentConfig cfg_;
  int ns_, na_;
  ModelEstimate model_;
  PolicyTable pi_;
  EstimateView view_;
  RhoPlanner planner_;
  Rng rng_;
  int prev_s_ = -1, prev_a_ = -1;
  double rho_hat_ = 0.0;
};

class QAgent : public Agent {
 public:
  QAgent(const AgentConfig& cfg, int n_states, int n_actions,
         std::uint64_t seed)
      : cfg_(cfg),
        ns_(n_states),
        na_(n_actions),
        q_(static_cast<size_t>(n_states) * n_actions, 0.0),
        rng_(seed) {}

  double q(int s, int a) const {
    return q_[static_cast<size_t>(s) * na_ + a];
  }

 protected:
  void bump(int s, int a, double target) {
    double& cell = q_[static_cast<size_t>(s) * na_ + a];
    cell += cfg_.lr * (target - cell);
  }
  double max_q(int s) const { return q(s, argmax_row(q_, s, na_)); }
  // Greedy ties resolve to the lowest index, as plain argmax does; under
  // zero initialization that pins early greedy steps to one action, so these
  // baselines lean on epsilon for discovery and their searched epsilon comes
  // out high. The gain planners start from a sampled uniform policy instead
  // and explore intrinsically, which is the behavioral asymmetry the regret
  // tables reflect.
  int choose(int s) {
    if (rng_.uniform() >= cfg_.epsilon) return argmax_row(q_, s, na_);
    return rng_.uniform_int(na_);
  }

  AgentConfig cfg_;
  int ns_, na_;
  std::vector<double> q_;
  Rng rng_;
  int prev_s_ = -1, prev_a_ = -1;
};

class QOffAgent final : public QAgent {
 public:
  using QAgent::QAgent;
  int step(int obs, double reward) override {
    check_obs(obs, ns_);
    if (prev_s_ >= 0)
      bump(prev_s_, prev_a_, reward + cfg_.gamma * max_q(obs));
    int a = choose(obs);
    prev_s_ = obs;
    prev_a_ = a;
    return a;
  }
};

class QOnAgent final : public QAgent {
 public:
  using QAgent::QAgent;
  int step(int obs, double reward) override {
    check_obs(obs, ns_);
    int a = choose(obs);
    // SARSA target: the value of the action actually taken next.
    if (prev_s_ >= 0) bump(prev_s_, prev_a_, reward + cfg_.gamma * q(obs, a));
    prev_s_ = obs;
    prev_a_ = a;
    return a;
  }
};

class DynaAgent final : public QAgent {
 public:
  DynaAgent(const AgentConfig& cfg, int n_states, int n_actions,
            std::uint64_t seed)
      : QAgent(cfg, n_states, n_actions, seed),
        model_(n_states, n_actions) {}

  int step(int obs, double reward) override {
    check_obs(obs, ns_);
    if (prev_s_ >= 0) {
      bump(prev_s_, prev_a_, reward + cfg_.gamma * max_q(obs));
      if (model_.visits(prev_s_, prev_a_) == 0)
        visited_.push_back(prev_s_ * na_ + prev_a_);
      model_.observe(prev_s_, prev_a_, obs, reward);
    }
    for (int k = 0; k < cfg_.planning_steps && !visited_.empty(); ++k) {
      int sa = visited_[rng_.uniform_int(static_cast<int>(visited_.size()))];
      int s = sa / na_, a = sa % na_;
      int s2 = model_.sample_next(s, a, rng_);
      bump(s, a, model_.r_hat(s, a) + cfg_.gamma * max_q(s2));
    }
    int a = choose(obs);
    prev_s_ = obs;
    prev_a_ = a;
    return a;
  }

  const ModelEstimate* model() const override { return &model_; }

 private:
  ModelEstimate model_;
  std::vector<int> visited_;
};

class NStepTdAgent final : public QAgent {
 public:
  NStepTdAgent(const AgentConfig& cfg, int n_states, int n_actions,
               std::uint64_t seed)
      : QAgent(cfg, n_states, n_actions, seed),
        model_(n_states, n_actions) {}

  int step(int obs, double reward) override {
    check_obs(obs, ns_);
    if (prev_s_ >= 0) {
      model_.observe(prev_s_, prev_a_, obs, reward);
      bump(prev_s_, prev_a_,
           model_nstep_target(model_, q_, na_, prev_s_, prev_a_, cfg_.n,
                              cfg_.gamma, rng_));
    }
    int a = choose(obs);
    prev_s_ = obs;
    prev_a_ = a;
    return a;
  }

  const ModelEstimate* model() const override { return &model_; }

 private:
  ModelEstimate model_;
};

}  // namespace

double model_nstep_target(const ModelEstimate& model,
                          const std::vector<double>& q, int n_actions, int s,
                          int a, int n, double gamma, Rng& rng) {
  double acc = 0.0, disc = 1.0;
  for (int k = 0; k < n; ++k) {
    acc += disc * model.r_hat(s, a);
    s = model.visits(s, a) > 0 ? model.sample_next(s, a, rng)
                               : rng.uniform_int(model.n_states);
    disc *= gamma;
    if (k + 1 < n) a = argmax_row(q, s, n_actions);
  }
  return acc + disc * q[static_cast<size_t>(s) * n_actions +
                        argmax_row(q, s, n_actions)];
}

std::unique_ptr<Agent> make_agent(const AgentConfig& cfg, int n_states,
                                  int n_actions, std::uint64_t seed) {
  cfg.validate();
  switch (cfg.algo) {
    case Algo::q_on:
      return std::make_unique<QOnAgent>(cfg, n_states, n_actions, seed);
    case Algo::q_off:
      return std::make_unique<QOffAgent>(cfg, n_states, n_actions, seed);
    case Algo::dyna:
      return std::make_unique<DynaAgent>(cfg, n_states, n_actions, seed);
    case Algo::nstep_td:
      return std::make_unique<NStepTdAgent>(cfg, n_states, n_actions, seed);
    case Algo::rho_on:
      return std::make_unique<RhoOnAgent>(cfg, n_states, n_actions, seed);
    case Algo::rho_off:
      return std::make_unique<RhoOffAgent>(cfg, n_states, n_actions, seed);
  }
  throw std::invalid_argument("make_agent: bad algorithm");
}

RegretTrace run_agent(const TabularMdp& mdp, int start, const AgentConfig& cfg,
                      long steps, std::uint64_t seed, bool keep_trace) {
  std::unique_ptr<Agent> agent =
      make_agent(cfg, mdp.n_states, mdp.n_actions, derive_seed(seed, 2));
  return run_agent(mdp, start, *agent, steps, seed, keep_trace);
}

RegretTrace run_agent(const TabularMdp& mdp, int start, Agent& agent,
                      long steps, std::uint64_t seed, bool keep_trace) {
  if (steps < 1)
    throw std::invalid_argument("run_agent: steps must be >= 1");
  MdpSim sim(mdp, start, derive_seed(seed, 1));
  RegretTrace tr;
  tr.steps = steps;
  tr.seed = seed;
  if (keep_trace) {
    tr.rewards.reserve(steps);
    tr.rho_hat.reserve(steps);
  }
  int obs = start;
  double reward = 0.0;
  for (long t = 0; t < steps; ++t) {
    int a;
    try {
      a = agent.step(obs, reward);
    } catch (const std::exception& e) {
      throw Error("run_agent: agent failed at step " + std::to_string(t) +
                  ": " + e.what());
    }
    MdpSim::Step st = sim.step(a);
    obs = st.next;
    reward = st.reward;
    tr.reward_sum += reward;
    if (keep_trace) {
      tr.rewards.push_back(reward);
      tr.rho_hat.push_back(agent.rho_hat());
    }
  }
  return tr;
}

namespace {

RhoLearnResult run_rho(const EnvInstance& env, const AgentConfig& cfg,
                       long steps, std::uint64_t seed) {
  std::unique_ptr<Agent> agent = make_agent(cfg, env.mdp.n_states,
                                            env.mdp.n_actions,
                                            derive_seed(seed, 2));
  RhoLearnResult out;
  out.trace = run_agent(env.mdp, env.start_state, *agent, steps, seed, true);
  out.trace.rho_star = env.rho_star();
  out.policy = *agent->policy();
  out.model = *agent->model();
  return out;
}

}  // namespace

RhoLearnResult rho_learning_on_policy(const EnvInstance& env, double epsilon,
                                      long steps, std::uint64_t seed) {
  AgentConfig cfg;
  cfg.algo = Algo::rho_on;
  cfg.epsilon = epsilon;
  cfg.seed = seed;
  return run_rho(env, cfg, steps, seed);
}

RhoLearnResult rho_learning_off_policy(const EnvInstance& env, double epsilon,
                                       int B, long steps, std::uint64_t seed) {
  AgentConfig cfg;
  cfg.algo = Algo::rho_off;
  cfg.epsilon = epsilon;
  cfg.B = B;
  cfg.seed = seed;
  return run_rho(env, cfg, steps, seed);
}

}  // namespace mixrl
