#include "mixrl/reinforce.hpp"

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>

#include "mixrl/errors.hpp"

namespace mixrl {

namespace {

Eigen::MatrixXd uniform_init(int rows, int cols, Rng& rng) {
  double scale = 1.0 / std::sqrt(static_cast<double>(cols));
  Eigen::MatrixXd m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i)
      m(i, j) = (2.0 * rng.uniform() - 1.0) * scale;
  return m;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& z) {
  Eigen::VectorXd p = (z.array() - z.maxCoeff()).exp();
  return p / p.sum();
}

// Reusable gradient accumulator; one instance serves a whole training run so
// the per-step path allocates nothing.
struct Backprop {
  Eigen::MatrixXd gw1, gw2, gw3;
  Eigen::VectorXd gb1, gb2, gb3;
  Eigen::VectorXd a1, h1, a2, h2, z, logp, p, dz, dh2, dh1;

  explicit Backprop(const MlpPolicy& pol)
      : gw1(pol.w1.rows(), pol.w1.cols()),
        gw2(pol.w2.rows(), pol.w2.cols()),
        gw3(pol.w3.rows(), pol.w3.cols()),
        gb1(pol.b1.size()),
        gb2(pol.b2.size()),
        gb3(pol.b3.size()) {
    zero();
  }

  void zero() {
    gw1.setZero();
    gw2.setZero();
    gw3.setZero();
    gb1.setZero();
    gb2.setZero();
    gb3.setZero();
  }

  // Adds the gradient of r * log pi(a|x) + beta * H(pi(.|x)) and returns
  // that step's objective value.
  double accumulate(const MlpPolicy& pol, const Eigen::VectorXd& x, int a,
                    double r, double beta) {
    a1.noalias() = pol.w1 * x;
    a1 += pol.b1;
    h1 = a1.cwiseMax(0.0);
    a2.noalias() = pol.w2 * h1;
    a2 += pol.b2;
    h2 = a2.cwiseMax(0.0);
    z.noalias() = pol.w3 * h2;
    z += pol.b3;
    double zmax = z.maxCoeff();
    double lse = zmax + std::log((z.array() - zmax).exp().sum());
    logp = z.array() - lse;
    p = logp.array().exp();
    double entropy = -p.dot(logp);

    // d/dz of r log p(a) is r (onehot(a) - p); d/dz of H is -p (log p + H).
    dz = -r * p;
    dz(a) += r;
    dz.array() -= beta * p.array() * (logp.array() + entropy);

    gw3.noalias() += dz * h2.transpose();
    gb3 += dz;
    dh2.noalias() = pol.w3.transpose() * dz;
    dh2.array() *= (a2.array() > 0.0).cast<double>();
    gw2.noalias() += dh2 * h1.transpose();
    gb2 += dh2;
    dh1.noalias() = pol.w2.transpose() * dh2;
    dh1.array() *= (a1.array() > 0.0).cast<double>();
    gw1.noalias() += dh1 * x.transpose();
    gb1 += dh1;

    return r * logp(a) + beta * entropy;
  }

  double norm() const {
    return std::sqrt(gw1.squaredNorm() + gw2.squaredNorm() +
                     gw3.squaredNorm() + gb1.squaredNorm() +
                     gb2.squaredNorm() + gb3.squaredNorm());
  }

  // theta += lr * clip(g).
  void ascend(MlpPolicy& pol, double lr, double clip_norm) const {
    double n = norm();
    double scale = n > clip_norm ? lr * clip_norm / n : lr;
    pol.w1 += scale * gw1;
    pol.b1 += scale * gb1;
    pol.w2 += scale * gw2;
    pol.b2 += scale * gb2;
    pol.w3 += scale * gw3;
    pol.b3 += scale * gb3;
  }
};

}  // namespace

MlpPolicy::MlpPolicy(int n_in, int n_hidden, int n_out, std::uint64_t seed) {
  if (n_in < 1 || n_hidden < 1 || n_out < 2)
    throw std::invalid_argument("MlpPolicy: bad layer sizes");
  Rng rng(seed);
  w1 = uniform_init(n_hidden, n_in, rng);
  w2 = uniform_init(n_hidden, n_hidden, rng);
  w3 = uniform_init(n_out, n_hidden, rng);
  b1 = Eigen::VectorXd::Zero(n_hidden);
  b2 = Eigen::VectorXd::Zero(n_hidden);
  b3 = Eigen::VectorXd::Zero(n_out);
}

Eigen::VectorXd MlpPolicy::probs(const Eigen::VectorXd& x) const {
  Eigen::VectorXd h1 = (w1 * x + b1).cwiseMax(0.0);
  Eigen::VectorXd h2 = (w2 * h1 + b2).cwiseMax(0.0);
  return softmax(w3 * h2 + b3);
}

int MlpPolicy::sample(const Eigen::VectorXd& x, Rng& rng) const {
  Eigen::VectorXd p = probs(x);
  return rng.categorical(std::span<const double>(p.data(), p.size()));
}

long MlpPolicy::n_params() const {
  return w1.size() + w2.size() + w3.size() + b1.size() + b2.size() + b3.size();
}

Eigen::VectorXd MlpPolicy::flatten() const {
  Eigen::VectorXd theta(n_params());
  long at = 0;
  auto put = [&](const double* data, long n) {
    theta.segment(at, n) = Eigen::Map<const Eigen::VectorXd>(data, n);
    at += n;
  };
  put(w1.data(), w1.size());
  put(b1.data(), b1.size());
  put(w2.data(), w2.size());
  put(b2.data(), b2.size());
  put(w3.data(), w3.size());
  put(b3.data(), b3.size());
  return theta;
}

void MlpPolicy::load(const Eigen::VectorXd& theta) {
  if (theta.size() != n_params())
    throw std::invalid_argument("MlpPolicy::load: size mismatch");
  long at = 0;
  auto take = [&](double* data, long n) {
    Eigen::Map<Eigen::VectorXd>(data, n) = theta.segment(at, n);
    at += n;
  };
  take(w1.data(), w1.size());
  take(b1.data(), b1.size());
  take(w2.data(), w2.size());
  take(b2.data(), b2.size());
  take(w3.data(), w3.size());
  take(b3.data(), b3.size());
}

bool MlpPolicy::finite() const {
  return w1.allFinite() && w2.allFinite() && w3.allFinite() &&
         b1.allFinite() && b2.allFinite() && b3.allFinite();
}

void ReinforceConfig::validate() const {
  if (hidden < 1)
    throw std::invalid_argument("ReinforceConfig: hidden must be >= 1");
  if (!(lr > 0.0))
    throw std::invalid_argument("ReinforceConfig: lr must be > 0");
  if (entropy_coef < 0.0)
    throw std::invalid_argument("ReinforceConfig: entropy_coef must be >= 0");
  if (!(clip_norm > 0.0))
    throw std::invalid_argument("ReinforceConfig: clip_norm must be > 0");
}

double surrogate(const MlpPolicy& pol, const EpisodeBatch& batch,
                 double beta) {
  double total = 0.0;
  for (size_t t = 0; t < batch.size(); ++t) {
    Eigen::VectorXd h1 = (pol.w1 * batch.obs[t] + pol.b1).cwiseMax(0.0);
    Eigen::VectorXd h2 = (pol.w2 * h1 + pol.b2).cwiseMax(0.0);
    Eigen::VectorXd z = pol.w3 * h2 + pol.b3;
    double zmax = z.maxCoeff();
    double lse = zmax + std::log((z.array() - zmax).exp().sum());
    Eigen::VectorXd logp = z.array() - lse;
    Eigen::VectorXd p = logp.array().exp();
    total += batch.rewards[t] * logp(batch.actions[t]) - beta * p.dot(logp);
  }
  return total;
}

Eigen::VectorXd surrogate_grad(const MlpPolicy& pol, const EpisodeBatch& batch,
                               double beta) {
  Backprop bp(pol);
  for (size_t t = 0; t < batch.size(); ++t)
    bp.accumulate(pol, batch.obs[t], batch.actions[t], batch.rewards[t], beta);
  Eigen::VectorXd g(pol.n_params());
  long at = 0;
  auto put = [&](const double* data, long n) {
    g.segment(at, n) = Eigen::Map<const Eigen::VectorXd>(data, n);
    at += n;
  };
  put(bp.gw1.data(), bp.gw1.size());
  put(bp.gb1.data(), bp.gb1.size());
  put(bp.gw2.data(), bp.gw2.size());
  put(bp.gb2.data(), bp.gb2.size());
  put(bp.gw3.data(), bp.gw3.size());
  put(bp.gb3.data(), bp.gb3.size());
  return g;
}

ReinforceResult train_reinforce(TaskGridSim& sim, const ReinforceConfig& cfg,
                                long total_steps) {
  cfg.validate();
  if (total_steps < 1)
    throw std::invalid_argument("train_reinforce: total_steps must be >= 1");
  ReinforceResult res{MlpPolicy(sim.feature_dim(), cfg.hidden,
                                sim.n_actions(), derive_seed(cfg.seed, 0))};
  Rng act_rng(derive_seed(cfg.seed, 1));
  Backprop bp(res.policy);
  EpisodeBatch ep;  // only filled in episodic mode
  Eigen::VectorXd x(sim.feature_dim());
  double ep_reward = 0.0;
  long ep_len = 0;
  for (long t = 0; t < total_steps; ++t) {
    sim.features(x.data());
    int a = res.policy.sample(x, act_rng);
    TaskGridSim::Step st = sim.step(a);
    ep_reward += st.reward;
    ++ep_len;
    if (cfg.episodic) {
      ep.obs.push_back(x);
      ep.actions.push_back(a);
      ep.rewards.push_back(st.reward);
    } else {
      bp.zero();
      double loss = bp.accumulate(res.policy, x, a, st.reward,
                                  cfg.entropy_coef);
      if (!std::isfinite(loss))
        throw Error("reinforce: non-finite loss at step " + std::to_string(t));
      bp.ascend(res.policy, cfg.lr, cfg.clip_norm);
      ++res.updates;
    }
    if (st.episode_end) {
      if (cfg.episodic) {
        bp.zero();
        double loss = 0.0;
        for (size_t k = 0; k < ep.size(); ++k)
          loss += bp.accumulate(res.policy, ep.obs[k], ep.actions[k],
                                ep.rewards[k], cfg.entropy_coef);
        if (!std::isfinite(loss))
          throw Error("reinforce: non-finite loss at step " +
                      std::to_string(t));
        bp.ascend(res.policy, cfg.lr, cfg.clip_norm);
        ++res.updates;
        ep.clear();
      }
      res.episode_rates.push_back(ep_reward / ep_len);
      ++res.episodes;
      ep_reward = 0.0;
      ep_len = 0;
    }
  }
  if (!res.policy.finite())
    throw Error("reinforce: non-finite parameters at step " +
                std::to_string(total_steps - 1));
  return res;
}

double evaluate_reward_rate(const MlpPolicy& pol, int dim, int n_tasks,
                            long tau, std::uint64_t env_seed, int sample_tasks,
                            long steps_per_task, std::uint64_t eval_seed) {
  if (sample_tasks < 1)
    throw std::invalid_argument("evaluate_reward_rate: sample_tasks >= 1");
  if (steps_per_task < 1)
    throw std::invalid_argument("evaluate_reward_rate: steps_per_task >= 1");
  TaskGridSim sim(dim, n_tasks, tau, env_seed);
  std::vector<int> tasks(n_tasks);
  for (int z = 0; z < n_tasks; ++z) tasks[z] = z;
  int n_eval = std::min(sample_tasks, n_tasks);
  Rng pick(derive_seed(eval_seed, 0));
  for (int i = 0; i < n_eval; ++i) {
    int j = i + pick.uniform_int(n_tasks - i);
    std::swap(tasks[i], tasks[j]);
  }
  Eigen::VectorXd x(sim.feature_dim());
  double total = 0.0;
  for (int i = 0; i < n_eval; ++i) {
    sim.force_task(tasks[i]);
    Rng arng(derive_seed(eval_seed, 1000 + tasks[i]));
    for (long t = 0; t < steps_per_task; ++t) {
      sim.features(x.data());
      total += sim.step(pol.sample(x, arng)).reward;
    }
  }
  return total / (static_cast<double>(n_eval) * steps_per_task);
}

}  // namespace mixrl
