#include "mixrl/chain_analysis.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

#include "mixrl/sim.hpp"

namespace mixrl {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

double worst_row_tv(const RowMat& rows, const VectorXd& mu) {
  double worst = 0.0;
  for (int s = 0; s < rows.rows(); ++s) {
    double acc = 0.0;
    for (int j = 0; j < rows.cols(); ++j) acc += std::abs(rows(s, j) - mu(j));
    worst = std::max(worst, 0.5 * acc);
  }
  return worst;
}

std::vector<bool> region_mask(int n, const std::vector<int>& region,
                              const char* what) {
  if (region.empty())
    throw std::invalid_argument(std::string(what) + ": empty region");
  std::vector<bool> in(n, false);
  for (int s : region) {
    if (s < 0 || s >= n)
      throw std::invalid_argument(std::string(what) +
                                  ": state out of range: " + std::to_string(s));
    if (in[s])
      throw std::invalid_argument(std::string(what) +
                                  ": duplicate state: " + std::to_string(s));
    in[s] = true;
  }
  return in;
}

void aggregate_points(MixingReport& rep) {
  size_t ne = rep.epsilons.size();
  rep.mean_t.assign(ne, kNan);
  rep.max_t.assign(ne, kNan);
  rep.excluded = 0;
  for (size_t e = 0; e < ne; ++e) {
    double sum = 0.0, mx = 0.0;
    long kept = 0;
    for (const auto& pt : rep.points) {
      double v = pt.t[e];
      if (std::isnan(v)) {
        ++rep.excluded;
        continue;
      }
      sum += v;
      mx = std::max(mx, v);
      ++kept;
    }
    if (kept > 0) {
      rep.mean_t[e] = sum / kept;
      rep.max_t[e] = mx;
    }
  }
}

}  // namespace

std::string MixingReport::to_text() const {
  std::ostringstream ss;
  ss << "mixing report kind=" << kind << " horizon=" << horizon;
  if (kind == "return_exact" || kind == "return_empirical")
    ss << " rho=" << rho;
  ss << "\n";
  for (size_t e = 0; e < epsilons.size(); ++e) {
    ss << "  eps=" << epsilons[e];
    if (e < relative_errors.size()) ss << " rel=" << relative_errors[e];
    ss << " mean_t=" << mean_t[e] << " max_t=" << max_t[e] << "\n";
  }
  if (excluded > 0) ss << "  excluded point-eps pairs: " << excluded << "\n";
  return ss.str();
}

long exact_mixing_time(const MarkovChain& chain, double eps, long horizon_cap) {
  chain.validate();
  int n = chain.n_states;
  StationaryDistribution sd = steady_state(chain);
  VectorXd mu = Eigen::Map<const VectorXd>(sd.mu.data(), n);
  Eigen::Map<const RowMat> p(chain.p.data(), n, n);
  RowMat rows = RowMat::Identity(n, n);
  double last = kNan;
  for (long h = 0; h <= horizon_cap; ++h) {
    last = worst_row_tv(rows, mu);
    if (last <= eps + tol::kExact) return h;
    rows = rows * p;
  }
  throw HorizonError("exact_mixing_time: no h within cap satisfied the bound",
                     horizon_cap, last);
}

long cesaro_mixing_time(const MarkovChain& chain, double eps,
                        long horizon_cap) {
  chain.validate();
  int n = chain.n_states;
  StationaryDistribution sd = steady_state(chain);
  VectorXd mu = Eigen::Map<const VectorXd>(sd.mu.data(), n);
  Eigen::Map<const RowMat> p(chain.p.data(), n, n);
  RowMat rows = p;  // P^t starting at t=1
  RowMat acc = RowMat::Zero(n, n);
  double last = kNan;
  for (long h = 1; h <= horizon_cap; ++h) {
    acc += rows;
    RowMat avg = acc / static_cast<double>(h);
    last = worst_row_tv(avg, mu);
    if (last <= eps + tol::kExact) return h;
    rows = rows * p;
  }
  throw HorizonError("cesaro_mixing_time: no h within cap satisfied the bound",
                     horizon_cap, last);
}

MixingReport return_mixing_time_exact(const TabularMdp& mdp,
                                      const PolicyTable& pi,
                                      const std::vector<double>& epsilons,
                                      long horizon_cap) {
  if (epsilons.empty())
    throw std::invalid_argument("return_mixing_time_exact: no epsilons");
  MarkovChain chain = induce_chain(mdp, pi);
  std::vector<double> r_pi = policy_reward(mdp, pi);
  StationaryDistribution sd = steady_state(chain);
  int n = chain.n_states;
  double rho = 0.0;
  for (int s = 0; s < n; ++s) rho += sd.mu[s] * r_pi[s];

  SparseRows sp = SparseRows::from(chain.p.data(), n, n);
  std::vector<double> e = r_pi, nxt, cum(n, 0.0);
  size_t ne = epsilons.size();
  // last_viol[s*ne + k] = largest h where state s violated epsilon k.
  std::vector<long> last_viol(static_cast<size_t>(n) * ne, 0);
  for (long h = 1; h <= horizon_cap; ++h) {
    for (int s = 0; s < n; ++s) {
      cum[s] += e[s];
      double dev = std::abs(cum[s] / h - rho);
      for (size_t k = 0; k < ne; ++k)
        if (dev > epsilons[k] + tol::kExact)
          last_viol[static_cast<size_t>(s) * ne + k] = h;
    }
    if (h < horizon_cap) {
      sp.pull_back(e, nxt);
      e.swap(nxt);
    }
  }
  long worst_last = 0;
  for (long v : last_viol) worst_last = std::max(worst_last, v);
  if (worst_last == horizon_cap)
    throw HorizonError(
        "return_mixing_time_exact: still violating at the horizon cap",
        horizon_cap, static_cast<double>(worst_last));

  MixingReport rep;
  rep.kind = "return_exact";
  rep.epsilons = epsilons;
  rep.rho = rho;
  rep.horizon = horizon_cap;
  for (double epsv : epsilons)
    rep.relative_errors.push_back(rho != 0.0 ? epsv / std::abs(rho) : kInf);
  rep.points.resize(n);
  for (int s = 0; s < n; ++s) {
    rep.points[s].state = s;
    rep.points[s].t.resize(ne);
    for (size_t k = 0; k < ne; ++k)
      rep.points[s].t[k] = static_cast<double>(
          std::max<long>(1, last_viol[static_cast<size_t>(s) * ne + k] + 1));
  }
  aggregate_points(rep);
  return rep;
}

MixingReport return_mixing_time_empirical(const TabularMdp& mdp,
                                          const PolicyTable& pi,
                                          const std::vector<double>& epsilons,
                                          int max_tracked, long horizon,
                                          uint64_t seed, int start) {
  if (epsilons.empty())
    throw std::invalid_argument("return_mixing_time_empirical: no epsilons");
  if (max_tracked <= 0 || horizon <= 0)
    throw std::invalid_argument(
        "return_mixing_time_empirical: bad tracking budget or horizon");
  size_t ne = epsilons.size();

  // Rollout one: estimate the long-run rate.
  double rho_hat = 0.0;
  {
    MdpSim sim(mdp, start, derive_seed(seed, 1));
    Rng act_rng(seed, 2);
    double total = 0.0;
    for (long t = 0; t < horizon; ++t) {
      int a = sample_action(pi, sim.state(), act_rng);
      total += sim.step(a).reward;
    }
    rho_hat = total / horizon;
  }

  // Rollout two: reservoir of start points with online suffix scanning.
  struct Slot {
    int state = -1;
    long h = 0;
    double g = 0.0;
    std::vector<long> last_viol;
  };
  std::vector<Slot> slots;
  slots.reserve(max_tracked);
  MdpSim sim(mdp, start, derive_seed(seed, 3));
  Rng act_rng(seed, 4);
  Rng res_rng(seed, 5);
  for (long t = 1; t <= horizon; ++t) {
    int s_now = sim.state();
    if (static_cast<long>(slots.size()) < max_tracked) {
      slots.push_back({s_now, 0, 0.0, std::vector<long>(ne, 0)});
    } else if (res_rng.uniform() * t < max_tracked) {
      Slot& sl = slots[res_rng.uniform_int(max_tracked)];
      sl = {s_now, 0, 0.0, std::vector<long>(ne, 0)};
    }
    int a = sample_action(pi, s_now, act_rng);
    double r = sim.step(a).reward;
    for (Slot& sl : slots) {
      sl.h += 1;
      sl.g += r;
      double dev = std::abs(sl.g / sl.h - rho_hat);
      for (size_t k = 0; k < ne; ++k)
        if (dev > epsilons[k] + tol::kExact) sl.last_viol[k] = sl.h;
    }
  }

  MixingReport rep;
  rep.kind = "return_empirical";
  rep.epsilons = epsilons;
  rep.rho = rho_hat;
  rep.horizon = horizon;
  for (double epsv : epsilons)
    rep.relative_errors.push_back(rho_hat != 0.0 ? epsv / std::abs(rho_hat)
                                                 : kInf);
  for (const Slot& sl : slots) {
    MixingPoint pt;
    pt.state = sl.state;
    pt.t.resize(ne, kNan);
    for (size_t k = 0; k < ne; ++k) {
      // A point qualifies only if it stopped violating before its history
      // ended; h == 0 slots (admitted on the last step) never qualify.
      if (sl.h > 0 && sl.last_viol[k] < sl.h)
        pt.t[k] = static_cast<double>(std::max<long>(1, sl.last_viol[k] + 1));
    }
    rep.points.push_back(std::move(pt));
  }
  aggregate_points(rep);
  for (size_t k = 0; k < ne; ++k)
    if (std::isnan(rep.mean_t[k]))
      throw Error(
          "return_mixing_time_empirical: every tracked point still violated "
          "epsilon " +
          std::to_string(epsilons[k]) + " at the end of its history");
  return rep;
}

HittingTimes expected_hitting_times(const MarkovChain& chain) {
  chain.validate();
  int n = chain.n_states;
  HittingTimes ht;
  ht.n_states = n;
  ht.m.assign(static_cast<size_t>(n) * n, 0.0);
  if (n == 1) return ht;
  for (int target = 0; target < n; ++target) {
    // (I - Q) m = 1 over the states != target.
    MatrixXd a(n - 1, n - 1);
    std::vector<int> ids;
    ids.reserve(n - 1);
    for (int s = 0; s < n; ++s)
      if (s != target) ids.push_back(s);
    for (int i = 0; i < n - 1; ++i)
      for (int j = 0; j < n - 1; ++j)
        a(i, j) = (i == j ? 1.0 : 0.0) - chain.at(ids[i], ids[j]);
    VectorXd m = Eigen::PartialPivLU<MatrixXd>(a).solve(VectorXd::Ones(n - 1));
    double worst = 0.0;
    for (int i = 0; i < n - 1; ++i) {
      double acc = 1.0;
      for (int j = 0; j < n - 1; ++j) acc += chain.at(ids[i], ids[j]) * m(j);
      worst = std::max(worst, std::abs(m(i) - acc));
      if (m(i) < 0.0 || !std::isfinite(m(i)))
        throw SolverError("expected_hitting_times: target " +
                              std::to_string(target) + " looks unreachable",
                          m(i));
    }
    double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if (worst > 1e-8 * scale)
      throw SolverError("expected_hitting_times: first-step residual too large",
                        worst);
    for (int i = 0; i < n - 1; ++i)
      ht.m[static_cast<size_t>(target) * n + ids[i]] = m(i);
  }
  return ht;
}

std::string DiameterReport::to_text() const {
  std::ostringstream ss;
  ss << "policy_diameter=" << policy_diameter
     << " graph_diameter=" << graph_diameter;
  return ss.str();
}

DiameterReport diameter_report(const MarkovChain& chain) {
  DiameterReport rep;
  HittingTimes ht = expected_hitting_times(chain);
  int n = chain.n_states;
  for (int t = 0; t < n; ++t)
    for (int s = 0; s < n; ++s)
      if (s != t) rep.policy_diameter = std::max(rep.policy_diameter, ht.at(s, t));

  // Undirected support graph; BFS eccentricities.
  std::vector<std::vector<int>> adj(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && chain.at(i, j) + chain.at(j, i) > 0.0) adj[i].push_back(j);
  for (int s0 = 0; s0 < n; ++s0) {
    std::vector<long> dist(n, -1);
    std::queue<int> q;
    dist[s0] = 0;
    q.push(s0);
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (int v : adj[u])
        if (dist[v] < 0) {
          dist[v] = dist[u] + 1;
          q.push(v);
        }
    }
    for (int v = 0; v < n; ++v) {
      if (dist[v] < 0)
        throw Error("diameter_report: support graph is disconnected");
      rep.graph_diameter = std::max(rep.graph_diameter, dist[v]);
    }
  }
  return rep;
}

double min_diameter(const TabularMdp& mdp) {
  mdp.validate();
  int n = mdp.n_states, na = mdp.n_actions;
  SparseRows sp =
      SparseRows::from(mdp.t.data(), n * na, n);
  double worst = 0.0;
  std::vector<double> v(n), nv(n);
  for (int target = 0; target < n; ++target) {
    std::fill(v.begin(), v.end(), 0.0);
    long it = 0;
    for (; it < tol::kSspMaxIter; ++it) {
      double change = 0.0;
      for (int s = 0; s < n; ++s) {
        if (s == target) {
          nv[s] = 0.0;
          continue;
        }
        double best = kInf;
        for (int a = 0; a < na; ++a) {
          int row = s * na + a;
          double acc = 1.0;
          for (int k = sp.offs[row]; k < sp.offs[row + 1]; ++k)
            acc += sp.val[k] * v[sp.idx[k]];
          best = std::min(best, acc);
        }
        nv[s] = best;
        change = std::max(change, std::abs(nv[s] - v[s]));
      }
      v.swap(nv);
      if (change < tol::kSspTol) break;
    }
    if (it >= tol::kSspMaxIter)
      throw SolverError("min_diameter: value iteration did not converge for target " +
                            std::to_string(target),
                        kNan);
    for (int s = 0; s < n; ++s) worst = std::max(worst, v[s]);
  }
  return worst;
}

std::string BottleneckReport::to_text() const {
  std::ostringstream ss;
  ss << "mu_region=" << mu_region << " edge_flow=" << edge_flow
     << " ratio=" << ratio << " residence_analytic=" << residence_analytic
     << " boundary_size=" << boundary.size();
  return ss.str();
}

BottleneckReport bottleneck_ratio(const MarkovChain& chain,
                                  const StationaryDistribution& sd,
                                  const std::vector<int>& region) {
  int n = chain.n_states;
  if (static_cast<int>(sd.mu.size()) != n)
    throw std::invalid_argument("bottleneck_ratio: mu size mismatch");
  std::vector<bool> in = region_mask(n, region, "bottleneck_ratio");

  BottleneckReport rep;
  for (int s : region) {
    rep.mu_region += sd.mu[s];
    double exit = 0.0;
    for (int j = 0; j < n; ++j)
      if (!in[j]) exit += chain.at(s, j);
    rep.edge_flow += sd.mu[s] * exit;
    if (exit > 0.0) rep.boundary.push_back(s);
  }
  if (rep.mu_region <= 0.0)
    throw SolverError("bottleneck_ratio: region carries no stationary mass",
                      rep.mu_region);
  rep.ratio = rep.edge_flow / rep.mu_region;
  rep.residence_analytic = rep.ratio > 0.0 ? 1.0 / rep.ratio : kInf;
  return rep;
}

ResidenceStat residence_time_simulated(const MarkovChain& chain,
                                       const std::vector<int>& region,
                                       long steps, uint64_t seed) {
  chain.validate();
  int n = chain.n_states;
  std::vector<bool> in = region_mask(n, region, "residence_time_simulated");
  if (static_cast<int>(region.size()) == n)
    return {kInf, 0.0, 0};  // no exits exist

  long burn;
  try {
    burn = exact_mixing_time(chain, 0.25, 512);
  } catch (const Error&) {
    burn = steps / 10;
  }

  ChainSim sim(chain, 0, seed);
  for (long t = 0; t < burn; ++t) sim.step();

  double sum = 0.0, sumsq = 0.0;
  long count = 0, visits = 0;
  long current = -1;  // -1: outside; otherwise sojourn length so far
  bool inside = in[sim.state()];
  for (long t = 0; t < steps; ++t) {
    int s = sim.step();
    bool now = in[s];
    if (now) ++visits;
    if (now && !inside) {
      current = 1;  // entered
    } else if (now && inside) {
      if (current >= 0) ++current;
    } else if (!now && inside && current >= 0) {
      sum += current;
      sumsq += static_cast<double>(current) * current;
      ++count;
      current = -1;
    }
    inside = now;
  }
  if (count == 0)
    throw Error("residence_time_simulated: no completed sojourn (" +
                std::to_string(visits) + " in-region visits in " +
                std::to_string(steps) + " steps)");
  ResidenceStat st;
  st.count = count;
  st.mean = sum / count;
  double var = sumsq / count - st.mean * st.mean;
  st.se = std::sqrt(std::max(var, 0.0) / count);
  return st;
}

double spectral_gap(const MarkovChain& chain) {
  chain.validate();
  int n = chain.n_states;
  MatrixXd p(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) p(i, j) = chain.at(i, j);
  Eigen::EigenSolver<MatrixXd> es(p, false);
  if (es.info() != Eigen::Success)
    throw SolverError("spectral_gap: eigensolver failed", kNan);
  std::vector<double> mods(n);
  for (int i = 0; i < n; ++i) mods[i] = std::abs(es.eigenvalues()(i));
  std::sort(mods.begin(), mods.end(), std::greater<double>());
  return n >= 2 ? 1.0 - mods[1] : 1.0;
}

}  // namespace mixrl
