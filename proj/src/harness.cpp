#include "mixrl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <stdexcept>

#include "mixrl/errors.hpp"
#include "mixrl/parallel.hpp"

namespace mixrl {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace

RegretTrace run_lifelong(const EnvInstance& env, const AgentConfig& cfg,
                         long steps, std::uint64_t seed, bool keep_trace,
                         double rho_star_override) {
  RegretTrace tr =
      run_agent(env.mdp, env.start_state, cfg, steps, seed, keep_trace);
  tr.rho_star =
      std::isnan(rho_star_override) ? env.rho_star() : rho_star_override;
  return tr;
}

const SweepCell& SweepResult::best_cell() const {
  if (best < 0 || best >= static_cast<int>(cells.size()))
    throw Error("SweepResult: no completed cells");
  return cells[static_cast<size_t>(best)];
}

SweepResult sweep(const EnvInstance& env, const std::vector<AgentConfig>& grid,
                  long steps, int n_seeds, std::uint64_t master_seed,
                  double time_budget_sec, int jobs) {
  if (grid.empty()) throw std::invalid_argument("sweep: empty config grid");
  if (n_seeds < 1) throw std::invalid_argument("sweep: n_seeds must be >= 1");
  if (steps < 1) throw std::invalid_argument("sweep: steps must be >= 1");
  for (const AgentConfig& cfg : grid) cfg.validate();

  auto t0 = std::chrono::steady_clock::now();
  SweepResult res;
  res.n_seeds = n_seeds;
  res.master_seed = master_seed;
  double rho_star = env.rho_star();  // solve once, before the fan-out

  // Work item i is (cell i / n_seeds, seed i % n_seeds). Each writes only its
  // own slot, so the outcome is the same for any thread count; exceptions and
  // budget overruns are resolved afterwards in item order.
  long total = static_cast<long>(grid.size()) * n_seeds;
  std::vector<double> regret(static_cast<size_t>(total), 0.0);
  std::vector<char> done(static_cast<size_t>(total), 0);
  std::vector<std::exception_ptr> errs(static_cast<size_t>(total));
  std::atomic<bool> out_of_time{false};
  parallel_for(total, jobs > 0 ? jobs : default_jobs(), [&](long i) {
    if (time_budget_sec > 0.0 &&
        (out_of_time.load(std::memory_order_relaxed) ||
         seconds_since(t0) > time_budget_sec)) {
      out_of_time.store(true, std::memory_order_relaxed);
      return;
    }
    size_t ui = static_cast<size_t>(i);
    try {
      RegretTrace tr = run_lifelong(env, grid[ui / n_seeds], steps,
                                    derive_seed(master_seed, i % n_seeds),
                                    false, rho_star);
      regret[ui] = tr.regret_per_step();
      done[ui] = 1;
    } catch (...) {
      errs[ui] = std::current_exception();
    }
  });

  for (size_t ci = 0; ci < grid.size(); ++ci) {
    SweepCell cell;
    cell.cfg = grid[ci];
    for (int k = 0; k < n_seeds; ++k) {
      size_t i = ci * static_cast<size_t>(n_seeds) + static_cast<size_t>(k);
      if (errs[i]) std::rethrow_exception(errs[i]);
      if (!done[i]) break;
      cell.regrets.push_back(regret[i]);
    }
    if (static_cast<int>(cell.regrets.size()) < n_seeds) {
      res.truncated = true;
      break;  // drop the incomplete cell and stop
    }
    double sum = 0.0;
    for (double r : cell.regrets) sum += r;
    cell.mean = sum / n_seeds;
    if (n_seeds > 1) {
      double ss = 0.0;
      for (double r : cell.regrets) ss += (r - cell.mean) * (r - cell.mean);
      cell.stddev = std::sqrt(ss / (n_seeds - 1));
    }
    res.cells.push_back(std::move(cell));
  }

  for (size_t i = 0; i < res.cells.size(); ++i)
    if (res.best < 0 || res.cells[i].mean < res.cells[res.best].mean)
      res.best = static_cast<int>(i);
  return res;
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw std::invalid_argument("linear_fit: length mismatch");
  if (x.size() < 2)
    throw std::invalid_argument("linear_fit: need at least 2 points");
  long n = static_cast<long>(x.size());
  double mx = 0.0, my = 0.0;
  for (long i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (long i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0)
    throw std::invalid_argument("linear_fit: degenerate x values");
  LinearFit fit;
  fit.n = n;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0.0, sst = 0.0;
  for (long i = 0; i < n; ++i) {
    double e = y[i] - (fit.intercept + fit.slope * x[i]);
    ssr += e * e;
    sst += (y[i] - my) * (y[i] - my);
  }
  fit.r2 = sst > 0.0 ? 1.0 - ssr / sst : 1.0;
  return fit;
}

std::string scale_quantity_name(ScaleQuantity q) {
  switch (q) {
    case ScaleQuantity::t_ret_exact: return "t_ret_exact";
    case ScaleQuantity::t_ret_empirical: return "t_ret_empirical";
    case ScaleQuantity::t_mix_exact: return "t_mix_exact";
    case ScaleQuantity::min_diameter: return "min_diameter";
  }
  throw std::invalid_argument("scale_quantity_name: bad enum value");
}

ScaleQuantity parse_scale_quantity(const std::string& name) {
  for (ScaleQuantity q :
       {ScaleQuantity::t_ret_exact, ScaleQuantity::t_ret_empirical,
        ScaleQuantity::t_mix_exact, ScaleQuantity::min_diameter})
    if (scale_quantity_name(q) == name) return q;
  throw std::invalid_argument("parse_scale_quantity: unknown quantity '" +
                              name + "'");
}

ScalingStudy mixing_scaling_study(const std::string& family,
                                  const ScalingSpec& spec,
                                  std::span<const double> nus,
                                  const ScalingConfig& cfg) {
  if (nus.size() < 4)
    throw std::invalid_argument(
        "mixing_scaling_study: need at least 4 axis points");
  if (!(cfg.epsilon > 0.0))
    throw std::invalid_argument("mixing_scaling_study: epsilon must be > 0");
  if (cfg.horizon < 1)
    throw std::invalid_argument("mixing_scaling_study: horizon must be >= 1");
  if (cfg.n_seeds < 1 || cfg.max_tracked < 1)
    throw std::invalid_argument(
        "mixing_scaling_study: n_seeds and max_tracked must be >= 1");

  // Identify the varied parameter for the axis label; several varied at once
  // fall back to nu itself.
  int varied = -1;
  bool multi = false;
  for (size_t i = 0; i < spec.delta_q.size(); ++i) {
    if (spec.delta_q[i] <= 0.0) continue;
    multi = varied >= 0;
    varied = static_cast<int>(i);
  }

  ScalingStudy study;
  study.family = family;
  study.axis_name = (varied >= 0 && !multi) ? spec.names[varied] : "nu";
  study.quantity = scale_quantity_name(cfg.quantity);
  study.epsilon = cfg.epsilon;
  study.relative = cfg.relative &&
                   (cfg.quantity == ScaleQuantity::t_ret_exact ||
                    cfg.quantity == ScaleQuantity::t_ret_empirical);

  // Axis points are independent work items: each builds its own environment
  // and runs under its own derived seeds. Collection afterwards keeps the
  // completed prefix so a budget overrun truncates exactly as a serial run.
  size_t n_pts = nus.size();
  std::vector<ScalingPoint> pts(n_pts);
  std::vector<char> done(n_pts, 0);
  std::vector<std::exception_ptr> errs(n_pts);
  std::atomic<bool> out_of_time{false};
  auto t0 = std::chrono::steady_clock::now();
  auto measure_point = [&](size_t idx) {
    double nu = nus[idx];
    EnvInstance env = scale(family, spec, nu, cfg.seed);
    ScalingPoint pt;
    pt.nu = nu;
    pt.axis = (varied >= 0 && !multi)
                  ? spec.q0[varied] + nu * spec.delta_q[varied]
                  : nu;
    pt.n_states = env.mdp.n_states;
    pt.tau = env.params.tau;
    pt.regions = static_cast<long>(env.region_map.regions.size());
    pt.env_id = env.env_id;

    const PolicyTable& pi =
        cfg.use_optimal_policy ? env.optimal_policy() : env.greedy;
    switch (cfg.quantity) {
      case ScaleQuantity::min_diameter: {
        pt.value = min_diameter(env.mdp);
        pt.worst = pt.value;
        break;
      }
      case ScaleQuantity::t_mix_exact: {
        MarkovChain chain = smooth_chain(induce_chain(env.mdp, pi));
        pt.value = static_cast<double>(
            exact_mixing_time(chain, cfg.epsilon, cfg.horizon));
        pt.worst = pt.value;
        break;
      }
      case ScaleQuantity::t_ret_exact:
      case ScaleQuantity::t_ret_empirical: {
        double eps_abs = cfg.epsilon;
        if (cfg.relative) {
          double rho = average_reward(env.mdp, pi);
          if (!(rho > 0.0))
            throw Error("mixing_scaling_study: policy gain is not positive "
                        "on " + env.env_id);
          eps_abs = cfg.epsilon * rho;
        }
        std::vector<double> eps{eps_abs};
        if (cfg.quantity == ScaleQuantity::t_ret_exact) {
          MixingReport rep =
              return_mixing_time_exact(env.mdp, pi, eps, cfg.horizon);
          pt.value = rep.mean_t[0];
          pt.worst = rep.max_t[0];
        } else {
          std::vector<double> means;
          double worst = 0.0;
          for (int k = 0; k < cfg.n_seeds; ++k) {
            MixingReport rep = return_mixing_time_empirical(
                env.mdp, pi, eps, cfg.max_tracked, cfg.horizon,
                derive_seed(derive_seed(cfg.seed, 17 + idx), k),
                env.start_state);
            means.push_back(rep.mean_t[0]);
            worst = std::max(worst, rep.max_t[0]);
          }
          double sum = 0.0;
          for (double m : means) sum += m;
          pt.value = sum / means.size();
          pt.worst = worst;
          if (means.size() > 1) {
            double ss = 0.0;
            for (double m : means) ss += (m - pt.value) * (m - pt.value);
            pt.stderr_ = std::sqrt(ss / (means.size() - 1)) /
                         std::sqrt(static_cast<double>(means.size()));
          }
        }
        break;
      }
    }
    double denom = static_cast<double>(pt.tau > 0 ? pt.tau : 1) *
                   static_cast<double>(pt.regions > 0 ? pt.regions : 1);
    pt.normalized = pt.value / denom;
    return pt;
  };

  parallel_for(static_cast<long>(n_pts),
               cfg.jobs > 0 ? cfg.jobs : default_jobs(), [&](long i) {
    if (cfg.time_budget_sec > 0.0 &&
        (out_of_time.load(std::memory_order_relaxed) ||
         seconds_since(t0) > cfg.time_budget_sec)) {
      out_of_time.store(true, std::memory_order_relaxed);
      return;
    }
    size_t idx = static_cast<size_t>(i);
    try {
      pts[idx] = measure_point(idx);
      done[idx] = 1;
    } catch (...) {
      errs[idx] = std::current_exception();
    }
  });

  for (size_t idx = 0; idx < n_pts; ++idx) {
    if (errs[idx]) std::rethrow_exception(errs[idx]);
    if (!done[idx]) {
      study.truncated = true;
      break;
    }
    study.points.push_back(std::move(pts[idx]));
  }

  if (study.points.size() >= 2) {
    std::vector<double> ax, val;
    for (const ScalingPoint& p : study.points) {
      ax.push_back(p.axis);
      val.push_back(p.value);
    }
    study.fit = linear_fit(ax, val);
    bool positive = true;
    for (double v : val) positive = positive && v > 0.0;
    if (positive) {
      std::vector<double> lx, ly;
      for (const ScalingPoint& p : study.points) {
        lx.push_back(std::log(static_cast<double>(p.n_states)));
        ly.push_back(std::log(p.value));
      }
      study.loglog_states = linear_fit(lx, ly);
    }
  }
  return study;
}

}  // namespace mixrl
