// mixrl command line front end. Every subcommand writes plot-ready CSV plus
// a JSON run manifest; one master seed pins the whole pipeline.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mixrl/agents.hpp"
#include "mixrl/chain_analysis.hpp"
#include "mixrl/csv.hpp"
#include "mixrl/envs.hpp"
#include "mixrl/errors.hpp"
#include "mixrl/harness.hpp"
#include "mixrl/mdp.hpp"
#include "mixrl/mdp_io.hpp"
#include "mixrl/rng.hpp"

namespace {

using json = nlohmann::json;
using namespace mixrl;

constexpr const char* kTool = "mixrl";
constexpr const char* kVersion = "0.1.0";
constexpr const char* kManifestSchema = "mixrl manifest v1";
constexpr const char* kEnvMagic = "mixrl env v1";
constexpr const char* kMdpMagic = "mixrl mdp v1";

std::string family_name(EnvFamily f) {
  switch (f) {
    case EnvFamily::goal_grid: return "goal_grid";
    case EnvFamily::rooms: return "rooms";
    case EnvFamily::cyclic_rooms: return "cyclic_rooms";
    case EnvFamily::task_grid: return "task_grid";
  }
  throw Error("unknown env family");
}

EnvFamily parse_family(const std::string& name) {
  if (name == "goal_grid") return EnvFamily::goal_grid;
  if (name == "rooms") return EnvFamily::rooms;
  if (name == "cyclic_rooms") return EnvFamily::cyclic_rooms;
  if (name == "task_grid") return EnvFamily::task_grid;
  throw std::invalid_argument("unknown env family: " + name);
}

// ---------------------------------------------------------------- env files

void save_env(const EnvInstance& env, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open env file for writing: " + path);
  const EnvParams& p = env.params;
  out << kEnvMagic << "\n";
  out << "id " << env.env_id << "\n";
  out << "family " << family_name(p.family) << "\n";
  out << "kind " << rooms_kind_name(p.kind) << "\n";
  out << "d " << p.d << "\n";
  out << "N " << p.N << "\n";
  out << "dim " << p.dim << "\n";
  out << "n_tasks " << p.n_tasks << "\n";
  out << "tau " << p.tau << "\n";
  out << "c " << fmt_double(p.c) << "\n";
  out << "x " << fmt_double(p.x) << "\n";
  out << "seed " << p.seed << "\n";
  out << "start " << env.start_state << "\n";
  const std::vector<int>& tos = env.region_map.task_of_state;
  out << "task_of_state " << tos.size();
  for (int t : tos) out << " " << t;
  out << "\n";
  out << "mdp\n";
  save_mdp(env.mdp, out);
  out << "greedy\n";
  save_policy(env.greedy, out);
  out << "end\n";
  if (!out) throw Error("write failed: " + path);
}

void expect_tok(std::istream& in, const std::string& want) {
  std::string tok;
  in >> tok;
  if (tok != want)
    throw Error("env file: expected '" + want + "', got '" + tok + "'");
}

EnvInstance load_env(std::istream& in) {
  EnvInstance env;
  std::string tok;
  expect_tok(in, "id");
  in >> env.env_id;
  expect_tok(in, "family");
  in >> tok;
  env.params.family = parse_family(tok);
  expect_tok(in, "kind");
  in >> tok;
  env.params.kind = parse_rooms_kind(tok);
  expect_tok(in, "d");
  in >> env.params.d;
  expect_tok(in, "N");
  in >> env.params.N;
  expect_tok(in, "dim");
  in >> env.params.dim;
  expect_tok(in, "n_tasks");
  in >> env.params.n_tasks;
  expect_tok(in, "tau");
  in >> env.params.tau;
  expect_tok(in, "c");
  in >> env.params.c;
  expect_tok(in, "x");
  in >> env.params.x;
  expect_tok(in, "seed");
  in >> env.params.seed;
  expect_tok(in, "start");
  in >> env.start_state;
  expect_tok(in, "task_of_state");
  size_t n_tos = 0;
  in >> n_tos;
  std::vector<int> tos(n_tos);
  for (size_t i = 0; i < n_tos; ++i) in >> tos[i];
  if (!in) throw Error("env file: truncated header");
  expect_tok(in, "mdp");
  env.mdp = load_mdp(in);
  expect_tok(in, "greedy");
  env.greedy = load_policy(in);
  expect_tok(in, "end");
  if (!tos.empty()) env.region_map = build_region_map(env.mdp, std::move(tos));
  return env;
}

// Accepts either a full env file or a bare MDP file (wrapped with defaults).
EnvInstance load_env_or_mdp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open input file: " + path);
  std::string magic;
  std::getline(in, magic);
  if (magic == kEnvMagic) return load_env(in);
  if (magic == kMdpMagic) {
    in.seekg(0);
    EnvInstance env;
    env.mdp = load_mdp(in);
    size_t slash = path.find_last_of('/');
    env.env_id = slash == std::string::npos ? path : path.substr(slash + 1);
    return env;
  }
  throw Error("unrecognized input header in " + path + ": '" + magic + "'");
}

// ----------------------------------------------------------- shared flags

struct EnvFlags {
  std::string in;
  std::string family = "goal_grid";
  std::string kind = "cycle";
  int d = 5;
  int N = 2;
  int dim = 4;
  int tasks = 1;
  long tau = 0;
  double c = 25.0;
  double x = 1.0;
  std::uint64_t seed = 1;
  int start = -1;
};

void add_env_flags(CLI::App* sub, EnvFlags& f, bool with_in) {
  if (with_in)
    sub->add_option("--in", f.in, "env or MDP file (overrides --family)");
  sub->add_option("--family", f.family,
                  "goal_grid | rooms | cyclic_rooms | task_grid");
  sub->add_option("--kind", f.kind, "rooms order: cycle | random | curricular");
  sub->add_option("--d", f.d, "grid / room side length");
  sub->add_option("--N", f.N, "number of rooms");
  sub->add_option("--dim", f.dim, "task grid side length");
  sub->add_option("--tasks", f.tasks, "task grid goal count");
  sub->add_option("--tau", f.tau, "task switching period");
  sub->add_option("--c", f.c, "cyclic rooms phase coefficient");
  sub->add_option("--x", f.x, "cyclic rooms phase exponent");
  sub->add_option("--env-seed", f.seed, "environment construction seed");
  sub->add_option("--start", f.start, "start state override");
}

EnvInstance resolve_env(const EnvFlags& f) {
  EnvInstance env;
  if (!f.in.empty()) {
    env = load_env_or_mdp(f.in);
  } else {
    EnvFamily fam = parse_family(f.family);
    switch (fam) {
      case EnvFamily::goal_grid:
        env = make_goal_grid(f.d, f.seed);
        break;
      case EnvFamily::rooms:
        env = make_rooms(f.N, f.d, parse_rooms_kind(f.kind), f.seed);
        break;
      case EnvFamily::cyclic_rooms:
        env = make_cyclic_rooms_tau(f.N, f.d, f.c, f.x, f.seed);
        break;
      case EnvFamily::task_grid:
        env = make_task_grid(f.dim, f.tasks, f.tau, f.seed);
        break;
    }
  }
  if (f.start >= 0) {
    if (f.start >= env.mdp.n_states)
      throw std::invalid_argument("--start out of range");
    env.start_state = f.start;
  }
  return env;
}

json env_json(const EnvFlags& f, const EnvInstance& env) {
  json j;
  j["source"] = f.in.empty() ? "generated" : f.in;
  j["env_id"] = env.env_id;
  j["n_states"] = env.mdp.n_states;
  j["n_actions"] = env.mdp.n_actions;
  j["start"] = env.start_state;
  if (f.in.empty()) {
    j["family"] = f.family;
    j["env_seed"] = f.seed;
  }
  return j;
}

struct PolicyFlags {
  std::string file;
  bool use_optimal = false;
  bool uniform = false;
};

void add_policy_flags(CLI::App* sub, PolicyFlags& f) {
  sub->add_option("--policy", f.file, "policy file to evaluate");
  sub->add_flag("--optimal", f.use_optimal, "evaluate the solved policy");
  sub->add_flag("--uniform", f.uniform, "evaluate the uniform policy");
}

// Order: explicit file, solved policy, uniform, env reference policy; bare
// MDPs without any of those fall back to uniform.
PolicyTable resolve_policy(const EnvInstance& env, const PolicyFlags& f,
                           std::string* label) {
  if (!f.file.empty()) {
    PolicyTable pi = load_policy(f.file);
    if (pi.n_states != env.mdp.n_states || pi.n_actions != env.mdp.n_actions)
      throw Error("policy shape does not match the MDP: " + f.file);
    *label = "file";
    return pi;
  }
  if (f.use_optimal) {
    *label = "optimal";
    return env.optimal_policy();
  }
  if (f.uniform || env.greedy.n_states == 0) {
    *label = "uniform";
    return PolicyTable::uniform(env.mdp.n_states, env.mdp.n_actions);
  }
  *label = "greedy";
  return env.greedy;
}

// -------------------------------------------------------------- manifests

std::string out_dir() {
  const char* dir = std::getenv("MIXRL_OUT_DIR");
  return dir && *dir ? std::string(dir) : std::string(".");
}

struct RunContext {
  std::string subcommand;
  std::vector<std::string> argv;
  std::chrono::steady_clock::time_point t0 =
      std::chrono::steady_clock::now();
  json config = json::object();
  json results = json::object();
  std::vector<std::string> outputs;
  std::string manifest_path;

  void finish() const {
    json j;
    j["schema"] = kManifestSchema;
    j["tool"] = kTool;
    j["version"] = kVersion;
    j["subcommand"] = subcommand;
    j["argv"] = argv;
    j["config"] = config;
    j["results"] = results;
    j["outputs"] = outputs;
    j["wall_time_sec"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    std::ofstream out(manifest_path);
    if (!out) throw Error("cannot write manifest: " + manifest_path);
    out << j.dump(2) << "\n";
  }
};

std::vector<std::string> report_header() {
  return {"quantity", "epsilon",  "relative", "value",
          "stderr",   "worst",    "seed",     "env_id"};
}

void report_row(CsvWriter& csv, const std::string& quantity, double eps,
                bool relative, double value, double se, double worst,
                std::uint64_t seed, const std::string& env_id) {
  csv.row({quantity, CsvWriter::num(eps), relative ? "1" : "0",
           CsvWriter::num(value), CsvWriter::num(se), CsvWriter::num(worst),
           std::to_string(seed), env_id});
}

// ------------------------------------------------------------ subcommands

int cmd_gen(const EnvFlags& ef, RunContext& ctx, const std::string& out) {
  EnvInstance env = resolve_env(ef);
  save_env(env, out);
  ctx.config["env"] = env_json(ef, env);
  ctx.results["n_states"] = env.mdp.n_states;
  ctx.outputs.push_back(out);
  ctx.finish();
  std::printf("wrote %s (%d states, %d actions)\n", out.c_str(),
              env.mdp.n_states, env.mdp.n_actions);
  return 0;
}

int cmd_analyze(const EnvFlags& ef, const PolicyFlags& pf,
                const std::vector<double>& epsilons, long cap, bool raw,
                bool with_diameter, RunContext& ctx, const std::string& out) {
  EnvInstance env = resolve_env(ef);
  std::string plabel;
  PolicyTable pi = resolve_policy(env, pf, &plabel);
  MarkovChain chain = induce_chain(env.mdp, pi);
  MarkovChain mixing_chain = raw ? chain : smooth_chain(chain);
  double rho = average_reward(env.mdp, pi);

  CsvWriter csv(out, report_header());
  report_row(csv, "states", 0, false, env.mdp.n_states, 0, 0, 0, env.env_id);
  report_row(csv, "actions", 0, false, env.mdp.n_actions, 0, 0, 0,
             env.env_id);
  report_row(csv, "rho", 0, false, rho, 0, 0, 0, env.env_id);
  for (double eps : epsilons) {
    long tmix = exact_mixing_time(mixing_chain, eps, cap);
    csv.row({"t_mix", CsvWriter::num(eps), "0", CsvWriter::num(tmix), "0",
             "0", "0", env.env_id});
  }
  for (double eps : epsilons) {
    long tces = cesaro_mixing_time(mixing_chain, eps, cap);
    csv.row({"cesaro_t_mix", CsvWriter::num(eps), "0", CsvWriter::num(tces),
             "0", "0", "0", env.env_id});
  }
  if (with_diameter) {
    DiameterReport dr = diameter_report(mixing_chain);
    report_row(csv, "policy_diameter", 0, false, dr.policy_diameter, 0, 0, 0,
               env.env_id);
    report_row(csv, "graph_diameter", 0, false,
               static_cast<double>(dr.graph_diameter), 0, 0, 0, env.env_id);
  }

  ctx.config["env"] = env_json(ef, env);
  ctx.config["policy"] = plabel;
  ctx.config["epsilons"] = epsilons;
  ctx.config["horizon_cap"] = cap;
  ctx.config["smoothed"] = !raw;
  ctx.results["rho"] = rho;
  ctx.outputs.push_back(out);
  ctx.finish();
  std::printf("analyzed %s under the %s policy: rho=%s, csv=%s\n",
              env.env_id.c_str(), plabel.c_str(), fmt_double(rho).c_str(),
              out.c_str());
  return 0;
}

int cmd_mix(const EnvFlags& ef, const PolicyFlags& pf,
            const std::vector<double>& epsilons, bool absolute, long horizon,
            int n_seeds, int max_tracked, std::uint64_t seed, bool exact,
            RunContext& ctx, const std::string& out) {
  EnvInstance env = resolve_env(ef);
  std::string plabel;
  PolicyTable pi = resolve_policy(env, pf, &plabel);
  double rho = average_reward(env.mdp, pi);
  std::vector<double> eps_abs = epsilons;
  if (!absolute) {
    if (!(rho > 0.0))
      throw Error("relative error needs a positive policy gain on " +
                  env.env_id + "; pass --absolute");
    for (double& e : eps_abs) e *= rho;
  }
  if (horizon <= 0)
    horizon = env.params.tau > 0 ? 1000 * env.params.tau : 1000000;

  CsvWriter csv(out, report_header());
  report_row(csv, "rho", 0, false, rho, 0, 0, seed, env.env_id);
  const size_t ne = epsilons.size();
  std::vector<double> sum(ne, 0.0), sumsq(ne, 0.0), worst(ne, 0.0);
  long excluded = 0;
  for (int k = 0; k < n_seeds; ++k) {
    MixingReport rep = return_mixing_time_empirical(
        env.mdp, pi, eps_abs, max_tracked, horizon, derive_seed(seed, k),
        env.start_state);
    excluded += rep.excluded;
    for (size_t i = 0; i < ne; ++i) {
      sum[i] += rep.mean_t[i];
      sumsq[i] += rep.mean_t[i] * rep.mean_t[i];
      if (rep.max_t[i] > worst[i]) worst[i] = rep.max_t[i];
    }
  }
  for (size_t i = 0; i < ne; ++i) {
    double mean = sum[i] / n_seeds;
    double se = 0.0;
    if (n_seeds > 1) {
      double var = (sumsq[i] - n_seeds * mean * mean) / (n_seeds - 1);
      se = var > 0.0 ? std::sqrt(var / n_seeds) : 0.0;
    }
    report_row(csv, "t_ret_empirical", epsilons[i], !absolute, mean, se,
               worst[i], seed, env.env_id);
  }
  if (exact) {
    MixingReport rep = return_mixing_time_exact(env.mdp, pi, eps_abs, horizon);
    for (size_t i = 0; i < ne; ++i)
      report_row(csv, "t_ret_exact", epsilons[i], !absolute, rep.mean_t[i], 0,
                 rep.max_t[i], 0, env.env_id);
  }

  ctx.config["env"] = env_json(ef, env);
  ctx.config["policy"] = plabel;
  ctx.config["epsilons"] = epsilons;
  ctx.config["relative"] = !absolute;
  ctx.config["horizon"] = horizon;
  ctx.config["n_seeds"] = n_seeds;
  ctx.config["max_tracked"] = max_tracked;
  ctx.config["seed"] = seed;
  ctx.results["rho"] = rho;
  ctx.results["excluded_points"] = excluded;
  ctx.outputs.push_back(out);
  ctx.finish();
  std::printf("mix: %d seed(s) on %s, horizon %ld, csv=%s\n", n_seeds,
              env.env_id.c_str(), horizon, out.c_str());
  return 0;
}

void add_agent_flags(CLI::App* sub, AgentConfig& cfg, std::string& algo) {
  sub->add_option("--algo", algo,
                  "q_on | q_off | dyna | nstep_td | rho_on | rho_off")
      ->required();
  sub->add_option("--epsilon", cfg.epsilon, "exploration probability");
  sub->add_option("--lr", cfg.lr, "TD step size");
  sub->add_option("--gamma", cfg.gamma, "baseline discount");
  sub->add_option("--B", cfg.B, "improvement sites per step (rho_off)");
  sub->add_option("--planning", cfg.planning_steps, "dyna backups per step");
  sub->add_option("--n", cfg.n, "n-step rollout depth");
  sub->add_flag("--update-model-always", cfg.update_model_always,
                "on-policy model update on every step");
}

json agent_json(const AgentConfig& cfg) {
  json j;
  j["algo"] = algo_name(cfg.algo);
  j["epsilon"] = cfg.epsilon;
  j["lr"] = cfg.lr;
  j["gamma"] = cfg.gamma;
  j["B"] = cfg.B;
  j["planning_steps"] = cfg.planning_steps;
  j["n"] = cfg.n;
  j["update_model_always"] = cfg.update_model_always;
  j["seed"] = cfg.seed;
  return j;
}

int cmd_regret(const EnvFlags& ef, AgentConfig cfg, long steps,
               double rho_star, bool trace, RunContext& ctx,
               const std::string& out) {
  EnvInstance env = resolve_env(ef);
  RegretTrace tr = run_lifelong(env, cfg, steps, cfg.seed, trace, rho_star);

  CsvWriter csv(out, {"env_id", "algo", "steps", "seed", "rho_star",
                      "mean_reward", "regret_per_step"});
  csv.row({env.env_id, algo_name(cfg.algo), std::to_string(steps),
           std::to_string(cfg.seed), CsvWriter::num(tr.rho_star),
           CsvWriter::num(tr.mean_reward()),
           CsvWriter::num(tr.regret_per_step())});
  ctx.outputs.push_back(out);
  if (trace) {
    std::string tpath = out + ".trace.csv";
    CsvWriter tcsv(tpath, {"step", "reward", "rho_hat"});
    for (size_t t = 0; t < tr.rewards.size(); ++t)
      tcsv.row({std::to_string(t), CsvWriter::num(tr.rewards[t]),
                CsvWriter::num(tr.rho_hat[t])});
    ctx.outputs.push_back(tpath);
  }

  ctx.config["env"] = env_json(ef, env);
  ctx.config["agent"] = agent_json(cfg);
  ctx.config["steps"] = steps;
  ctx.results["rho_star"] = tr.rho_star;
  ctx.results["mean_reward"] = tr.mean_reward();
  ctx.results["regret_per_step"] = tr.regret_per_step();
  ctx.finish();
  std::printf("regret/step %s over %ld steps: %s (rho*=%s), csv=%s\n",
              algo_name(cfg.algo).c_str(), steps,
              fmt_double(tr.regret_per_step()).c_str(),
              fmt_double(tr.rho_star).c_str(), out.c_str());
  return 0;
}

struct SweepFlags {
  std::vector<std::string> algos;
  std::vector<double> epsilons{0.1};
  std::vector<double> lrs{0.1};
  std::vector<double> gammas{0.99};
  std::vector<int> Bs{10};
  std::vector<int> plannings{10};
  std::vector<int> ns{3};
  long steps = 10000;
  int n_seeds = 10;
  std::uint64_t master_seed = 1;
  double budget = 0.0;
};

// Per-algorithm cross product over the hyperparameters that algorithm
// actually reads, so the grid carries no duplicate cells.
std::vector<AgentConfig> build_grid(const SweepFlags& f) {
  std::vector<AgentConfig> grid;
  for (const std::string& name : f.algos) {
    Algo algo = parse_algo(name);
    for (double eps : f.epsilons) {
      AgentConfig base;
      base.algo = algo;
      base.epsilon = eps;
      switch (algo) {
        case Algo::rho_on:
          grid.push_back(base);
          break;
        case Algo::rho_off:
          for (int B : f.Bs) {
            base.B = B;
            grid.push_back(base);
          }
          break;
        case Algo::q_on:
        case Algo::q_off:
          for (double lr : f.lrs)
            for (double g : f.gammas) {
              base.lr = lr;
              base.gamma = g;
              grid.push_back(base);
            }
          break;
        case Algo::dyna:
          for (double lr : f.lrs)
            for (double g : f.gammas)
              for (int p : f.plannings) {
                base.lr = lr;
                base.gamma = g;
                base.planning_steps = p;
                grid.push_back(base);
              }
          break;
        case Algo::nstep_td:
          for (double lr : f.lrs)
            for (double g : f.gammas)
              for (int n : f.ns) {
                base.lr = lr;
                base.gamma = g;
                base.n = n;
                grid.push_back(base);
              }
          break;
      }
    }
  }
  return grid;
}

std::vector<std::string> cell_fields(int cell, const AgentConfig& c) {
  return {std::to_string(cell),          algo_name(c.algo),
          CsvWriter::num(c.epsilon),     CsvWriter::num(c.lr),
          CsvWriter::num(c.gamma),       std::to_string(c.B),
          std::to_string(c.planning_steps), std::to_string(c.n)};
}

int cmd_sweep(const EnvFlags& ef, const SweepFlags& sf, RunContext& ctx,
              const std::string& out) {
  EnvInstance env = resolve_env(ef);
  std::vector<AgentConfig> grid = build_grid(sf);
  SweepResult res = sweep(env, grid, sf.steps, sf.n_seeds, sf.master_seed,
                          sf.budget);

  CsvWriter csv(out, {"cell", "algo", "epsilon", "lr", "gamma", "B",
                      "planning", "n", "seed_index", "run_seed", "regret"});
  for (size_t c = 0; c < res.cells.size(); ++c) {
    const SweepCell& cell = res.cells[c];
    for (size_t k = 0; k < cell.regrets.size(); ++k) {
      std::vector<std::string> row = cell_fields(static_cast<int>(c),
                                                 cell.cfg);
      row.push_back(std::to_string(k));
      row.push_back(std::to_string(derive_seed(sf.master_seed, k)));
      row.push_back(CsvWriter::num(cell.regrets[k]));
      csv.row(row);
    }
  }
  ctx.outputs.push_back(out);

  std::string spath = out + ".summary.csv";
  CsvWriter scsv(spath, {"cell", "algo", "epsilon", "lr", "gamma", "B",
                         "planning", "n", "mean", "stddev", "best"});
  for (size_t c = 0; c < res.cells.size(); ++c) {
    std::vector<std::string> row = cell_fields(static_cast<int>(c),
                                               res.cells[c].cfg);
    row.push_back(CsvWriter::num(res.cells[c].mean));
    row.push_back(CsvWriter::num(res.cells[c].stddev));
    row.push_back(static_cast<int>(c) == res.best ? "1" : "0");
    scsv.row(row);
  }
  ctx.outputs.push_back(spath);

  ctx.config["env"] = env_json(ef, env);
  ctx.config["grid_size"] = grid.size();
  ctx.config["steps"] = sf.steps;
  ctx.config["n_seeds"] = sf.n_seeds;
  ctx.config["master_seed"] = sf.master_seed;
  ctx.config["time_budget_sec"] = sf.budget;
  ctx.results["completed_cells"] = res.cells.size();
  ctx.results["truncated"] = res.truncated;
  if (res.best >= 0) {
    ctx.results["best"] = agent_json(res.best_cell().cfg);
    ctx.results["best_mean_regret"] = res.best_cell().mean;
  }
  ctx.finish();
  if (res.best >= 0)
    std::printf("sweep: %zu/%zu cells, best %s mean regret %s%s\n",
                res.cells.size(), grid.size(),
                algo_name(res.best_cell().cfg.algo).c_str(),
                fmt_double(res.best_cell().mean).c_str(),
                res.truncated ? " (truncated)" : "");
  else
    std::printf("sweep: no cells completed within the budget\n");
  return res.truncated ? 4 : 0;
}

struct ScaleFlags {
  std::string family = "goal_grid";
  std::vector<std::string> names{"d"};
  std::vector<double> q0{3.0};
  std::vector<double> delta{2.0};
  std::vector<double> nus{0, 1, 2, 3};
  std::string quantity = "t_ret_exact";
  double epsilon = 0.1;
  bool absolute = false;
  long horizon = 1000000;
  int n_seeds = 1;
  int max_tracked = 64;
  bool use_optimal = false;
  std::uint64_t seed = 1;
  double budget = 0.0;
};

int cmd_scale(const ScaleFlags& f, RunContext& ctx, const std::string& out) {
  ScalingSpec spec{f.names, f.q0, f.delta};
  ScalingConfig cfg;
  cfg.quantity = parse_scale_quantity(f.quantity);
  cfg.epsilon = f.epsilon;
  cfg.relative = !f.absolute;
  cfg.horizon = f.horizon;
  cfg.n_seeds = f.n_seeds;
  cfg.max_tracked = f.max_tracked;
  cfg.use_optimal_policy = f.use_optimal;
  cfg.seed = f.seed;
  cfg.time_budget_sec = f.budget;
  ScalingStudy study = mixing_scaling_study(f.family, spec, f.nus, cfg);

  CsvWriter csv(out, {"nu", "axis", "value", "worst", "normalized", "stderr",
                      "n_states", "tau", "regions", "env_id"});
  for (const ScalingPoint& p : study.points)
    csv.row({CsvWriter::num(p.nu), CsvWriter::num(p.axis),
             CsvWriter::num(p.value), CsvWriter::num(p.worst),
             CsvWriter::num(p.normalized), CsvWriter::num(p.stderr_),
             std::to_string(p.n_states), std::to_string(p.tau),
             std::to_string(p.regions), p.env_id});
  ctx.outputs.push_back(out);

  auto fit_json = [](const LinearFit& fit) {
    json j;
    j["slope"] = fit.slope;
    j["intercept"] = fit.intercept;
    j["r2"] = fit.r2;
    j["n"] = fit.n;
    return j;
  };
  ctx.config["family"] = f.family;
  ctx.config["names"] = f.names;
  ctx.config["q0"] = f.q0;
  ctx.config["delta"] = f.delta;
  ctx.config["nus"] = f.nus;
  ctx.config["quantity"] = f.quantity;
  ctx.config["epsilon"] = f.epsilon;
  ctx.config["relative"] = !f.absolute;
  ctx.config["horizon"] = f.horizon;
  ctx.config["n_seeds"] = f.n_seeds;
  ctx.config["seed"] = f.seed;
  ctx.results["axis"] = study.axis_name;
  ctx.results["points"] = study.points.size();
  ctx.results["fit"] = fit_json(study.fit);
  ctx.results["loglog_states"] = fit_json(study.loglog_states);
  ctx.results["truncated"] = study.truncated;
  ctx.finish();
  std::printf("scale %s over %s: %zu point(s), slope %s (R2 %s)%s\n",
              f.quantity.c_str(), study.axis_name.c_str(),
              study.points.size(), fmt_double(study.fit.slope).c_str(),
              fmt_double(study.fit.r2).c_str(),
              study.truncated ? " (truncated)" : "");
  return study.truncated ? 4 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mixrl: mixing-time analysis and lifelong-regret experiments"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  app.set_config("--config", "", "config file (keys mirror flags; flags win)");

  // gen
  EnvFlags gen_env;
  std::string gen_out;
  CLI::App* gen = app.add_subcommand("gen", "emit an env instance file");
  add_env_flags(gen, gen_env, false);
  gen->add_option("--out", gen_out, "output env file");

  // analyze
  EnvFlags an_env;
  PolicyFlags an_pol;
  std::vector<double> an_eps{0.25};
  long an_cap = 100000;
  bool an_raw = false;
  bool an_diam = false;
  std::string an_out;
  CLI::App* an = app.add_subcommand(
      "analyze", "chain quantities under a fixed policy");
  add_env_flags(an, an_env, true);
  add_policy_flags(an, an_pol);
  an->add_option("--eps", an_eps, "TV thresholds")->delimiter(',');
  an->add_option("--horizon-cap", an_cap, "mixing horizon cap")
      ->check(CLI::PositiveNumber);
  an->add_flag("--raw", an_raw, "skip the ergodicity smoothing");
  an->add_flag("--diameter", an_diam, "also report diameters");
  an->add_option("--out", an_out, "output csv");

  // mix
  EnvFlags mix_env;
  PolicyFlags mix_pol;
  std::vector<double> mix_eps{0.1};
  bool mix_abs = false;
  long mix_horizon = 0;
  int mix_seeds = 3;
  int mix_tracked = 64;
  std::uint64_t mix_seed = 1;
  bool mix_exact = false;
  std::string mix_out;
  CLI::App* mix = app.add_subcommand(
      "mix", "empirical return mixing time estimator");
  add_env_flags(mix, mix_env, true);
  add_policy_flags(mix, mix_pol);
  mix->add_option("--eps", mix_eps, "error thresholds")->delimiter(',');
  mix->add_flag("--absolute", mix_abs,
                "thresholds are absolute, not fractions of rho");
  mix->add_option("--horizon", mix_horizon,
                  "rollout length (default 1000*tau or 1e6)");
  mix->add_option("--seeds", mix_seeds, "independent estimator runs")
      ->check(CLI::PositiveNumber);
  mix->add_option("--max-tracked", mix_tracked, "reservoir size")
      ->check(CLI::PositiveNumber);
  mix->add_option("--seed", mix_seed, "master seed");
  mix->add_flag("--exact", mix_exact, "also report the exact value");
  mix->add_option("--out", mix_out, "output csv");

  // regret
  EnvFlags reg_env;
  AgentConfig reg_cfg;
  std::string reg_algo;
  long reg_steps = 10000;
  double reg_rho_star = std::numeric_limits<double>::quiet_NaN();
  bool reg_trace = false;
  std::string reg_out;
  CLI::App* reg = app.add_subcommand("regret", "one continuing lifelong run");
  add_env_flags(reg, reg_env, true);
  add_agent_flags(reg, reg_cfg, reg_algo);
  reg->add_option("--steps", reg_steps, "run length")
      ->check(CLI::PositiveNumber);
  reg->add_option("--seed", reg_cfg.seed, "run seed");
  reg->add_option("--rho-star", reg_rho_star, "override the solved rate");
  reg->add_flag("--trace", reg_trace, "also write a per-step trace csv");
  reg->add_option("--out", reg_out, "output csv");

  // sweep
  EnvFlags sw_env;
  SweepFlags sw;
  sw.algos = {"q_on", "q_off", "dyna", "nstep_td", "rho_on", "rho_off"};
  std::string sw_out;
  CLI::App* sw_app = app.add_subcommand("sweep", "hyperparameter grid search");
  add_env_flags(sw_app, sw_env, true);
  sw_app->add_option("--algos", sw.algos, "algorithms")->delimiter(',');
  sw_app->add_option("--epsilons", sw.epsilons, "exploration grid")
      ->delimiter(',');
  sw_app->add_option("--lrs", sw.lrs, "learning rate grid")->delimiter(',');
  sw_app->add_option("--gammas", sw.gammas, "discount grid")->delimiter(',');
  sw_app->add_option("--Bs", sw.Bs, "rho_off site count grid")
      ->delimiter(',');
  sw_app->add_option("--plannings", sw.plannings, "dyna backup grid")
      ->delimiter(',');
  sw_app->add_option("--ns", sw.ns, "n-step depth grid")->delimiter(',');
  sw_app->add_option("--steps", sw.steps, "run length")
      ->check(CLI::PositiveNumber);
  sw_app->add_option("--seeds", sw.n_seeds, "seeds per cell")
      ->check(CLI::PositiveNumber);
  sw_app->add_option("--master-seed", sw.master_seed, "master seed");
  sw_app->add_option("--budget", sw.budget, "wall time budget in seconds");
  sw_app->add_option("--out", sw_out, "output csv");

  // scale
  ScaleFlags sc;
  std::string sc_out;
  CLI::App* sc_app = app.add_subcommand("scale", "mixing scaling study");
  sc_app->add_option("--scale-family", sc.family,
                     "goal_grid | rooms_cycle | rooms_random | "
                     "rooms_curricular | cyclic_rooms | task_grid");
  sc_app->add_option("--names", sc.names, "scaled parameter names")
      ->delimiter(',');
  sc_app->add_option("--q0", sc.q0, "base parameter values")->delimiter(',');
  sc_app->add_option("--delta", sc.delta, "per-nu increments")
      ->delimiter(',');
  sc_app->add_option("--nus", sc.nus, "scale points (>= 4)")->delimiter(',');
  sc_app->add_option("--quantity", sc.quantity,
                     "t_ret_exact | t_ret_empirical | t_mix_exact | "
                     "min_diameter");
  sc_app->add_option("--eps", sc.epsilon, "settling threshold");
  sc_app->add_flag("--absolute", sc.absolute, "threshold is absolute");
  sc_app->add_option("--horizon", sc.horizon, "horizon cap")
      ->check(CLI::PositiveNumber);
  sc_app->add_option("--seeds", sc.n_seeds, "empirical estimator seeds")
      ->check(CLI::PositiveNumber);
  sc_app->add_option("--max-tracked", sc.max_tracked, "reservoir size")
      ->check(CLI::PositiveNumber);
  sc_app->add_flag("--optimal", sc.use_optimal, "use the solved policy");
  sc_app->add_option("--seed", sc.seed, "master seed");
  sc_app->add_option("--budget", sc.budget, "wall time budget in seconds");
  sc_app->add_option("--out", sc_out, "output csv");

  CLI11_PARSE(app, argc, argv);

  RunContext ctx;
  for (int i = 0; i < argc; ++i) ctx.argv.push_back(argv[i]);

  try {
    CLI::App* sub = app.get_subcommands().front();
    ctx.subcommand = sub->get_name();
    std::string default_name =
        out_dir() + "/" + ctx.subcommand + (sub == gen ? ".env" : ".csv");
    std::string* out = sub == gen   ? &gen_out
                       : sub == an  ? &an_out
                       : sub == mix ? &mix_out
                       : sub == reg ? &reg_out
                       : sub == sw_app ? &sw_out
                                       : &sc_out;
    if (out->empty()) *out = default_name;
    ctx.manifest_path = *out + ".manifest.json";

    if (sub == gen) return cmd_gen(gen_env, ctx, gen_out);
    if (sub == an)
      return cmd_analyze(an_env, an_pol, an_eps, an_cap, an_raw, an_diam, ctx,
                         an_out);
    if (sub == mix)
      return cmd_mix(mix_env, mix_pol, mix_eps, mix_abs, mix_horizon,
                     mix_seeds, mix_tracked, mix_seed, mix_exact, ctx,
                     mix_out);
    if (sub == reg) {
      reg_cfg.algo = parse_algo(reg_algo);
      reg_cfg.validate();
      return cmd_regret(reg_env, reg_cfg, reg_steps, reg_rho_star, reg_trace,
                        ctx, reg_out);
    }
    if (sub == sw_app) return cmd_sweep(sw_env, sw, ctx, sw_out);
    return cmd_scale(sc, ctx, sc_out);
  } catch (const HorizonError& e) {
    std::fprintf(stderr, "error[horizon]: %s\n", e.what());
  } catch (const SolverError& e) {
    std::fprintf(stderr, "error[solver]: %s\n", e.what());
  } catch (const Error& e) {
    std::fprintf(stderr, "error[runtime]: %s\n", e.what());
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error[invalid-argument]: %s\n", e.what());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error[internal]: %s\n", e.what());
  }
  return 3;
}
