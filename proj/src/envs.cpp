#include "mixrl/envs.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <map>
#include <stdexcept>

namespace mixrl {

namespace {

// 2-D moves in action order: up, down, left, right. Off-grid moves clip.
int clip_move_2d(int d, int cell, int a) {
  int r = cell / d, c = cell % d;
  switch (a) {
    case 0: r = std::max(r - 1, 0); break;
    case 1: r = std::min(r + 1, d - 1); break;
    case 2: c = std::max(c - 1, 0); break;
    case 3: c = std::min(c + 1, d - 1); break;
    default: throw std::invalid_argument("clip_move_2d: bad action");
  }
  return r * d + c;
}

// Lowest-index action that strictly shrinks the Manhattan distance to goal
// (rooms have no obstacles, so this is a shortest path); 0 at the goal.
int greedy_action_2d(int d, int cell, int goal) {
  if (cell == goal) return 0;
  int r = cell / d, c = cell % d;
  int gr = goal / d, gc = goal % d;
  if (gr < r) return 0;
  if (gr > r) return 1;
  return gc < c ? 2 : 3;
}

// 3-D moves: -x, +x, -y, +y, -z, +z with clipping.
void clip_move_3d(int dim, int& x, int& y, int& z, int a) {
  switch (a) {
    case 0: x = std::max(x - 1, 0); break;
    case 1: x = std::min(x + 1, dim - 1); break;
    case 2: y = std::max(y - 1, 0); break;
    case 3: y = std::min(y + 1, dim - 1); break;
    case 4: z = std::max(z - 1, 0); break;
    case 5: z = std::min(z + 1, dim - 1); break;
    default: throw std::invalid_argument("clip_move_3d: bad action");
  }
}

int l1_3d(int dim, int cell, int goal) {
  int x = cell % dim, y = (cell / dim) % dim, z = cell / (dim * dim);
  int gx = goal % dim, gy = (goal / dim) % dim, gz = goal / (dim * dim);
  return std::abs(x - gx) + std::abs(y - gy) + std::abs(z - gz);
}

int greedy_action_3d(int dim, int cell, int goal) {
  if (cell == goal) return 0;
  int p[3] = {cell % dim, (cell / dim) % dim, cell / (dim * dim)};
  int g[3] = {goal % dim, (goal / dim) % dim, goal / (dim * dim)};
  for (int axis = 0; axis < 3; ++axis) {
    if (p[axis] > g[axis]) return 2 * axis;
    if (p[axis] < g[axis]) return 2 * axis + 1;
  }
  return 0;
}

void check_cap(long n, const char* family) {
  if (n > kDenseStateCap)
    throw Error(std::string(family) + ": dense construction needs " +
                std::to_string(n) + " states, cap is " +
                std::to_string(kDenseStateCap));
}

struct RoomLayout {
  std::vector<int> start;
  std::vector<int> goal;
};

// One substream per room so instances with different N share the layouts of
// their common rooms.
RoomLayout draw_rooms(int N, int d, std::uint64_t seed) {
  RoomLayout out;
  for (int room = 0; room < N; ++room) {
    Rng rr(derive_seed(seed, static_cast<std::uint64_t>(room)));
    int goal = rr.uniform_int(d * d);
    int start = goal;
    while (start == goal) start = rr.uniform_int(d * d);
    out.goal.push_back(goal);
    out.start.push_back(start);
  }
  return out;
}

std::string id_tail(std::uint64_t seed) {
  return "seed=" + std::to_string(seed) + "]";
}

}  // namespace

RoomsKind parse_rooms_kind(const std::string& name) {
  if (name == "cycle") return RoomsKind::cycle;
  if (name == "random") return RoomsKind::random_order;
  if (name == "curricular") return RoomsKind::curricular;
  throw std::invalid_argument("parse_rooms_kind: unknown kind '" + name + "'");
}

std::string rooms_kind_name(RoomsKind kind) {
  switch (kind) {
    case RoomsKind::cycle: return "cycle";
    case RoomsKind::random_order: return "random";
    case RoomsKind::curricular: return "curricular";
  }
  throw std::invalid_argument("rooms_kind_name: bad enum value");
}

RegionMap build_region_map(const TabularMdp& mdp,
                           std::vector<int> task_of_state) {
  if (static_cast<int>(task_of_state.size()) != mdp.n_states)
    throw std::invalid_argument("build_region_map: task_of_state size");
  int nr = 0;
  for (int z : task_of_state) {
    if (z < 0) throw std::invalid_argument("build_region_map: negative task");
    nr = std::max(nr, z + 1);
  }
  RegionMap out;
  out.task_of_state = std::move(task_of_state);
  out.regions.resize(nr);
  out.boundaries.resize(nr);
  for (int s = 0; s < mdp.n_states; ++s)
    out.regions[out.task_of_state[s]].push_back(s);
  for (int s = 0; s < mdp.n_states; ++s) {
    int z = out.task_of_state[s];
    bool exits = false;
    for (int a = 0; a < mdp.n_actions && !exits; ++a)
      for (int s2 = 0; s2 < mdp.n_states; ++s2)
        if (out.task_of_state[s2] != z && mdp.tp(s, a, s2) > 0.0) {
          exits = true;
          break;
        }
    if (exits) out.boundaries[z].push_back(s);
  }
  return out;
}

double EnvInstance::rho_star() const { return solve().rho_star; }

const PolicyTable& EnvInstance::optimal_policy() const {
  return solve().policy;
}

const OptimalResult& EnvInstance::solve() const {
  if (!opt_) opt_ = optimal_average_reward(mdp);
  return *opt_;
}

EnvInstance make_goal_grid(int d, std::uint64_t seed) {
  if (d < 2) throw std::invalid_argument("make_goal_grid: d must be >= 2");
  long n = static_cast<long>(d) * d;
  check_cap(n, "make_goal_grid");
  Rng rng(derive_seed(seed, 0));
  int goal = rng.uniform_int(static_cast<int>(n));

  EnvInstance env;
  env.mdp = TabularMdp::zeros(static_cast<int>(n), 4);
  std::vector<int> greedy(n, 0);
  for (int s = 0; s < n; ++s) {
    if (s == goal) {
      for (int a = 0; a < 4; ++a)
        for (int s2 = 0; s2 < n; ++s2)
          if (s2 != goal) env.mdp.tp(s, a, s2) = 1.0 / (n - 1);
      continue;
    }
    greedy[s] = greedy_action_2d(d, s, goal);
    for (int a = 0; a < 4; ++a) {
      int s2 = clip_move_2d(d, s, a);
      env.mdp.tp(s, a, s2) = 1.0;
      if (s2 == goal) env.mdp.rew(s, a) = 1.0;
    }
  }
  env.mdp.validate();
  env.region_map = build_region_map(env.mdp, std::vector<int>(n, 0));
  env.greedy = PolicyTable::deterministic(greedy, 4);
  env.start_state = goal == 0 ? 1 : 0;
  env.params.family = EnvFamily::goal_grid;
  env.params.d = d;
  env.params.seed = seed;
  env.env_id = "goal_grid[d=" + std::to_string(d) + ";" + id_tail(seed);
  return env;
}

EnvInstance make_rooms(int N, int d, RoomsKind kind, std::uint64_t seed) {
  if (N < 2) throw std::invalid_argument("make_rooms: N must be >= 2");
  if (d < 2) throw std::invalid_argument("make_rooms: d must be >= 2");
  RoomLayout rooms = draw_rooms(N, d, seed);
  int cells = d * d;

  // Blocks of d^2 cells; cycle/random have one block per room, curricular
  // has one block per (stage, position-in-prefix) pair so the schedule
  // R1, R1 R2, R1 R2 R3, ... is realized by goal exits alone.
  struct Block {
    int room;       // underlying room layout
    int next_goal;  // block entered from this block's goal (-1: random)
  };
  std::vector<Block> blocks;
  if (kind == RoomsKind::curricular) {
    std::vector<std::vector<int>> stage_blocks(N);
    for (int k = 0; k < N; ++k)
      for (int j = 0; j <= k; ++j) {
        stage_blocks[k].push_back(static_cast<int>(blocks.size()));
        blocks.push_back({j, -1});
      }
    for (int k = 0; k < N; ++k)
      for (int j = 0; j <= k; ++j) {
        int b = stage_blocks[k][j];
        blocks[b].next_goal =
            j < k ? stage_blocks[k][j + 1] : stage_blocks[(k + 1) % N][0];
      }
  } else {
    for (int i = 0; i < N; ++i)
      blocks.push_back({i, kind == RoomsKind::cycle ? (i + 1) % N : -1});
  }

  long n = static_cast<long>(blocks.size()) * cells;
  check_cap(n, "make_rooms");
  EnvInstance env;
  env.mdp = TabularMdp::zeros(static_cast<int>(n), 4);
  std::vector<int> greedy(n, 0), task(n, 0);
  for (size_t b = 0; b < blocks.size(); ++b) {
    int room = blocks[b].room;
    int base = static_cast<int>(b) * cells;
    for (int p = 0; p < cells; ++p) {
      int s = base + p;
      task[s] = static_cast<int>(b);
      if (p == rooms.goal[room]) {
        for (int a = 0; a < 4; ++a) {
          if (blocks[b].next_goal >= 0) {
            int nb = blocks[b].next_goal;
            env.mdp.tp(s, a, nb * cells + rooms.start[blocks[nb].room]) = 1.0;
          } else {
            for (int j = 0; j < N; ++j)
              env.mdp.tp(s, a, j * cells + rooms.start[j]) += 1.0 / N;
          }
        }
        continue;
      }
      greedy[s] = greedy_action_2d(d, p, rooms.goal[room]);
      for (int a = 0; a < 4; ++a) {
        int p2 = clip_move_2d(d, p, a);
        env.mdp.tp(s, a, base + p2) = 1.0;
        if (p2 == rooms.goal[room]) env.mdp.rew(s, a) = 1.0;
      }
    }
  }
  env.mdp.validate();
  env.region_map = build_region_map(env.mdp, std::move(task));
  env.greedy = PolicyTable::deterministic(greedy, 4);
  env.start_state = rooms.start[blocks[0].room];
  env.params.family = EnvFamily::rooms;
  env.params.kind = kind;
  env.params.N = N;
  env.params.d = d;
  env.params.seed = seed;
  env.env_id = "rooms_" + rooms_kind_name(kind) + "[N=" + std::to_string(N) +
               ";d=" + std::to_string(d) + ";" + id_tail(seed);
  return env;
}

long cyclic_tau(double c, int d, double x) {
  return std::llround(c * std::pow(static_cast<double>(d), x));
}

EnvInstance make_cyclic_rooms_tau(int N, int d, double c, double x,
                                  std::uint64_t seed) {
  if (N < 2) throw std::invalid_argument("make_cyclic_rooms_tau: N >= 2");
  if (d < 2) throw std::invalid_argument("make_cyclic_rooms_tau: d >= 2");
  if (c < 2.0) throw std::invalid_argument("make_cyclic_rooms_tau: c >= 2");
  if (x < 1.0) throw std::invalid_argument("make_cyclic_rooms_tau: x >= 1");
  long tau = cyclic_tau(c, d, x);
  if (tau < 2L * d)
    throw std::invalid_argument(
        "make_cyclic_rooms_tau: tau = " + std::to_string(tau) +
        " < 2d; some rooms would be unsolvable");
  // Every (room, phase) pair is recurrent, so the reachable count is at
  // least N * tau; refuse early before allocating the product space.
  check_cap(static_cast<long>(N) * tau, "make_cyclic_rooms_tau");
  RoomLayout rooms = draw_rooms(N, d, seed);
  int cells = d * d;

  // Deterministic per-action successor on the full (room, phase, cell)
  // space. Goal cells reset to the room start; the phase wrap transports to
  // the next room's start while keeping the move's reward.
  auto pack = [&](int z, long t, int p) {
    return (static_cast<long>(z) * tau + t) * cells + p;
  };
  auto next = [&](int z, long t, int p, int a, double& rew) {
    int q;
    rew = 0.0;
    if (p == rooms.goal[z]) {
      q = rooms.start[z];
    } else {
      q = clip_move_2d(d, p, a);
      if (q == rooms.goal[z]) rew = 1.0;
    }
    long t2 = t + 1;
    int z2 = z;
    if (t2 == tau) {
      t2 = 0;
      z2 = (z + 1) % N;
      q = rooms.start[z2];
    }
    return pack(z2, t2, q);
  };

  // Phase 0 pins the position to the room start, so much of the product
  // space is unreachable; keep only the forward-reachable part.
  std::vector<int> index(static_cast<size_t>(N) * tau * cells, -1);
  std::vector<long> states;
  std::deque<long> frontier;
  long root = pack(0, 0, rooms.start[0]);
  index[root] = 0;
  states.push_back(root);
  frontier.push_back(root);
  while (!frontier.empty()) {
    long f = frontier.front();
    frontier.pop_front();
    int p = static_cast<int>(f % cells);
    long t = (f / cells) % tau;
    int z = static_cast<int>(f / (static_cast<long>(cells) * tau));
    for (int a = 0; a < 4; ++a) {
      double rew;
      long g = next(z, t, p, a, rew);
      if (index[g] < 0) {
        index[g] = static_cast<int>(states.size());
        states.push_back(g);
        frontier.push_back(g);
      }
    }
  }
  std::sort(states.begin(), states.end());
  for (size_t i = 0; i < states.size(); ++i)
    index[states[i]] = static_cast<int>(i);

  long n = static_cast<long>(states.size());
  check_cap(n, "make_cyclic_rooms_tau");
  EnvInstance env;
  env.mdp = TabularMdp::zeros(static_cast<int>(n), 4);
  std::vector<int> greedy(n, 0), task(n, 0);
  for (long i = 0; i < n; ++i) {
    long f = states[i];
    int p = static_cast<int>(f % cells);
    long t = (f / cells) % tau;
    int z = static_cast<int>(f / (static_cast<long>(cells) * tau));
    task[i] = z;
    greedy[i] = greedy_action_2d(d, p, rooms.goal[z]);
    for (int a = 0; a < 4; ++a) {
      double rew;
      long g = next(z, t, p, a, rew);
      env.mdp.tp(static_cast<int>(i), a, index[g]) = 1.0;
      env.mdp.rew(static_cast<int>(i), a) = rew;
    }
  }
  env.mdp.validate();
  env.region_map = build_region_map(env.mdp, std::move(task));
  env.greedy = PolicyTable::deterministic(greedy, 4);
  env.start_state = index[root];
  env.params.family = EnvFamily::cyclic_rooms;
  env.params.N = N;
  env.params.d = d;
  env.params.c = c;
  env.params.x = x;
  env.params.tau = tau;
  env.params.seed = seed;
  char buf[160];
  // Semicolon separators keep the id a single clean CSV field.
  std::snprintf(buf, sizeof buf, "cyclic_rooms[N=%d;d=%d;c=%g;x=%g;seed=%llu]",
                N, d, c, x, static_cast<unsigned long long>(seed));
  env.env_id = buf;
  return env;
}

namespace {

std::vector<int> draw_goals(int dim, int n_tasks, std::uint64_t seed) {
  int cells = dim * dim * dim;
  Rng gr(derive_seed(seed, 7777));
  std::vector<char> used(cells, 0);
  // The start corner stays out of the goal pool unless every cell must be
  // a goal.
  if (n_tasks < cells) used[0] = 1;
  std::vector<int> goals;
  while (static_cast<int>(goals.size()) < n_tasks) {
    int g = gr.uniform_int(cells);
    if (used[g]) continue;
    used[g] = 1;
    goals.push_back(g);
  }
  return goals;
}

}  // namespace

EnvInstance make_task_grid(int dim, int n_tasks, long tau,
                           std::uint64_t seed) {
  if (dim < 2) throw std::invalid_argument("make_task_grid: dim must be >= 2");
  if (n_tasks < 1 || n_tasks > 1000)
    throw std::invalid_argument("make_task_grid: n_tasks must be in [1,1000]");
  int cells = dim * dim * dim;
  if (n_tasks > cells)
    throw std::invalid_argument("make_task_grid: n_tasks exceeds dim^3");
  if (tau < 1) throw std::invalid_argument("make_task_grid: tau must be >= 1");
  std::vector<int> goals = draw_goals(dim, n_tasks, seed);

  EnvInstance env;
  std::vector<int> greedy, task;
  if (n_tasks == 1) {
    // No switching, so the phase counter carries no information.
    check_cap(cells, "make_task_grid");
    env.mdp = TabularMdp::zeros(cells, 6);
    greedy.assign(cells, 0);
    task.assign(cells, 0);
    int goal = goals[0];
    for (int p = 0; p < cells; ++p) {
      greedy[p] = greedy_action_3d(dim, p, goal);
      for (int a = 0; a < 6; ++a) {
        int x = p % dim, y = (p / dim) % dim, z = p / (dim * dim);
        clip_move_3d(dim, x, y, z, a);
        int q = (z * dim + y) * dim + x;
        double rew = l1_3d(dim, q, goal) < l1_3d(dim, p, goal) ? 1.0 : 0.0;
        if (q == goal) q = 0;  // landing redirects to the corner
        env.mdp.tp(p, a, q) += 1.0;
        env.mdp.rew(p, a) = rew;
      }
    }
    env.start_state = 0;
  } else {
    // Reachable subset of (task, phase, cell): phase 0 pins the corner.
    // Every (task, phase) pair recurs, so bail out before allocating the
    // product space when the count is already hopeless.
    check_cap(static_cast<long>(n_tasks) * tau, "make_task_grid");
    auto pack = [&](int z, long t, int p) {
      return (static_cast<long>(z) * tau + t) * cells + p;
    };
    auto move = [&](int z, int p, int a, double& rew) {
      int x = p % dim, y = (p / dim) % dim, zz = p / (dim * dim);
      clip_move_3d(dim, x, y, zz, a);
      int q = (zz * dim + y) * dim + x;
      rew = l1_3d(dim, q, goals[z]) < l1_3d(dim, p, goals[z]) ? 1.0 : 0.0;
      if (q == goals[z]) q = 0;
      return q;
    };
    std::vector<int> index(static_cast<size_t>(n_tasks) * tau * cells, -1);
    std::vector<long> states;
    std::deque<long> frontier;
    long root = pack(0, 0, 0);
    index[root] = 0;
    states.push_back(root);
    frontier.push_back(root);
    auto visit = [&](long g) {
      if (index[g] < 0) {
        index[g] = static_cast<int>(states.size());
        states.push_back(g);
        frontier.push_back(g);
      }
    };
    while (!frontier.empty()) {
      long f = frontier.front();
      frontier.pop_front();
      int p = static_cast<int>(f % cells);
      long t = (f / cells) % tau;
      int z = static_cast<int>(f / (static_cast<long>(cells) * tau));
      for (int a = 0; a < 6; ++a) {
        double rew;
        int q = move(z, p, a, rew);
        if (t + 1 == tau) {
          for (int z2 = 0; z2 < n_tasks; ++z2)
            if (z2 != z) visit(pack(z2, 0, 0));
        } else {
          visit(pack(z, t + 1, q));
        }
      }
    }
    std::sort(states.begin(), states.end());
    for (size_t i = 0; i < states.size(); ++i)
      index[states[i]] = static_cast<int>(i);
    long n = static_cast<long>(states.size());
    check_cap(n, "make_task_grid");
    env.mdp = TabularMdp::zeros(static_cast<int>(n), 6);
    greedy.assign(n, 0);
    task.assign(n, 0);
    for (long i = 0; i < n; ++i) {
      long f = states[i];
      int p = static_cast<int>(f % cells);
      long t = (f / cells) % tau;
      int z = static_cast<int>(f / (static_cast<long>(cells) * tau));
      task[i] = z;
      greedy[i] = greedy_action_3d(dim, p, goals[z]);
      for (int a = 0; a < 6; ++a) {
        double rew;
        int q = move(z, p, a, rew);
        env.mdp.rew(static_cast<int>(i), a) = rew;
        if (t + 1 == tau) {
          for (int z2 = 0; z2 < n_tasks; ++z2)
            if (z2 != z)
              env.mdp.tp(static_cast<int>(i), a, index[pack(z2, 0, 0)]) =
                  1.0 / (n_tasks - 1);
        } else {
          env.mdp.tp(static_cast<int>(i), a, index[pack(z, t + 1, q)]) += 1.0;
        }
      }
    }
    env.start_state = index[root];
  }
  env.mdp.validate();
  env.region_map = build_region_map(env.mdp, std::move(task));
  env.greedy = PolicyTable::deterministic(greedy, 6);
  env.params.family = EnvFamily::task_grid;
  env.params.dim = dim;
  env.params.n_tasks = n_tasks;
  env.params.tau = tau;
  env.params.seed = seed;
  env.env_id = "task_grid[dim=" + std::to_string(dim) +
               ";n_tasks=" + std::to_string(n_tasks) +
               ";tau=" + std::to_string(tau) + ";" + id_tail(seed);
  return env;
}

EnvInstance scale(const std::string& family_id, const ScalingSpec& spec,
                  double nu, std::uint64_t seed) {
  if (nu < 0.0) throw std::invalid_argument("scale: nu must be >= 0");
  if (spec.names.size() != spec.q0.size() ||
      spec.names.size() != spec.delta_q.size())
    throw std::invalid_argument("scale: names/q0/delta_q sizes differ");
  bool any_growth = false;
  for (double dq : spec.delta_q) {
    if (dq < 0.0)
      throw std::invalid_argument("scale: delta_q entries must be >= 0");
    if (dq > 0.0) any_growth = true;
  }
  if (!any_growth)
    throw std::invalid_argument("scale: delta_q must have a positive entry");

  std::map<std::string, double> q;
  for (size_t i = 0; i < spec.names.size(); ++i) {
    if (q.count(spec.names[i]))
      throw std::invalid_argument("scale: duplicate parameter '" +
                                  spec.names[i] + "'");
    q[spec.names[i]] = spec.q0[i] + nu * spec.delta_q[i];
  }
  auto take = [&](const char* name) {
    auto it = q.find(name);
    if (it == q.end())
      throw std::invalid_argument("scale: missing parameter '" +
                                  std::string(name) + "' for " + family_id);
    double v = it->second;
    q.erase(it);
    return v;
  };
  auto as_int = [](double v) {
    return static_cast<long>(std::floor(v + 1e-9));
  };
  auto done = [&] {
    if (!q.empty())
      throw std::invalid_argument("scale: parameter '" + q.begin()->first +
                                  "' does not belong to " + family_id);
  };

  if (family_id == "goal_grid") {
    long d = as_int(take("d"));
    done();
    return make_goal_grid(static_cast<int>(d), seed);
  }
  if (family_id == "rooms_cycle" || family_id == "rooms_random" ||
      family_id == "rooms_curricular") {
    long N = as_int(take("N")), d = as_int(take("d"));
    done();
    return make_rooms(static_cast<int>(N), static_cast<int>(d),
                      parse_rooms_kind(family_id.substr(6)), seed);
  }
  if (family_id == "cyclic_rooms") {
    long N = as_int(take("N")), d = as_int(take("d"));
    double c = take("c"), x = take("x");
    done();
    return make_cyclic_rooms_tau(static_cast<int>(N), static_cast<int>(d), c,
                                 x, seed);
  }
  if (family_id == "task_grid") {
    long dim = as_int(take("dim")), nt = as_int(take("n_tasks"));
    long tau = as_int(take("tau"));
    done();
    return make_task_grid(static_cast<int>(dim), static_cast<int>(nt), tau,
                          seed);
  }
  throw std::invalid_argument("scale: unknown family '" + family_id + "'");
}

TaskGridSim::TaskGridSim(int dim, int n_tasks, long tau, std::uint64_t seed)
    : dim_(dim),
      n_tasks_(n_tasks),
      tau_(tau),
      switch_rng_(derive_seed(seed, 7778)) {
  if (dim < 2) throw std::invalid_argument("TaskGridSim: dim must be >= 2");
  if (n_tasks < 1 || n_tasks > 1000)
    throw std::invalid_argument("TaskGridSim: n_tasks must be in [1,1000]");
  if (n_tasks > dim * dim * dim)
    throw std::invalid_argument("TaskGridSim: n_tasks exceeds dim^3");
  if (tau < 1) throw std::invalid_argument("TaskGridSim: tau must be >= 1");
  goals_ = draw_goals(dim, n_tasks, seed);
  start_episode();
}

void TaskGridSim::start_episode() { px_ = py_ = pz_ = 0; }

void TaskGridSim::features(double* out) const {
  std::fill(out, out + feature_dim(), 0.0);
  int g = goals_[task_];
  int gx = g % dim_, gy = (g / dim_) % dim_, gz = g / (dim_ * dim_);
  out[px_] = 1.0;
  out[dim_ + py_] = 1.0;
  out[2 * dim_ + pz_] = 1.0;
  out[3 * dim_ + gx] = 1.0;
  out[4 * dim_ + gy] = 1.0;
  out[5 * dim_ + gz] = 1.0;
}

TaskGridSim::Step TaskGridSim::step(int action) {
  if (action < 0 || action >= 6)
    throw std::invalid_argument("TaskGridSim: bad action");
  int g = goals_[task_];
  int gx = g % dim_, gy = (g / dim_) % dim_, gz = g / (dim_ * dim_);
  int before = std::abs(px_ - gx) + std::abs(py_ - gy) + std::abs(pz_ - gz);
  clip_move_3d(dim_, px_, py_, pz_, action);
  int after = std::abs(px_ - gx) + std::abs(py_ - gy) + std::abs(pz_ - gz);

  Step out;
  out.reward = after < before ? 1.0 : 0.0;
  if (after == 0) {
    out.episode_end = true;
    start_episode();
  }
  ++global_step_;
  if (tau_ > 0 && n_tasks_ > 1 && global_step_ % tau_ == 0) {
    int t = task_;
    while (t == task_) t = switch_rng_.uniform_int(n_tasks_);
    task_ = t;
    out.episode_end = true;
    out.task_switched = true;
    start_episode();
  }
  return out;
}

void TaskGridSim::force_task(int task) {
  if (task < 0 || task >= n_tasks_)
    throw std::invalid_argument("TaskGridSim: bad task index");
  task_ = task;
  tau_ = 0;  // disables passive switching
  start_episode();
}

}  // namespace mixrl
