#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mixrl/mdp.hpp"
#include "mixrl/rng.hpp"

namespace mixrl {

// Dense tabular construction is refused above this many states; the largest
// instances (big cyclic-room phase spaces, the full 10^3 feature grid) are
// reachable only through their simulators.
inline constexpr int kDenseStateCap = 4096;

enum class EnvFamily { goal_grid, rooms, cyclic_rooms, task_grid };
enum class RoomsKind { cycle, random_order, curricular };

RoomsKind parse_rooms_kind(const std::string& name);  // invalid_argument on junk
std::string rooms_kind_name(RoomsKind kind);

// Task/region structure layered over a tabular MDP. Regions partition the
// state space; a boundary state is one with positive one-step exit
// probability under at least one action.
struct RegionMap {
  std::vector<std::vector<int>> regions;
  std::vector<std::vector<int>> boundaries;
  std::vector<int> task_of_state;
};

RegionMap build_region_map(const TabularMdp& mdp,
                           std::vector<int> task_of_state);

struct EnvParams {
  EnvFamily family = EnvFamily::goal_grid;
  RoomsKind kind = RoomsKind::cycle;
  int d = 0;
  int N = 0;
  int dim = 0;
  int n_tasks = 0;
  long tau = 0;
  double c = 0.0;
  double x = 0.0;
  std::uint64_t seed = 0;
};

struct EnvInstance {
  TabularMdp mdp;
  RegionMap region_map;
  EnvParams params;
  std::string env_id;
  int start_state = 0;
  PolicyTable greedy;  // shortest-path-to-goal reference policy

  double rho_star() const;
  const PolicyTable& optimal_policy() const;

 private:
  const OptimalResult& solve() const;
  mutable std::optional<OptimalResult> opt_;
};

// d x d grid, 4 move actions (off-grid moves are no-ops), one seeded goal
// cell paying 1 on entry; the goal cell teleports uniformly to a non-goal
// cell, encoding the episodic reset inside the continuing MDP.
EnvInstance make_goal_grid(int d, std::uint64_t seed);

// N rooms of d x d cells, each with a seeded start and goal; entering a
// room's goal pays 1 and the goal cell transports to the next room's start.
// kind selects the room order: a fixed cycle, uniform with repeats, or the
// curricular schedule R1, R1 R2, R1 R2 R3, ... (encoded with a stage
// component, so the state count is N(N+1)/2 * d^2 instead of N * d^2).
EnvInstance make_rooms(int N, int d, RoomsKind kind, std::uint64_t seed);

// Rooms with passive switching: the state carries a phase counter t mod tau
// with tau = round(c * d^x), and the room advances cyclically exactly when
// the counter wraps, independent of actions. Within a room the goal pays 1
// on entry and resets to the same room's start until the wrap. States are
// restricted to the reachable set (a position can only be as far from the
// room start as the phase allows).
EnvInstance make_cyclic_rooms_tau(int N, int d, double c, double x,
                                  std::uint64_t seed);

long cyclic_tau(double c, int d, double x);

// Tabular view of the 3-D task grid: dim^3 cells, 6 clipped axis moves,
// seeded goal set of size n_tasks, progress reward (1 whenever the L1
// distance to the current goal strictly decreases), goal landings redirect
// to the start corner, and the task switches uniformly to a different goal
// every tau steps (phase component; dropped when n_tasks == 1).
EnvInstance make_task_grid(int dim, int n_tasks, long tau, std::uint64_t seed);

// Proportional scaling: q(nu) = q0 + nu * delta_q, integer parameters
// rounded down. Families: "goal_grid" (d), "rooms_cycle" / "rooms_random" /
// "rooms_curricular" (N, d), "cyclic_rooms" (N, d, c, x), "task_grid"
// (dim, n_tasks, tau).
struct ScalingSpec {
  std::vector<std::string> names;
  std::vector<double> q0;
  std::vector<double> delta_q;
};

EnvInstance scale(const std::string& family_id, const ScalingSpec& spec,
                  double nu, std::uint64_t seed);

// Simulator for the full-size feature grid (episodic REINFORCE view).
// Observations are the concatenation of six dim-wide one-hots: agent x/y/z
// then goal x/y/z. Episodes start at the corner cell and end on a goal
// landing or a task switch.
class TaskGridSim {
 public:
  TaskGridSim(int dim, int n_tasks, long tau, std::uint64_t seed);

  int feature_dim() const { return 6 * dim_; }
  int n_actions() const { return 6; }
  int n_tasks() const { return n_tasks_; }
  int task() const { return task_; }
  long global_step() const { return global_step_; }

  void features(double* out) const;  // writes feature_dim() values

  struct Step {
    double reward = 0.0;
    bool episode_end = false;
    bool task_switched = false;
  };
  Step step(int action);

  // Pins the sim to one task, restarts the episode, and disables passive
  // switching; used for held-out policy evaluation.
  void force_task(int task);

 private:
  void start_episode();
  int dim_;
  int n_tasks_;
  long tau_;
  std::vector<int> goals_;  // flat cell index per task
  int task_ = 0;
  int px_ = 0, py_ = 0, pz_ = 0;
  long global_step_ = 0;
  Rng switch_rng_;
};

}  // namespace mixrl
