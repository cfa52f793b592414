#pragma once

#include <array>
#include <vector>

#include "arl/core/rng.hpp"
#include "arl/core/types.hpp"
#include "arl/envs/maze.hpp"

namespace arl {

/// Deterministic goal-reaching MDP on a finite state space. Reward is -1 per
/// step with a zero-reward absorbing goal, so optimal values are negated
/// discounted step counts: V*(s) = -(1 - gamma^d) / (1 - gamma) for a goal d
/// steps away. Goals are plain state ids and transitions live in a flat
/// row-major table.
struct FiniteMDP {
  int n_states = 0;
  int n_actions = 0;
  std::vector<int> goals;  // distinct state ids
  std::vector<int> next;   // [s * n_actions + a] -> successor state
  double gamma = 0.99;

  /// Optional (row, col) per state; grid-derived instances fill this so
  /// displacement-based abstractions and relative option sets are available.
  std::vector<std::array<int, 2>> coords;

  int next_of(int s, int a) const { return next[s * n_actions + a]; }
  bool has_coords() const { return !coords.empty(); }
};

/// Shape checks plus reachability of every goal from every state.
/// Throws std::invalid_argument naming the offending (state, goal) pair.
void validate(const FiniteMDP& mdp);

struct VIResult {
  Vec v;                    // optimal values
  std::vector<int> greedy;  // lowest-index optimal action per state
  int sweeps = 0;
};

/// Exact optimal values for reaching goal state g, iterated to a sup-norm
/// residual below 1e-12 (deterministic dynamics converge bitwise after the
/// longest shortest path). Throws std::invalid_argument when g is not in the
/// goal set or some state cannot reach it.
VIResult value_iteration(const FiniteMDP& mdp, int g);

/// Actions within tol of the optimum at each state, given optimal values v
/// for goal g. Every action is optimal at the goal itself (absorbing).
std::vector<std::vector<int>> optimal_action_sets(const FiniteMDP& mdp, const Vec& v, int g,
                                                  double tol = 1e-9);

/// Steps along `greedy` from s until g, returning the step count (0 when
/// s == g). Throws std::runtime_error if g is not hit within n_states steps.
int greedy_path_length(const FiniteMDP& mdp, const std::vector<int>& greedy, int s, int g);

/// One row-stochastic |S| x |A| matrix per goal, aligned with mdp.goals.
using PolicyTable = std::vector<Mat>;

/// Deterministic greedy policy from value iteration, per goal.
PolicyTable greedy_policy(const FiniteMDP& mdp);

/// Behaviour family for concentrability studies. Slices whose target state is
/// listed in expert_goals (or every slice when the list is empty) follow the
/// greedy policy with eps-uniform corruption; the remaining slices act
/// uniformly at random, modelling data that only covers part of the task.
struct Behaviour {
  double eps = 0.0;
  std::vector<int> expert_goals;
};

PolicyTable behaviour_policy(const FiniteMDP& mdp, const Behaviour& b);

/// Discounted state-action occupancies d(s, a | g), one matrix per goal.
/// Entries are nonnegative and each goal slice sums to one.
struct OccupancyTable {
  std::vector<Mat> per_goal;  // aligned with goals
  std::vector<int> goals;     // target state ids
  double gamma = 0.0;         // discount behind the (1 - gamma) normalization

  double total_mass() const;
};

/// Discounted visitation (1 - gamma) * sum_t gamma^t mu_t for a row-stochastic
/// transition matrix P and start distribution mu0, solved exactly via
/// (I - gamma P^T) rho = (1 - gamma) mu0. States unreachable from the support
/// of mu0 are pinned to exact zero so support queries stay crisp.
Vec discounted_occupancy(const Mat& P, const Vec& mu0, double gamma);

/// Per-goal occupancy of `pi` under goal-absorbing dynamics and a uniform
/// start distribution: d(s, a | g) = rho_g(s) * pi_g(a | s). The discount is
/// taken from the argument, not the MDP, so lifted levels can reuse this.
OccupancyTable occupancy(const FiniteMDP& mdp, const PolicyTable& pi, double gamma);

/// Options-as-waypoints semi-MDP. Action w targets state w; executing it runs
/// n greedy low-level steps (absorbing early at the waypoint), and the
/// discount compounds to gamma^n. States, goals and coords carry over.
FiniteMDP lift_mdp(const FiniteMDP& mdp, int n);

/// Low-level view of the same dynamics: the goal set becomes every waypoint
/// (state ids in ascending order) and the discount 1 - 1/n matches an
/// effective horizon of n steps per option.
FiniteMDP low_mdp(const FiniteMDP& mdp, int n);

/// Cell-level MDP of a teleport-free maze. States are the free cells in cell
/// order; transitions replay the environment's own discrete stepper, so the
/// table agrees with flood-fill distances by construction. An empty goal_cells
/// list declares every free cell a goal.
struct MazeMdp {
  FiniteMDP mdp;
  std::vector<int> cell_of_state;  // state id -> grid cell
  std::vector<int> state_of_cell;  // grid cell -> state id, -1 on walls
};

MazeMdp mdp_from_maze(const MazeSpec& spec, double gamma, const std::vector<int>& goal_cells = {});

/// Strongly connected random instance: action 0 walks a random cycle through
/// all states, the remaining actions jump uniformly. Goals are a random
/// subset of the requested size.
FiniteMDP random_finite_mdp(int n_states, int n_actions, int n_goals, double gamma, Rng& rng);

}  // namespace arl
