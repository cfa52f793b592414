#pragma once

#include <vector>

#include "arl/core/rng.hpp"
#include "arl/data/dataset.hpp"
#include "arl/envs/maze.hpp"

namespace arl {

/// Goal relabelling mixture: current state / future state on the same
/// trajectory / random dataset state. The trajectory branch draws the offset
/// geometrically (truncated to the trajectory end, success rate 1 - discount)
/// or uniformly over future indices.
struct GoalSampleConfig {
  double p_cur = 0;
  double p_traj = 0;
  double p_rand = 0;
  bool geometric = false;
  double discount = 0.99;
};

void validate(const GoalSampleConfig& cfg);

enum class Prov : int { cur = 0, traj = 1, rand = 2 };

struct GoalDraw {
  int traj = 0;
  int idx = 0;
  Prov prov = Prov::cur;
};

/// State n steps ahead on the same trajectory, clamped to the end.
int waypoint_index(int horizon, int t, int n);

/// Truncated geometric offset in 1..m: P(k) proportional to discount^(k-1).
int geometric_offset(double discount, int m, Rng& rng);

GoalDraw sample_goal(const Dataset& d, int traj, int t, const GoalSampleConfig& cfg, Rng& rng);

/// Reward for being at `s` under the goal test centered on `goal_obs`,
/// evaluated by the generating environment: 0 at the goal, -1 elsewhere.
double relabel_reward(const MazeSpec& spec, const Vec& s_obs, const Vec& goal_obs);

struct SampledBatch {
  Mat s, a, sp;   // transition rows
  Mat gs;         // n-step waypoints
  Mat g;          // relabelled goals
  Vec r_gs, r_g;  // rewards of s against gs and against g
  std::vector<Prov> prov;
  std::vector<int> traj, t;
  int rows() const { return int(s.rows()); }
};

/// Uniform transitions with replacement; per row an n-step waypoint plus a
/// goal drawn with cfg. Deterministic given the stream.
SampledBatch sample_batch(const Dataset& d, const MazeSpec& spec, int batch_size,
                          const GoalSampleConfig& cfg, int n, Rng& rng);

}  // namespace arl
