#pragma once

#include <string>
#include <vector>

#include "arl/core/rng.hpp"
#include "arl/core/types.hpp"

namespace arl {

/// Grid maze with an optional continuous point-mass interpretation.
///
/// Text format: a `maze v1` line, `key value` header lines (name, continuous,
/// cell_size, max_step_size, goal_radius), a lone `grid` line, then one row
/// per line using `#` wall, `.` free, `S` start region, `T` teleport pad.
/// Cells outside the grid count as walls, so borderless grids are legal.
struct MazeSpec {
  std::string name = "maze";
  int rows = 0;
  int cols = 0;
  bool continuous = true;
  double cell_size = 1.0;
  double max_step_size = 0.2;
  double goal_radius = 0.5;
  std::vector<uint8_t> wall;   // row-major, 1 = wall
  std::vector<int> starts;     // start-region cells (S)
  std::vector<int> teleports;  // pad cells (T); entering one exits at another

  int cell_index(int r, int c) const { return r * cols + c; }
  int cell_row(int idx) const { return idx / cols; }
  int cell_col(int idx) const { return idx % cols; }
  bool in_bounds(int r, int c) const { return r >= 0 && r < rows && c >= 0 && c < cols; }
  bool wall_at(int r, int c) const { return !in_bounds(r, c) || wall[cell_index(r, c)] != 0; }
  bool free_cell(int idx) const { return wall[idx] == 0; }
  bool is_teleport(int idx) const;

  /// Continuous coordinates: x grows with column, y with row.
  Vec2 cell_center(int idx) const {
    return Vec2((cell_col(idx) + 0.5) * cell_size, (cell_row(idx) + 0.5) * cell_size);
  }
  int cell_of(const Vec2& p) const;

  std::vector<int> free_cells() const;
  int state_dim() const { return 2; }
  int action_dim() const { return continuous ? 2 : 1; }
  static constexpr int kNumDiscreteActions = 4;  // up, down, left, right
};

struct EnvState {
  Vec2 pos = Vec2::Zero();  // cell center when discrete
  int cell = -1;
  int steps = 0;
};

/// Goal test beta: closed ball of goal_radius (continuous) or exact cell match.
struct GoalTest {
  Vec2 goal = Vec2::Zero();
  double radius = 0.5;
  int cell = -1;
};

MazeSpec parse_maze(const std::string& text);
MazeSpec load_maze(const std::string& path);
std::string maze_text(const MazeSpec& spec);

bool is_builtin_maze(const std::string& name);
MazeSpec builtin_maze(const std::string& name);

EnvState make_state(const MazeSpec& spec, const Vec2& pos);
EnvState make_state_cell(const MazeSpec& spec, int cell);

/// Uniform start cell (start region if any, else all free cells); continuous
/// positions are drawn uniformly inside the cell with a small wall margin.
EnvState reset(const MazeSpec& spec, Rng& stream);
EnvState reset_cell(const MazeSpec& spec, int cell, Rng& stream);

Vec obs_of(const MazeSpec& spec, const EnvState& s);  // position, or (row, col)
GoalTest goal_from_obs(const MazeSpec& spec, const Vec& goal_obs);
GoalTest goal_at_cell(const MazeSpec& spec, int cell);

bool at_goal(const MazeSpec& spec, const EnvState& s, const GoalTest& g);
double reward(const MazeSpec& spec, const EnvState& s, const GoalTest& g);

/// One transition. Continuous: per-axis wall-clipped motion of at most
/// max_step_size per axis (x resolved before y). Discrete: a(0) in 0..3 moves
/// one cell or stays at a wall. Entering a teleport pad from another cell
/// relocates to a uniformly drawn other pad using the environment stream.
EnvState step(const MazeSpec& spec, const EnvState& s, const Vec& a, Rng& env_stream);

/// BFS cell distances to `goal_cell` (-1 where unreachable). With
/// avoid_teleports, pad cells are treated as walls (used by scripted policies
/// so steering never triggers a pad by intent).
std::vector<int> flood_fill(const MazeSpec& spec, int goal_cell, bool avoid_teleports = false);

/// Throws if some goal is not reachable from some start, naming the pair.
void check_reachable(const MazeSpec& spec, const std::vector<int>& goal_cells);

/// Random wall layout with all free cells mutually connected (rejection
/// sampled); used by the finite-MDP analyzer.
MazeSpec random_gridmaze(int rows, int cols, double wall_density, Rng& rng);

}  // namespace arl
