#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "arl/agents/agent.hpp"
#include "arl/envs/maze.hpp"

namespace arl {

/// Dataset generation knobs shared by every run of a plan.
struct DataParams {
  std::string style = "stitch";
  int n_traj = 2000;
  int horizon = 50;
  double noise = 0.2;
  uint64_t seed = 1;
};

/// A full study: one dataset, a list of agent layouts, a list of training
/// seeds, and a shared evaluation protocol (goal cells, episodes per goal).
struct ExperimentPlan {
  std::string env = "open5";  // builtin maze name or full maze text
  DataParams data;
  std::vector<AgentSpec> agents;
  std::vector<uint64_t> seeds;
  int64_t steps = 50000;
  int episodes = 20;       // evaluation episodes per goal
  std::vector<int> goals;  // evaluation goal cells
};

MazeSpec plan_maze(const ExperimentPlan& plan);
void validate(const ExperimentPlan& plan);

/// Binary success tally of one (variant, seed) pair on one goal.
struct EvalCell {
  std::string variant;
  uint64_t seed = 0;
  int goal = -1;
  int successes = 0;
  int episodes = 0;
  bool train_aborted = false;
  double rate() const { return episodes > 0 ? double(successes) / episodes : 0.0; }
};

/// Aggregate row per variant: pooled mean with a percentile-bootstrap
/// interval over seed-level means.
struct VariantRow {
  std::string variant;
  double mean = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

struct EvalResult {
  std::vector<EvalCell> cells;
  std::vector<VariantRow> table;
  double mean = 0.0;  // pooled success rate over every cell
};

using Policy = std::function<Vec(const Vec& obs, const Vec& goal_obs, Rng& stream)>;

/// Rolls the policy from uniformly sampled starts; an episode succeeds the
/// moment the goal test fires at any step and fails once max_steps run out.
/// max_steps <= 0 picks the per-goal default below. The agent overload takes
/// mean actions and resamples its option every step.
EvalResult evaluate(const Policy& policy, const MazeSpec& spec, const std::vector<int>& goals,
                    int episodes, int max_steps, Rng& stream);
EvalResult evaluate(Agent& agent, const MazeSpec& spec, const std::vector<int>& goals,
                    int episodes, int max_steps, Rng& stream);

/// Episode budget: 4x the worst start-to-goal flood-fill distance, converted
/// to env steps (continuous motion needs ceil(cell / max_step) per cell).
int default_max_steps(const MazeSpec& spec, int goal_cell);

/// Percentile bootstrap over group-level means (groups = seeds). Resample
/// means are deterministic given the stream; the two-argument form uses
/// 10000 resamples at level 0.95.
std::pair<double, double> bootstrap_ci(const std::vector<std::vector<int>>& groups, int resamples,
                                       double level, Rng& stream);
std::pair<double, double> bootstrap_ci(const std::vector<std::vector<int>>& groups, Rng& stream);

/// Collapses cells into one row per variant, bootstrapping over its seeds.
std::vector<VariantRow> summarize(const std::vector<EvalCell>& cells, Rng& stream,
                                  int resamples = 10000, double level = 0.95);

/// Trains and evaluates every (agent, seed) pair of the plan; jobs > 1 fans
/// the independent runs out across threads without changing any result.
EvalResult run_plan(const ExperimentPlan& plan, int jobs = 1);

std::string eval_rows_csv(const EvalResult& result);
std::string summary_csv(const std::vector<VariantRow>& table);

enum class GridLevel { low, high };

struct GridRequest {
  GridLevel level = GridLevel::low;
  Vec2 target = Vec2::Zero();  // waypoint (low) or goal (high), world coordinates
  int resolution = 32;         // samples per axis
};

/// Rasterized value surface: resolution x resolution samples over the maze
/// bounding box, NaN where a sample lands in a wall. grad holds the
/// central-difference gradient magnitude, NaN wherever the stencil is
/// incomplete.
struct ValueGrid {
  int rows = 0;
  int cols = 0;
  double dx = 0.0;
  double dy = 0.0;
  GridRequest req;
  Mat value;
  Mat grad;
};

ValueGrid value_grid(const Agent& agent, const MazeSpec& spec, const GridRequest& req);

/// CSV file with a `# value` block and a `# grad` block; missing samples are
/// empty fields.
void dump_value_grid(const Agent& agent, const MazeSpec& spec, const GridRequest& req,
                     const std::string& path);

}  // namespace arl
