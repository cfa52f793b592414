#include "arl/harness/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <thread>

#include "arl/agents/train.hpp"
#include "arl/envs/scripted.hpp"

namespace arl {

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

std::vector<EvalCell> roll_cells(const Policy& policy, const MazeSpec& spec,
                                 const std::vector<int>& goals, int episodes, int max_steps,
                                 Rng& stream) {
  require(!goals.empty(), "evaluate: need at least one goal");
  require(episodes >= 1, "evaluate: need at least one episode per goal");
  std::vector<EvalCell> cells;
  cells.reserve(goals.size());
  for (int g : goals) {
    require(g >= 0 && g < spec.rows * spec.cols && spec.free_cell(g),
            "evaluate: goal cell " + std::to_string(g) + " is not a free cell");
    const int cap = max_steps > 0 ? max_steps : default_max_steps(spec, g);
    const GoalTest beta = goal_at_cell(spec, g);
    const Vec goal_obs = obs_of(spec, make_state_cell(spec, g));
    EvalCell cell;
    cell.variant = "policy";
    cell.goal = g;
    cell.episodes = episodes;
    for (int e = 0; e < episodes; ++e) {
      EnvState s = reset(spec, stream);
      bool ok = at_goal(spec, s, beta);
      for (int t = 0; t < cap && !ok; ++t) {
        const Vec a = policy(obs_of(spec, s), goal_obs, stream);
        s = step(spec, s, a, stream);
        ok = at_goal(spec, s, beta);
      }
      if (ok) ++cell.successes;
    }
    cells.push_back(std::move(cell));
  }
  return cells;
}

EvalResult finalize(std::vector<EvalCell> cells, Rng& stream) {
  EvalResult out;
  out.cells = std::move(cells);
  int64_t succ = 0, total = 0;
  for (const EvalCell& c : out.cells) {
    succ += c.successes;
    total += c.episodes;
  }
  out.mean = total > 0 ? double(succ) / double(total) : 0.0;
  out.table = summarize(out.cells, stream);
  return out;
}

}  // namespace

MazeSpec plan_maze(const ExperimentPlan& plan) {
  return is_builtin_maze(plan.env) ? builtin_maze(plan.env) : parse_maze(plan.env);
}

void validate(const ExperimentPlan& plan) {
  require(!plan.agents.empty(), "plan: need at least one agent spec");
  require(!plan.seeds.empty(), "plan: need at least one seed");
  require(!plan.goals.empty(), "plan: need at least one evaluation goal");
  require(plan.episodes >= 1, "plan: need at least one episode per goal");
  require(plan.steps >= 0, "plan: negative training steps");
  require(plan.data.n_traj >= 1 && plan.data.horizon >= 1, "plan: empty dataset request");
  const MazeSpec spec = plan_maze(plan);
  for (int g : plan.goals)
    require(g >= 0 && g < spec.rows * spec.cols && spec.free_cell(g),
            "plan: goal cell " + std::to_string(g) + " is not a free cell");
  check_reachable(spec, plan.goals);
  for (const AgentSpec& a : plan.agents) {
    a.validate();
    require(a.state_dim == spec.state_dim(), "plan: agent state_dim does not match the env");
    if (spec.continuous)
      require(!a.discrete_actions && a.action_dim == spec.action_dim(),
              "plan: continuous env needs a continuous action head");
    else
      require(a.discrete_actions && a.num_actions == MazeSpec::kNumDiscreteActions,
              "plan: discrete env needs a 4-way discrete action head");
  }
}

int default_max_steps(const MazeSpec& spec, int goal_cell) {
  require(goal_cell >= 0 && goal_cell < spec.rows * spec.cols && spec.free_cell(goal_cell),
          "max steps: goal cell " + std::to_string(goal_cell) + " is not a free cell");
  const std::vector<int> dist = flood_fill(spec, goal_cell);
  const std::vector<int> starts = spec.starts.empty() ? spec.free_cells() : spec.starts;
  int worst = 0;
  for (int c : starts) {
    require(dist[c] >= 0, "max steps: goal cell " + std::to_string(goal_cell) +
                              " unreachable from start cell " + std::to_string(c));
    worst = std::max(worst, dist[c]);
  }
  const int per_cell =
      spec.continuous ? int(std::ceil(spec.cell_size / spec.max_step_size)) : 1;
  return 4 * (worst + 1) * per_cell;
}

EvalResult evaluate(const Policy& policy, const MazeSpec& spec, const std::vector<int>& goals,
                    int episodes, int max_steps, Rng& stream) {
  return finalize(roll_cells(policy, spec, goals, episodes, max_steps, stream), stream);
}

EvalResult evaluate(Agent& agent, const MazeSpec& spec, const std::vector<int>& goals,
                    int episodes, int max_steps, Rng& stream) {
  const Policy policy = [&agent](const Vec& s, const Vec& g, Rng& rng) {
    return act(agent, s, g, /*deterministic=*/true, rng);
  };
  std::vector<EvalCell> cells = roll_cells(policy, spec, goals, episodes, max_steps, stream);
  for (EvalCell& c : cells) c.variant = variant_name(agent.spec.variant);
  return finalize(std::move(cells), stream);
}

std::pair<double, double> bootstrap_ci(const std::vector<std::vector<int>>& groups, int resamples,
                                       double level, Rng& stream) {
  require(!groups.empty(), "bootstrap_ci: need at least one outcome group");
  require(resamples >= 1, "bootstrap_ci: need at least one resample");
  require(level > 0.0 && level < 1.0, "bootstrap_ci: level must lie in (0, 1)");
  std::vector<double> means;
  means.reserve(groups.size());
  for (const std::vector<int>& g : groups) {
    require(!g.empty(), "bootstrap_ci: empty outcome group");
    int64_t sum = 0;
    for (int v : g) {
      require(v == 0 || v == 1, "bootstrap_ci: outcomes must be binary");
      sum += v;
    }
    means.push_back(double(sum) / double(g.size()));
  }
  const size_t k = means.size();
  std::vector<double> draws(static_cast<size_t>(resamples));
  for (double& d : draws) {
    double acc = 0.0;
    for (size_t i = 0; i < k; ++i) acc += means[stream.uniform_int(uint64_t(k))];
    d = acc / double(k);
  }
  std::sort(draws.begin(), draws.end());
  const auto quantile = [&](double p) {
    return draws[size_t(std::lround(p * double(resamples - 1)))];
  };
  return {quantile((1.0 - level) / 2.0), quantile((1.0 + level) / 2.0)};
}

std::pair<double, double> bootstrap_ci(const std::vector<std::vector<int>>& groups, Rng& stream) {
  return bootstrap_ci(groups, 10000, 0.95, stream);
}

std::vector<VariantRow> summarize(const std::vector<EvalCell>& cells, Rng& stream, int resamples,
                                  double level) {
  std::vector<std::string> order;
  std::map<std::string, std::map<uint64_t, std::vector<int>>> by_variant;
  for (const EvalCell& c : cells) {
    if (by_variant.find(c.variant) == by_variant.end()) order.push_back(c.variant);
    std::vector<int>& outcomes = by_variant[c.variant][c.seed];
    outcomes.insert(outcomes.end(), size_t(c.successes), 1);
    outcomes.insert(outcomes.end(), size_t(c.episodes - c.successes), 0);
  }
  std::vector<VariantRow> table;
  table.reserve(order.size());
  for (const std::string& name : order) {
    std::vector<std::vector<int>> groups;
    int64_t succ = 0, total = 0;
    for (const auto& [seed, outcomes] : by_variant[name]) {
      (void)seed;
      for (int v : outcomes) succ += v;
      total += int64_t(outcomes.size());
      groups.push_back(outcomes);
    }
    VariantRow row;
    row.variant = name;
    row.mean = total > 0 ? double(succ) / double(total) : 0.0;
    std::tie(row.ci_lo, row.ci_hi) = bootstrap_ci(groups, resamples, level, stream);
    table.push_back(std::move(row));
  }
  return table;
}

EvalResult run_plan(const ExperimentPlan& plan, int jobs) {
  validate(plan);
  const MazeSpec spec = plan_maze(plan);
  const Dataset data = generate_dataset(spec, plan.data.style, plan.data.n_traj,
                                        plan.data.horizon, plan.data.noise, plan.data.seed);

  const size_t n_seeds = plan.seeds.size();
  const size_t n_runs = plan.agents.size() * n_seeds;
  std::vector<std::vector<EvalCell>> run_cells(n_runs);
  std::atomic<size_t> next{0};
  std::mutex fail_mu;
  std::exception_ptr failure;

  const auto worker = [&] {
    for (size_t r = next.fetch_add(1); r < n_runs; r = next.fetch_add(1)) {
      try {
        const size_t ai = r / n_seeds;
        const uint64_t seed = plan.seeds[r % n_seeds];
        TrainResult tr = train(plan.agents[ai], data, plan.steps, seed);
        Rng eval_stream = Rng(seed).fork(0x45564cull + ai);
        std::vector<EvalCell> cells = roll_cells(
            [&tr](const Vec& s, const Vec& g, Rng& rng) {
              return act(tr.agent, s, g, /*deterministic=*/true, rng);
            },
            spec, plan.goals, plan.episodes, /*max_steps=*/0, eval_stream);
        for (EvalCell& c : cells) {
          c.variant = variant_name(plan.agents[ai].variant);
          c.seed = seed;
          c.train_aborted = tr.aborted;
        }
        run_cells[r] = std::move(cells);
      } catch (...) {
        std::lock_guard<std::mutex> lock(fail_mu);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  const int threads = std::max(1, std::min<int>(jobs, int(n_runs)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(size_t(threads));
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<EvalCell> cells;
  for (std::vector<EvalCell>& rc : run_cells)
    for (EvalCell& c : rc) cells.push_back(std::move(c));
  Rng summary_stream = Rng(plan.data.seed).fork(0x534d4dull);
  return finalize(std::move(cells), summary_stream);
}

std::string eval_rows_csv(const EvalResult& result) {
  std::string out = "variant,seed,goal,successes,episodes,rate,aborted\n";
  for (const EvalCell& c : result.cells) {
    out += c.variant + ',' + std::to_string(c.seed) + ',' + std::to_string(c.goal) + ',' +
           std::to_string(c.successes) + ',' + std::to_string(c.episodes) + ',' + fmt(c.rate()) +
           ',' + (c.train_aborted ? "1" : "0") + '\n';
  }
  return out;
}

std::string summary_csv(const std::vector<VariantRow>& table) {
  std::string out = "variant,mean,ci_lo,ci_hi\n";
  for (const VariantRow& r : table)
    out += r.variant + ',' + fmt(r.mean) + ',' + fmt(r.ci_lo) + ',' + fmt(r.ci_hi) + '\n';
  return out;
}

ValueGrid value_grid(const Agent& agent, const MazeSpec& spec, const GridRequest& req) {
  require(agent.spec.state_dim == 2, "value_grid: needs a 2-D position environment");
  require(req.resolution >= 1, "value_grid: resolution must be positive");
  const double width = spec.cols * spec.cell_size;
  const double height = spec.rows * spec.cell_size;
  require(req.target(0) >= 0.0 && req.target(0) < width && req.target(1) >= 0.0 &&
              req.target(1) < height,
          "value_grid: target lies outside the maze");
  const int tcell = spec.cell_of(req.target);
  require(spec.free_cell(tcell), "value_grid: target sits in a wall cell");
  const Vec target_obs = obs_of(spec, make_state(spec, req.target));

  ValueGrid grid;
  grid.rows = grid.cols = req.resolution;
  grid.dx = width / req.resolution;
  grid.dy = height / req.resolution;
  grid.req = req;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  grid.value = Mat::Constant(grid.rows, grid.cols, nan);
  grid.grad = Mat::Constant(grid.rows, grid.cols, nan);

  for (int i = 0; i < grid.rows; ++i)
    for (int j = 0; j < grid.cols; ++j) {
      const Vec2 p((j + 0.5) * grid.dx, (i + 0.5) * grid.dy);
      if (!spec.free_cell(spec.cell_of(p))) continue;
      const Vec s_obs = obs_of(spec, make_state(spec, p));
      grid.value(i, j) = req.level == GridLevel::low ? value_low(agent, s_obs, target_obs)
                                                     : value_high(agent, s_obs, target_obs);
    }
  for (int i = 1; i + 1 < grid.rows; ++i)
    for (int j = 1; j + 1 < grid.cols; ++j) {
      const double gx = (grid.value(i, j + 1) - grid.value(i, j - 1)) / (2.0 * grid.dx);
      const double gy = (grid.value(i + 1, j) - grid.value(i - 1, j)) / (2.0 * grid.dy);
      if (std::isfinite(grid.value(i, j)) && std::isfinite(gx) && std::isfinite(gy))
        grid.grad(i, j) = std::hypot(gx, gy);
    }
  return grid;
}

namespace {

void write_block(std::ofstream& os, const Mat& m) {
  char buf[40];
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      if (j > 0) os << ',';
      if (std::isfinite(m(i, j))) {
        std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
        os << buf;
      }
    }
    os << '\n';
  }
}

}  // namespace

void dump_value_grid(const Agent& agent, const MazeSpec& spec, const GridRequest& req,
                     const std::string& path) {
  const ValueGrid grid = value_grid(agent, spec, req);
  std::ofstream os(path);
  if (!os) throw std::runtime_error("dump_value_grid: cannot open " + path);
  os << "# value level=" << (req.level == GridLevel::low ? "low" : "high")
     << " target_x=" << fmt(req.target(0)) << " target_y=" << fmt(req.target(1))
     << " rows=" << grid.rows << " cols=" << grid.cols << " dx=" << fmt(grid.dx)
     << " dy=" << fmt(grid.dy) << '\n';
  write_block(os, grid.value);
  os << "# grad\n";
  write_block(os, grid.grad);
  os.flush();
  if (!os) throw std::runtime_error("dump_value_grid: write failed for " + path);
}

}  // namespace arl
