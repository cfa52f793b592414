#include "arl/tabular/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/LU>

namespace arl {

namespace {

std::string pair_msg(int s, int g) {
  return "goal " + std::to_string(g) + " unreachable from state " + std::to_string(s);
}

/// Predecessor lists under any action; shared by the reachability checks.
std::vector<std::vector<int>> reverse_edges(const FiniteMDP& mdp) {
  std::vector<std::vector<int>> rev(mdp.n_states);
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a) rev[mdp.next_of(s, a)].push_back(s);
  return rev;
}

/// BFS step counts toward g over reversed edges; -1 where g is unreachable.
std::vector<int> distances_to(const FiniteMDP& mdp, const std::vector<std::vector<int>>& rev,
                              int g) {
  std::vector<int> dist(mdp.n_states, -1);
  std::deque<int> frontier{g};
  dist[g] = 0;
  while (!frontier.empty()) {
    const int x = frontier.front();
    frontier.pop_front();
    for (int p : rev[x])
      if (dist[p] < 0) {
        dist[p] = dist[x] + 1;
        frontier.push_back(p);
      }
  }
  return dist;
}

void require_reachable(const FiniteMDP& mdp, const std::vector<int>& dist, int g) {
  for (int s = 0; s < mdp.n_states; ++s)
    if (dist[s] < 0) throw std::invalid_argument("tabular: " + pair_msg(s, g));
}

void check_policy(const FiniteMDP& mdp, const PolicyTable& pi) {
  if (int(pi.size()) != int(mdp.goals.size()))
    throw std::invalid_argument("occupancy: policy table does not cover the goal set");
  for (const Mat& m : pi) {
    if (m.rows() != mdp.n_states || m.cols() != mdp.n_actions)
      throw std::invalid_argument("occupancy: policy matrix shape mismatch");
    if ((m.array() < 0.0).any())
      throw std::invalid_argument("occupancy: negative action probability");
    for (int s = 0; s < mdp.n_states; ++s)
      if (std::abs(m.row(s).sum() - 1.0) > 1e-9)
        throw std::invalid_argument("occupancy: policy row does not sum to one");
  }
}

}  // namespace

void validate(const FiniteMDP& mdp) {
  if (mdp.n_states < 1 || mdp.n_actions < 1)
    throw std::invalid_argument("tabular: empty state or action space");
  if (int(mdp.next.size()) != mdp.n_states * mdp.n_actions)
    throw std::invalid_argument("tabular: transition table size mismatch");
  for (int t : mdp.next)
    if (t < 0 || t >= mdp.n_states) throw std::invalid_argument("tabular: successor out of range");
  if (mdp.goals.empty()) throw std::invalid_argument("tabular: empty goal set");
  std::vector<uint8_t> seen(mdp.n_states, 0);
  for (int g : mdp.goals) {
    if (g < 0 || g >= mdp.n_states) throw std::invalid_argument("tabular: goal out of range");
    if (seen[g]++) throw std::invalid_argument("tabular: duplicate goal " + std::to_string(g));
  }
  if (!(mdp.gamma >= 0.0 && mdp.gamma < 1.0))
    throw std::invalid_argument("tabular: discount must lie in [0, 1)");
  if (mdp.has_coords() && int(mdp.coords.size()) != mdp.n_states)
    throw std::invalid_argument("tabular: coords size mismatch");
  const auto rev = reverse_edges(mdp);
  for (int g : mdp.goals) require_reachable(mdp, distances_to(mdp, rev, g), g);
}

VIResult value_iteration(const FiniteMDP& mdp, int g) {
  if (std::find(mdp.goals.begin(), mdp.goals.end(), g) == mdp.goals.end())
    throw std::invalid_argument("value_iteration: " + std::to_string(g) + " is not a goal");
  const auto dist = distances_to(mdp, reverse_edges(mdp), g);
  require_reachable(mdp, dist, g);

  // Jacobi sweeps reach the exact fixed point once values have propagated
  // across the longest shortest path, so n_states + 2 sweeps always suffice.
  VIResult out;
  out.v = Vec::Zero(mdp.n_states);
  Vec fresh = out.v;
  for (int it = 0; it < mdp.n_states + 2; ++it) {
    double resid = 0.0;
    for (int s = 0; s < mdp.n_states; ++s) {
      if (s == g) {
        fresh(s) = 0.0;
        continue;
      }
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < mdp.n_actions; ++a)
        best = std::max(best, -1.0 + mdp.gamma * out.v(mdp.next_of(s, a)));
      resid = std::max(resid, std::abs(best - out.v(s)));
      fresh(s) = best;
    }
    out.v.swap(fresh);
    ++out.sweeps;
    if (resid < 1e-15) break;
  }

  out.greedy.assign(mdp.n_states, 0);
  for (int s = 0; s < mdp.n_states; ++s) {
    if (s == g) continue;
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < mdp.n_actions; ++a)
      best = std::max(best, -1.0 + mdp.gamma * out.v(mdp.next_of(s, a)));
    for (int a = 0; a < mdp.n_actions; ++a)
      if (-1.0 + mdp.gamma * out.v(mdp.next_of(s, a)) >= best - 1e-9) {
        out.greedy[s] = a;
        break;
      }
  }
  return out;
}

std::vector<std::vector<int>> optimal_action_sets(const FiniteMDP& mdp, const Vec& v, int g,
                                                  double tol) {
  std::vector<std::vector<int>> sets(mdp.n_states);
  for (int s = 0; s < mdp.n_states; ++s) {
    if (s == g) {
      sets[s].resize(mdp.n_actions);
      for (int a = 0; a < mdp.n_actions; ++a) sets[s][a] = a;
      continue;
    }
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < mdp.n_actions; ++a)
      best = std::max(best, -1.0 + mdp.gamma * v(mdp.next_of(s, a)));
    for (int a = 0; a < mdp.n_actions; ++a)
      if (-1.0 + mdp.gamma * v(mdp.next_of(s, a)) >= best - tol) sets[s].push_back(a);
  }
  return sets;
}

int greedy_path_length(const FiniteMDP& mdp, const std::vector<int>& greedy, int s, int g) {
  int steps = 0;
  while (s != g) {
    if (++steps > mdp.n_states)
      throw std::runtime_error("greedy_path_length: cycle without reaching " + std::to_string(g));
    s = mdp.next_of(s, greedy[s]);
  }
  return steps;
}

PolicyTable greedy_policy(const FiniteMDP& mdp) {
  PolicyTable pi;
  pi.reserve(mdp.goals.size());
  for (int g : mdp.goals) {
    const VIResult vi = value_iteration(mdp, g);
    Mat m = Mat::Zero(mdp.n_states, mdp.n_actions);
    for (int s = 0; s < mdp.n_states; ++s) m(s, vi.greedy[s]) = 1.0;
    pi.push_back(std::move(m));
  }
  return pi;
}

PolicyTable behaviour_policy(const FiniteMDP& mdp, const Behaviour& b) {
  if (!(b.eps >= 0.0 && b.eps <= 1.0))
    throw std::invalid_argument("behaviour_policy: eps must lie in [0, 1]");
  PolicyTable pi;
  pi.reserve(mdp.goals.size());
  const double u = 1.0 / mdp.n_actions;
  for (int g : mdp.goals) {
    const bool expert = b.expert_goals.empty() ||
                        std::find(b.expert_goals.begin(), b.expert_goals.end(), g) !=
                            b.expert_goals.end();
    Mat m = Mat::Constant(mdp.n_states, mdp.n_actions, u);
    if (expert) {
      const VIResult vi = value_iteration(mdp, g);
      m *= b.eps;
      for (int s = 0; s < mdp.n_states; ++s) m(s, vi.greedy[s]) += 1.0 - b.eps;
    }
    pi.push_back(std::move(m));
  }
  return pi;
}

double OccupancyTable::total_mass() const {
  double sum = 0.0;
  for (const Mat& m : per_goal) sum += m.sum();
  return sum;
}

Vec discounted_occupancy(const Mat& P, const Vec& mu0, double gamma) {
  const int n = int(P.rows());
  if (P.cols() != n || mu0.size() != n)
    throw std::invalid_argument("discounted_occupancy: shape mismatch");
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw std::invalid_argument("discounted_occupancy: discount must lie in [0, 1)");
  for (int i = 0; i < n; ++i)
    if ((P.row(i).array() < 0.0).any() || std::abs(P.row(i).sum() - 1.0) > 1e-9)
      throw std::invalid_argument("discounted_occupancy: row " + std::to_string(i) +
                                  " is not a distribution");
  if ((mu0.array() < 0.0).any() || std::abs(mu0.sum() - 1.0) > 1e-9)
    throw std::invalid_argument("discounted_occupancy: mu0 is not a distribution");

  // Forward reachability from the start support; everything else carries
  // exactly zero mass and is pinned so support mismatches stay exact.
  std::vector<uint8_t> live(n, 0);
  std::deque<int> frontier;
  for (int i = 0; i < n; ++i)
    if (mu0(i) > 0.0) {
      live[i] = 1;
      frontier.push_back(i);
    }
  while (!frontier.empty()) {
    const int i = frontier.front();
    frontier.pop_front();
    for (int j = 0; j < n; ++j)
      if (P(i, j) > 0.0 && !live[j]) {
        live[j] = 1;
        frontier.push_back(j);
      }
  }

  const Mat A = Mat::Identity(n, n) - gamma * P.transpose();
  const Vec b = (1.0 - gamma) * mu0;
  Vec rho = Eigen::PartialPivLU<Mat>(A).solve(b);
  if ((A * rho - b).cwiseAbs().maxCoeff() > 1e-9)
    throw std::runtime_error("discounted_occupancy: singular flow system");
  for (int i = 0; i < n; ++i) rho(i) = live[i] ? std::max(rho(i), 0.0) : 0.0;
  return rho;
}

OccupancyTable occupancy(const FiniteMDP& mdp, const PolicyTable& pi, double gamma) {
  check_policy(mdp, pi);
  OccupancyTable out;
  out.goals = mdp.goals;
  out.gamma = gamma;
  out.per_goal.reserve(mdp.goals.size());
  const Vec mu0 = Vec::Constant(mdp.n_states, 1.0 / mdp.n_states);
  for (size_t gi = 0; gi < mdp.goals.size(); ++gi) {
    const int g = mdp.goals[gi];
    Mat P = Mat::Zero(mdp.n_states, mdp.n_states);
    for (int s = 0; s < mdp.n_states; ++s) {
      if (s == g) {
        P(s, s) = 1.0;  // absorbing once the goal is reached
        continue;
      }
      for (int a = 0; a < mdp.n_actions; ++a) P(s, mdp.next_of(s, a)) += pi[gi](s, a);
    }
    const Vec rho = discounted_occupancy(P, mu0, gamma);
    if (std::abs(rho.sum() - 1.0) > 1e-9)
      throw std::runtime_error("occupancy: goal slice drifted from unit mass");
    out.per_goal.push_back(rho.asDiagonal() * pi[gi]);
  }
  return out;
}

FiniteMDP lift_mdp(const FiniteMDP& mdp, int n) {
  if (n < 1) throw std::invalid_argument("lift_mdp: option length must be positive");
  FiniteMDP base = mdp;
  base.goals.resize(mdp.n_states);
  for (int w = 0; w < mdp.n_states; ++w) base.goals[w] = w;

  FiniteMDP high;
  high.n_states = mdp.n_states;
  high.n_actions = mdp.n_states;  // one waypoint option per state
  high.goals = mdp.goals;
  high.gamma = std::pow(mdp.gamma, n);
  high.coords = mdp.coords;
  high.next.resize(mdp.n_states * mdp.n_states);
  for (int w = 0; w < mdp.n_states; ++w) {
    const VIResult vi = value_iteration(base, w);
    for (int s = 0; s < mdp.n_states; ++s) {
      int x = s;
      for (int k = 0; k < n && x != w; ++k) x = mdp.next_of(x, vi.greedy[x]);
      high.next[s * mdp.n_states + w] = x;
    }
  }
  return high;
}

FiniteMDP low_mdp(const FiniteMDP& mdp, int n) {
  if (n < 1) throw std::invalid_argument("low_mdp: option length must be positive");
  FiniteMDP low = mdp;
  low.goals.resize(mdp.n_states);
  for (int w = 0; w < mdp.n_states; ++w) low.goals[w] = w;
  low.gamma = 1.0 - 1.0 / n;
  return low;
}

MazeMdp mdp_from_maze(const MazeSpec& spec, double gamma, const std::vector<int>& goal_cells) {
  if (!spec.teleports.empty())
    throw std::invalid_argument("mdp_from_maze: teleport pads make transitions stochastic");
  MazeSpec grid = spec;
  grid.continuous = false;  // cell-level abstraction uses the discrete stepper

  MazeMdp out;
  out.state_of_cell.assign(grid.rows * grid.cols, -1);
  out.cell_of_state = grid.free_cells();
  for (size_t s = 0; s < out.cell_of_state.size(); ++s)
    out.state_of_cell[out.cell_of_state[s]] = int(s);

  FiniteMDP& mdp = out.mdp;
  mdp.n_states = int(out.cell_of_state.size());
  mdp.n_actions = MazeSpec::kNumDiscreteActions;
  mdp.gamma = gamma;
  mdp.next.resize(mdp.n_states * mdp.n_actions);
  mdp.coords.resize(mdp.n_states);
  Rng unused(0);
  for (int s = 0; s < mdp.n_states; ++s) {
    const int cell = out.cell_of_state[s];
    mdp.coords[s] = {grid.cell_row(cell), grid.cell_col(cell)};
    for (int a = 0; a < mdp.n_actions; ++a) {
      Vec act(1);
      act << double(a);
      const EnvState nx = step(grid, make_state_cell(grid, cell), act, unused);
      mdp.next[s * mdp.n_actions + a] = out.state_of_cell[nx.cell];
    }
  }

  if (goal_cells.empty()) {
    mdp.goals.resize(mdp.n_states);
    for (int s = 0; s < mdp.n_states; ++s) mdp.goals[s] = s;
  } else {
    for (int c : goal_cells) {
      if (c < 0 || c >= grid.rows * grid.cols || out.state_of_cell[c] < 0)
        throw std::invalid_argument("mdp_from_maze: goal cell " + std::to_string(c) +
                                    " is not a free cell");
      mdp.goals.push_back(out.state_of_cell[c]);
    }
  }
  validate(mdp);
  return out;
}

FiniteMDP random_finite_mdp(int n_states, int n_actions, int n_goals, double gamma, Rng& rng) {
  if (n_states < 1 || n_actions < 1 || n_goals < 1 || n_goals > n_states)
    throw std::invalid_argument("random_finite_mdp: bad sizes");
  FiniteMDP mdp;
  mdp.n_states = n_states;
  mdp.n_actions = n_actions;
  mdp.gamma = gamma;
  mdp.next.resize(n_states * n_actions);

  std::vector<int> perm(n_states);
  for (int i = 0; i < n_states; ++i) perm[i] = i;
  for (int i = n_states - 1; i > 0; --i)
    std::swap(perm[i], perm[rng.uniform_int(uint64_t(i) + 1)]);
  for (int i = 0; i < n_states; ++i)
    mdp.next[perm[i] * n_actions] = perm[(i + 1) % n_states];
  for (int s = 0; s < n_states; ++s)
    for (int a = 1; a < n_actions; ++a)
      mdp.next[s * n_actions + a] = int(rng.uniform_int(uint64_t(n_states)));

  std::vector<int> ids = perm;
  for (int i = n_states - 1; i > 0; --i)
    std::swap(ids[i], ids[rng.uniform_int(uint64_t(i) + 1)]);
  mdp.goals.assign(ids.begin(), ids.begin() + n_goals);
  std::sort(mdp.goals.begin(), mdp.goals.end());
  validate(mdp);
  return mdp;
}

}  // namespace arl
