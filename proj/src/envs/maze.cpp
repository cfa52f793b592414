#include "arl/envs/maze.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace arl {

bool MazeSpec::is_teleport(int idx) const {
  return std::find(teleports.begin(), teleports.end(), idx) != teleports.end();
}

int MazeSpec::cell_of(const Vec2& p) const {
  if (!std::isfinite(p(0)) || !std::isfinite(p(1))) return cell_index(0, 0);
  int c = int(std::floor(p(0) / cell_size));
  int r = int(std::floor(p(1) / cell_size));
  c = std::clamp(c, 0, cols - 1);
  r = std::clamp(r, 0, rows - 1);
  return cell_index(r, c);
}

std::vector<int> MazeSpec::free_cells() const {
  std::vector<int> out;
  for (int i = 0; i < rows * cols; ++i)
    if (free_cell(i)) out.push_back(i);
  return out;
}

MazeSpec parse_maze(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "maze v1")
    throw std::invalid_argument("maze: missing 'maze v1' header");

  MazeSpec spec;
  while (std::getline(in, line)) {
    if (line == "grid") break;
    std::istringstream kv(line);
    std::string key;
    kv >> key;
    if (key.empty()) continue;
    if (key == "name")
      kv >> spec.name;
    else if (key == "continuous") {
      int v;
      kv >> v;
      spec.continuous = v != 0;
    } else if (key == "cell_size")
      kv >> spec.cell_size;
    else if (key == "max_step_size")
      kv >> spec.max_step_size;
    else if (key == "goal_radius")
      kv >> spec.goal_radius;
    else
      throw std::invalid_argument("maze: unknown header key '" + key + "'");
  }

  std::vector<std::string> grid;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    grid.push_back(line);
  }
  if (grid.empty()) throw std::invalid_argument("maze: empty grid");
  spec.rows = int(grid.size());
  spec.cols = int(grid[0].size());
  spec.wall.assign(spec.rows * spec.cols, 0);
  for (int r = 0; r < spec.rows; ++r) {
    if (int(grid[r].size()) != spec.cols)
      throw std::invalid_argument("maze: ragged grid rows");
    for (int c = 0; c < spec.cols; ++c) {
      const int idx = spec.cell_index(r, c);
      switch (grid[r][c]) {
        case '#':
          spec.wall[idx] = 1;
          break;
        case '.':
          break;
        case 'S':
          spec.starts.push_back(idx);
          break;
        case 'T':
          spec.teleports.push_back(idx);
          break;
        default:
          throw std::invalid_argument("maze: bad grid char");
      }
    }
  }
  if (spec.free_cells().empty()) throw std::invalid_argument("maze: no free cells");
  if (spec.cell_size <= 0 || spec.max_step_size <= 0 || spec.goal_radius < 0)
    throw std::invalid_argument("maze: nonpositive geometry");
  return spec;
}

MazeSpec load_maze(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("maze: cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_maze(ss.str());
}

std::string maze_text(const MazeSpec& spec) {
  std::ostringstream out;
  out << "maze v1\n";
  out << "name " << spec.name << "\n";
  out << "continuous " << (spec.continuous ? 1 : 0) << "\n";
  out << "cell_size " << spec.cell_size << "\n";
  out << "max_step_size " << spec.max_step_size << "\n";
  out << "goal_radius " << spec.goal_radius << "\n";
  out << "grid\n";
  for (int r = 0; r < spec.rows; ++r) {
    for (int c = 0; c < spec.cols; ++c) {
      const int idx = spec.cell_index(r, c);
      char ch = spec.wall[idx] ? '#' : '.';
      if (!spec.wall[idx]) {
        if (std::find(spec.starts.begin(), spec.starts.end(), idx) != spec.starts.end())
          ch = 'S';
        else if (spec.is_teleport(idx))
          ch = 'T';
      }
      out << ch;
    }
    out << "\n";
  }
  return out.str();
}

namespace {

MazeSpec from_rows(const std::string& name, const std::vector<std::string>& rows,
                   bool continuous) {
  std::ostringstream out;
  out << "maze v1\nname " << name << "\ncontinuous " << (continuous ? 1 : 0) << "\ngrid\n";
  for (const auto& r : rows) out << r << "\n";
  return parse_maze(out.str());
}

}  // namespace

bool is_builtin_maze(const std::string& name) {
  return name == "open3" || name == "open5" || name == "open7" || name == "pointmaze15" ||
         name == "gridmaze15" || name == "teleport7";
}

MazeSpec builtin_maze(const std::string& name) {
  if (name == "open3") return from_rows(name, {"...", ".S.", "..."}, true);
  if (name == "open5")
    return from_rows(name, {".....", ".....", "..S..", ".....", "....."}, true);
  if (name == "open7")
    return from_rows(name,
                     {".......", ".......", ".......", "...S...", ".......", ".......",
                      "......."},
                     true);
  if (name == "teleport7")
    return from_rows(name,
                     {".......", ".T.....", ".......", "...S...", ".......", ".....T.",
                      "......."},
                     true);
  // Three open rooms joined by offset gaps; the serpentine keeps long
  // flood-fill distances (up to ~44 cells) inside a 15x15 footprint.
  if (name == "pointmaze15" || name == "gridmaze15") {
    std::vector<std::string> rows = {
        "###############",
        "#S............#",
        "#.............#",
        "#.............#",
        "#.............#",
        "###########...#",
        "#.............#",
        "#.............#",
        "#.............#",
        "#...###########",
        "#.............#",
        "#.............#",
        "#.............#",
        "#.............#",
        "###############",
    };
    return from_rows(name, rows, name == "pointmaze15");
  }
  throw std::invalid_argument("unknown builtin maze '" + name + "'");
}

EnvState make_state(const MazeSpec& spec, const Vec2& pos) {
  EnvState s;
  s.pos = pos;
  s.cell = spec.cell_of(pos);
  return s;
}

EnvState make_state_cell(const MazeSpec& spec, int cell) {
  EnvState s;
  s.pos = spec.cell_center(cell);
  s.cell = cell;
  return s;
}

EnvState reset_cell(const MazeSpec& spec, int cell, Rng& stream) {
  if (!spec.continuous) return make_state_cell(spec, cell);
  const double m = 0.05 * spec.cell_size;
  const double x0 = spec.cell_col(cell) * spec.cell_size;
  const double y0 = spec.cell_row(cell) * spec.cell_size;
  Vec2 p(x0 + stream.uniform(m, spec.cell_size - m), y0 + stream.uniform(m, spec.cell_size - m));
  return make_state(spec, p);
}

EnvState reset(const MazeSpec& spec, Rng& stream) {
  const std::vector<int>& region = spec.starts.empty() ? spec.free_cells() : spec.starts;
  const int cell = region[stream.uniform_int(uint64_t(region.size()))];
  return reset_cell(spec, cell, stream);
}

Vec obs_of(const MazeSpec& spec, const EnvState& s) {
  Vec o(2);
  if (spec.continuous) {
    o << s.pos(0), s.pos(1);
  } else {
    o << double(spec.cell_row(s.cell)), double(spec.cell_col(s.cell));
  }
  return o;
}

GoalTest goal_from_obs(const MazeSpec& spec, const Vec& goal_obs) {
  GoalTest g;
  if (spec.continuous) {
    g.goal = Vec2(goal_obs(0), goal_obs(1));
    g.radius = spec.goal_radius;
    g.cell = spec.cell_of(g.goal);
  } else {
    const int r = int(std::lround(goal_obs(0)));
    const int c = int(std::lround(goal_obs(1)));
    g.cell = spec.cell_index(r, c);
    g.goal = spec.cell_center(g.cell);
    g.radius = 0;
  }
  return g;
}

GoalTest goal_at_cell(const MazeSpec& spec, int cell) {
  GoalTest g;
  g.cell = cell;
  g.goal = spec.cell_center(cell);
  g.radius = spec.continuous ? spec.goal_radius : 0.0;
  return g;
}

bool at_goal(const MazeSpec& spec, const EnvState& s, const GoalTest& g) {
  if (spec.continuous) return (s.pos - g.goal).norm() <= g.radius;
  return s.cell == g.cell;
}

double reward(const MazeSpec& spec, const EnvState& s, const GoalTest& g) {
  return at_goal(spec, s, g) ? 0.0 : -1.0;
}

namespace {

EnvState apply_teleport(const MazeSpec& spec, EnvState s, int prev_cell, Rng& stream) {
  if (s.cell == prev_cell || !spec.is_teleport(s.cell) || spec.teleports.size() < 2) return s;
  std::vector<int> exits;
  for (int t : spec.teleports)
    if (t != s.cell) exits.push_back(t);
  const int exit = exits[stream.uniform_int(uint64_t(exits.size()))];
  s.pos = spec.cell_center(exit);
  s.cell = exit;
  return s;
}

}  // namespace

EnvState step(const MazeSpec& spec, const EnvState& s, const Vec& a, Rng& env_stream) {
  EnvState out = s;
  const int prev_cell = s.cell;
  if (spec.continuous) {
    const double ax = std::clamp(a(0), -1.0, 1.0) * spec.max_step_size;
    const double ay = std::clamp(a(1), -1.0, 1.0) * spec.max_step_size;
    Vec2 p = s.pos;
    Vec2 trial(p(0) + ax, p(1));
    if (!spec.wall[spec.cell_of(trial)] && trial(0) >= 0 && trial(0) < spec.cols * spec.cell_size)
      p(0) = trial(0);
    trial = Vec2(p(0), p(1) + ay);
    if (!spec.wall[spec.cell_of(trial)] && trial(1) >= 0 && trial(1) < spec.rows * spec.cell_size)
      p(1) = trial(1);
    out.pos = p;
    out.cell = spec.cell_of(p);
  } else {
    static const int dr[4] = {-1, 1, 0, 0};
    static const int dc[4] = {0, 0, -1, 1};
    const int act = std::clamp(int(std::lround(a(0))), 0, 3);
    const int r = spec.cell_row(s.cell) + dr[act];
    const int c = spec.cell_col(s.cell) + dc[act];
    if (!spec.wall_at(r, c)) {
      out.cell = spec.cell_index(r, c);
      out.pos = spec.cell_center(out.cell);
    }
  }
  out = apply_teleport(spec, out, prev_cell, env_stream);
  out.steps = s.steps + 1;
  return out;
}

std::vector<int> flood_fill(const MazeSpec& spec, int goal_cell, bool avoid_teleports) {
  std::vector<int> dist(spec.rows * spec.cols, -1);
  if (spec.wall[goal_cell]) return dist;
  std::deque<int> q;
  dist[goal_cell] = 0;
  q.push_back(goal_cell);
  static const int dr[4] = {-1, 1, 0, 0};
  static const int dc[4] = {0, 0, -1, 1};
  while (!q.empty()) {
    const int cur = q.front();
    q.pop_front();
    const int r = spec.cell_row(cur), c = spec.cell_col(cur);
    for (int k = 0; k < 4; ++k) {
      const int nr = r + dr[k], nc = c + dc[k];
      if (spec.wall_at(nr, nc)) continue;
      const int ni = spec.cell_index(nr, nc);
      if (avoid_teleports && spec.is_teleport(ni)) continue;
      if (dist[ni] >= 0) continue;
      dist[ni] = dist[cur] + 1;
      q.push_back(ni);
    }
  }
  return dist;
}

void check_reachable(const MazeSpec& spec, const std::vector<int>& goal_cells) {
  const std::vector<int>& region = spec.starts.empty() ? spec.free_cells() : spec.starts;
  for (int g : goal_cells) {
    const std::vector<int> dist = flood_fill(spec, g);
    for (int s : region) {
      if (dist[s] < 0) {
        throw std::invalid_argument("goal cell (" + std::to_string(spec.cell_row(g)) + "," +
                                    std::to_string(spec.cell_col(g)) +
                                    ") unreachable from start cell (" +
                                    std::to_string(spec.cell_row(s)) + "," +
                                    std::to_string(spec.cell_col(s)) + ")");
      }
    }
  }
}

MazeSpec random_gridmaze(int rows, int cols, double wall_density, Rng& rng) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    MazeSpec spec;
    spec.name = "random";
    spec.rows = rows;
    spec.cols = cols;
    spec.continuous = false;
    spec.wall.assign(rows * cols, 0);
    for (auto& w : spec.wall) w = rng.uniform() < wall_density ? 1 : 0;
    const std::vector<int> free = spec.free_cells();
    if (int(free.size()) < 2) continue;
    const std::vector<int> dist = flood_fill(spec, free[0]);
    bool connected = true;
    for (int f : free) connected = connected && dist[f] >= 0;
    if (connected) return spec;
  }
  throw std::runtime_error("random_gridmaze: no connected layout found");
}

}  // namespace arl
