#include "arl/envs/scripted.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace arl {

namespace {

const int kDr[4] = {-1, 1, 0, 0};
const int kDc[4] = {0, 0, -1, 1};

// Best adjacent cell by distance-to-target (the current cell competes too, so
// standing at the target stays put). Lowest action index wins ties.
int best_neighbor(const MazeSpec& spec, int cell, const std::vector<int>& dist, int* action) {
  int best = cell;
  int best_d = dist[cell] >= 0 ? dist[cell] : INT32_MAX;
  int best_a = -1;
  const int r = spec.cell_row(cell), c = spec.cell_col(cell);
  for (int k = 0; k < 4; ++k) {
    const int nr = r + kDr[k], nc = c + kDc[k];
    if (spec.wall_at(nr, nc)) continue;
    const int ni = spec.cell_index(nr, nc);
    if (dist[ni] < 0) continue;
    if (dist[ni] < best_d) {
      best_d = dist[ni];
      best = ni;
      best_a = k;
    }
  }
  if (action) *action = best_a;
  return best;
}

}  // namespace

Vec scripted_action(const MazeSpec& spec, const EnvState& s,
                    const std::vector<int>& dist, double noise, Rng& rng) {
  const bool noisy = noise > 0 && rng.uniform() < noise;
  if (!spec.continuous) {
    Vec a(1);
    if (noisy) {
      a(0) = double(rng.uniform_int(4));
      return a;
    }
    int act = -1;
    best_neighbor(spec, s.cell, dist, &act);
    a(0) = act < 0 ? 0.0 : double(act);
    return a;
  }
  Vec a(2);
  if (noisy) {
    a << rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0);
    return a;
  }
  const int aim_cell = best_neighbor(spec, s.cell, dist, nullptr);
  const Vec2 d = spec.cell_center(aim_cell) - s.pos;
  a << std::clamp(d(0) / spec.max_step_size, -1.0, 1.0),
      std::clamp(d(1) / spec.max_step_size, -1.0, 1.0);
  return a;
}

namespace {

struct TargetPicker {
  const MazeSpec& spec;
  std::string style;
  std::vector<int> anchor_dist;  // stitch only
  bool avoid_pads;

  // Returns -1 when no candidate exists (triggers a trajectory re-roll).
  int pick(int cur_cell, Rng& rng) const {
    const std::vector<int> d = flood_fill(spec, cur_cell, avoid_pads);
    std::vector<int> cand;
    if (style == "navigate") {
      const int thr = std::max(1, std::max(spec.rows, spec.cols) / 2);
      for (int i = 0; i < int(d.size()); ++i)
        if (d[i] >= thr && !(avoid_pads && spec.is_teleport(i))) cand.push_back(i);
      if (cand.empty())
        for (int i = 0; i < int(d.size()); ++i)
          if (d[i] >= 1 && !(avoid_pads && spec.is_teleport(i))) cand.push_back(i);
    } else {
      for (int i = 0; i < int(d.size()); ++i)
        if (d[i] >= 1 && d[i] <= 3 && anchor_dist[i] >= 0 && anchor_dist[i] <= 4 &&
            !(avoid_pads && spec.is_teleport(i)))
          cand.push_back(i);
      if (cand.empty()) {
        // Drifted outside the anchor neighborhood (noise): hop back toward it.
        int best = INT32_MAX;
        for (int i = 0; i < int(d.size()); ++i) {
          if (d[i] < 1 || d[i] > 3 || anchor_dist[i] < 0) continue;
          if (avoid_pads && spec.is_teleport(i)) continue;
          if (anchor_dist[i] < best) {
            best = anchor_dist[i];
            cand.clear();
          }
          if (anchor_dist[i] == best) cand.push_back(i);
        }
      }
    }
    if (cand.empty()) return -1;
    return cand[rng.uniform_int(uint64_t(cand.size()))];
  }
};

bool roll_trajectory(const MazeSpec& spec, const std::string& style, int horizon, double noise,
                     Rng rng, Trajectory* out) {
  const std::vector<int> free = spec.free_cells();
  const int start = free[rng.uniform_int(uint64_t(free.size()))];
  EnvState st = reset_cell(spec, start, rng);

  TargetPicker picker{spec, style, {}, !spec.teleports.empty()};
  if (style == "stitch") picker.anchor_dist = flood_fill(spec, st.cell, picker.avoid_pads);

  const int ds = spec.state_dim(), da = spec.action_dim();
  out->states.resize(horizon + 1, ds);
  out->actions.resize(horizon, da);
  out->states.row(0) = obs_of(spec, st).transpose();

  int target = -1;
  std::vector<int> dist;
  for (int t = 0; t < horizon; ++t) {
    if (target < 0 || st.cell == target) {
      target = picker.pick(st.cell, rng);
      if (target < 0) return false;
      dist = flood_fill(spec, target, picker.avoid_pads);
      if (dist[st.cell] < 0) return false;
    }
    const Vec a = scripted_action(spec, st, dist, noise, rng);
    st = step(spec, st, a, rng);
    if (dist[st.cell] < 0) {
      // Teleported (or noise-pushed) onto a cell the current field cannot
      // steer from; drop the target and re-pick next step.
      target = -1;
    }
    out->actions.row(t) = a.transpose();
    out->states.row(t + 1) = obs_of(spec, st).transpose();
  }
  return true;
}

}  // namespace

Dataset generate_dataset(const MazeSpec& spec, const std::string& style, int n_traj, int horizon,
                         double noise, uint64_t seed) {
  if (style != "navigate" && style != "stitch")
    throw std::invalid_argument("generate_dataset: style must be navigate or stitch");
  if (n_traj < 1 || horizon < 1)
    throw std::invalid_argument("generate_dataset: need n_traj, horizon >= 1");

  Dataset d;
  d.env_name = spec.name;
  d.env_text = maze_text(spec);
  d.state_dim = spec.state_dim();
  d.action_dim = spec.action_dim();
  d.discrete_actions = !spec.continuous;
  d.trajs.resize(n_traj);

  Rng root(seed);
  for (int i = 0; i < n_traj; ++i) {
    bool ok = false;
    for (int attempt = 0; attempt < 8 && !ok; ++attempt)
      ok = roll_trajectory(spec, style, horizon, noise, root.fork(uint64_t(i) + uint64_t(attempt) * uint64_t(n_traj)),
                           &d.trajs[i]);
    if (!ok) throw std::runtime_error("generate_dataset: trajectory re-rolls exhausted");
  }
  d.rebuild_index();
  return d;
}

}  // namespace arl
