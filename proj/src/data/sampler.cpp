#include "arl/data/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace arl {

void validate(const GoalSampleConfig& cfg) {
  if (cfg.p_cur < 0 || cfg.p_traj < 0 || cfg.p_rand < 0)
    throw std::invalid_argument("goal config: negative probability");
  if (std::abs(cfg.p_cur + cfg.p_traj + cfg.p_rand - 1.0) > 1e-12)
    throw std::invalid_argument("goal config: probabilities must sum to 1");
  if (cfg.discount <= 0 || cfg.discount >= 1)
    throw std::invalid_argument("goal config: discount must lie in (0,1)");
}

int waypoint_index(int horizon, int t, int n) {
  if (t < 0 || t > horizon) throw std::invalid_argument("waypoint: t outside trajectory");
  return std::min(t + n, horizon);
}

int geometric_offset(double discount, int m, Rng& rng) {
  if (m <= 1) return m;
  const double q = discount;
  const double u = rng.uniform();
  // Invert the truncated CDF (1 - q^k) / (1 - q^m).
  const int k = int(std::ceil(std::log1p(-u * (1.0 - std::pow(q, m))) / std::log(q)));
  return std::clamp(k, 1, m);
}

GoalDraw sample_goal(const Dataset& d, int traj, int t, const GoalSampleConfig& cfg, Rng& rng) {
  const int H = d.horizon(traj);
  const double u = rng.uniform();
  if (u < cfg.p_cur) return {traj, t, Prov::cur};
  if (u < cfg.p_cur + cfg.p_traj) {
    const int m = H - t;
    if (m <= 0) return {traj, H, Prov::traj};
    const int delta = cfg.geometric ? geometric_offset(cfg.discount, m, rng)
                                    : 1 + int(rng.uniform_int(uint64_t(m)));
    return {traj, t + delta, Prov::traj};
  }
  // Uniform over every state in the dataset.
  const int64_t flat = int64_t(rng.uniform_int(uint64_t(d.state_count())));
  const auto it = std::upper_bound(d.state_offsets.begin(), d.state_offsets.end(), flat);
  const int i = int(it - d.state_offsets.begin()) - 1;
  return {i, int(flat - d.state_offsets[i]), Prov::rand};
}

double relabel_reward(const MazeSpec& spec, const Vec& s_obs, const Vec& goal_obs) {
  EnvState s;
  if (spec.continuous) {
    s = make_state(spec, Vec2(s_obs(0), s_obs(1)));
  } else {
    const int r = int(std::lround(s_obs(0))), c = int(std::lround(s_obs(1)));
    s = make_state_cell(spec, spec.cell_index(r, c));
  }
  return reward(spec, s, goal_from_obs(spec, goal_obs));
}

SampledBatch sample_batch(const Dataset& d, const MazeSpec& spec, int batch_size,
                          const GoalSampleConfig& cfg, int n, Rng& rng) {
  if (batch_size < 1) throw std::invalid_argument("sample_batch: batch_size must be >= 1");
  if (d.index.empty()) throw std::invalid_argument("sample_batch: empty dataset");
  validate(cfg);

  SampledBatch b;
  b.s.resize(batch_size, d.state_dim);
  b.a.resize(batch_size, d.action_dim);
  b.sp.resize(batch_size, d.state_dim);
  b.gs.resize(batch_size, d.state_dim);
  b.g.resize(batch_size, d.state_dim);
  b.r_gs.resize(batch_size);
  b.r_g.resize(batch_size);
  b.prov.resize(batch_size);
  b.traj.resize(batch_size);
  b.t.resize(batch_size);

  for (int i = 0; i < batch_size; ++i) {
    const auto [traj, t] = d.index[rng.uniform_int(uint64_t(d.index.size()))];
    const auto& tr = d.trajs[traj];
    const int wp = waypoint_index(d.horizon(traj), t, n);
    const GoalDraw gd = sample_goal(d, traj, t, cfg, rng);
    b.s.row(i) = tr.states.row(t);
    b.a.row(i) = tr.actions.row(t);
    b.sp.row(i) = tr.states.row(t + 1);
    b.gs.row(i) = tr.states.row(wp);
    b.g.row(i) = d.trajs[gd.traj].states.row(gd.idx);
    b.r_gs(i) = relabel_reward(spec, b.s.row(i).transpose(), b.gs.row(i).transpose());
    b.r_g(i) = relabel_reward(spec, b.s.row(i).transpose(), b.g.row(i).transpose());
    b.prov[i] = gd.prov;
    b.traj[i] = traj;
    b.t[i] = t;
  }
  return b;
}

}  // namespace arl
