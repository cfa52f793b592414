#include <doctest.h>

#include <cmath>
#include <sstream>

#include "arl/data/sampler.hpp"
#include "arl/envs/scripted.hpp"

using namespace arl;

namespace {

Dataset tiny_dataset(const MazeSpec& m, int n, int h, uint64_t seed) {
  return generate_dataset(m, "stitch", n, h, 0.1, seed);
}

}  // namespace

TEST_CASE("waypoint index clamps at the trajectory end") {
  CHECK(waypoint_index(50, 0, 5) == 5);
  CHECK(waypoint_index(50, 48, 5) == 50);
  CHECK(waypoint_index(50, 7, 0) == 7);
  CHECK_THROWS(waypoint_index(50, 51, 5));
}

TEST_CASE("goal config validation") {
  CHECK_THROWS(validate(GoalSampleConfig{0.5, 0.4, 0.2, false, 0.9}));
  CHECK_THROWS(validate(GoalSampleConfig{-0.1, 1.0, 0.1, false, 0.9}));
  CHECK_THROWS(validate(GoalSampleConfig{0.2, 0.5, 0.3, true, 1.0}));
  CHECK_NOTHROW(validate(GoalSampleConfig{0.2, 0.5, 0.3, false, 0.99}));
}

TEST_CASE("sample_goal branch behavior") {
  const MazeSpec m = builtin_maze("open5");
  const Dataset d = tiny_dataset(m, 3, 10, 1);
  Rng rng(5);

  GoalSampleConfig cur{1.0, 0.0, 0.0, false, 0.9};
  for (int t = 0; t < 10; ++t) {
    const GoalDraw g = sample_goal(d, 1, t, cur, rng);
    CHECK(g.traj == 1);
    CHECK(g.idx == t);
    CHECK(g.prov == Prov::cur);
  }

  // only future index at the terminal anchor
  GoalSampleConfig traj{0.0, 1.0, 0.0, false, 0.9};
  const GoalDraw g = sample_goal(d, 0, 10, traj, rng);
  CHECK(g.idx == 10);
  CHECK(g.prov == Prov::traj);

  // future draws never look backwards
  for (int i = 0; i < 2000; ++i) {
    const GoalDraw f = sample_goal(d, 2, 4, traj, rng);
    CHECK(f.traj == 2);
    CHECK(f.idx > 4);
    CHECK(f.idx <= 10);
  }
}

TEST_CASE("geometric offsets match the truncated mass function") {
  const int m = 30;
  const double q = 0.9;
  Rng rng(17);
  const int draws = 1000000;
  std::vector<int> count(m + 1, 0);
  for (int i = 0; i < draws; ++i) {
    const int k = geometric_offset(q, m, rng);
    REQUIRE(k >= 1);
    REQUIRE(k <= m);
    ++count[k];
  }
  const double z = (1.0 - std::pow(q, m)) / (1.0 - q);
  double chi2 = 0;
  for (int k = 1; k <= m; ++k) {
    const double expect = draws * std::pow(q, k - 1) / z;
    chi2 += (count[k] - expect) * (count[k] - expect) / expect;
  }
  CHECK(chi2 < 60.0);  // chi-square .999 quantile at 29 dof is 58.3

  CHECK(geometric_offset(q, 1, rng) == 1);
}

TEST_CASE("relabelled rewards mirror the environment goal test") {
  const MazeSpec m = builtin_maze("open5");
  Vec s(2), g(2);
  s << 2.5, 2.5;
  g << 2.5, 2.5;
  CHECK(relabel_reward(m, s, g) == 0.0);
  g << 2.5 + m.goal_radius, 2.5;  // exactly on the closed boundary
  CHECK(relabel_reward(m, s, g) == 0.0);
  g << 0.5, 0.5;
  CHECK(relabel_reward(m, s, g) == -1.0);

  MazeSpec md = builtin_maze("open3");
  md.continuous = false;
  s << 1, 2;
  g << 1, 2;
  CHECK(relabel_reward(md, s, g) == 0.0);
  g << 0, 2;
  CHECK(relabel_reward(md, s, g) == -1.0);
}

TEST_CASE("sample_batch shape, determinism, and waypoint placement") {
  const MazeSpec m = builtin_maze("open5");
  const Dataset d = tiny_dataset(m, 4, 12, 3);
  GoalSampleConfig cfg{0.2, 0.5, 0.3, false, 0.99};

  Rng r1(21), r2(21);
  const SampledBatch b1 = sample_batch(d, m, 64, cfg, 5, r1);
  const SampledBatch b2 = sample_batch(d, m, 64, cfg, 5, r2);
  CHECK(b1.rows() == 64);
  CHECK(b1.s == b2.s);
  CHECK(b1.a == b2.a);
  CHECK(b1.g == b2.g);
  CHECK(b1.gs == b2.gs);
  CHECK(b1.r_g == b2.r_g);

  CHECK_THROWS(sample_batch(d, m, 0, cfg, 5, r1));

  for (int i = 0; i < b1.rows(); ++i) {
    const auto& tr = d.trajs[b1.traj[i]];
    const int t = b1.t[i];
    CHECK(b1.s.row(i) == tr.states.row(t));
    CHECK(b1.a.row(i) == tr.actions.row(t));
    CHECK(b1.sp.row(i) == tr.states.row(t + 1));
    const int wp = waypoint_index(d.horizon(b1.traj[i]), t, 5);
    CHECK(wp >= t);
    CHECK(b1.gs.row(i) == tr.states.row(wp));
    CHECK((b1.r_g(i) == 0.0 || b1.r_g(i) == -1.0));
    CHECK(b1.r_g(i) == relabel_reward(m, b1.s.row(i).transpose(), b1.g.row(i).transpose()));
  }
}

TEST_CASE("goal provenance frequencies track the configured mixture") {
  const MazeSpec m = builtin_maze("open5");
  const Dataset d = tiny_dataset(m, 6, 20, 9);
  const GoalSampleConfig cfg{0.10, 0.85, 0.05, true, 0.95};
  Rng rng(33);
  const int n = 100000;
  const SampledBatch b = sample_batch(d, m, n, cfg, 5, rng);
  int c[3] = {0, 0, 0};
  for (const Prov p : b.prov) ++c[int(p)];
  const double ps[3] = {cfg.p_cur, cfg.p_traj, cfg.p_rand};
  for (int k = 0; k < 3; ++k) {
    const double sd = std::sqrt(n * ps[k] * (1 - ps[k]));
    CHECK(std::abs(c[k] - n * ps[k]) <= 3 * sd);
  }
}

TEST_CASE("dataset binary round trip and csv export") {
  const MazeSpec m = builtin_maze("open5");
  const Dataset d = tiny_dataset(m, 3, 8, 5);
  save_dataset(d, "tmp_roundtrip.bin");
  const Dataset back = load_dataset("tmp_roundtrip.bin");
  CHECK(back.env_name == d.env_name);
  CHECK(back.env_text == d.env_text);
  CHECK(back.state_dim == d.state_dim);
  CHECK(back.trajs.size() == d.trajs.size());
  CHECK(dataset_hash(back) == dataset_hash(d));
  for (size_t i = 0; i < d.trajs.size(); ++i) {
    CHECK(back.trajs[i].states == d.trajs[i].states);
    CHECK(back.trajs[i].actions == d.trajs[i].actions);
  }

  std::ostringstream csv;
  export_csv(d, csv);
  int lines = 0;
  for (char ch : csv.str())
    if (ch == '\n') ++lines;
  CHECK(lines == d.transitions() + 1);
  CHECK(csv.str().substr(0, 6) == "traj,t");

  CHECK_THROWS(load_dataset("no_such_file.bin"));
}
