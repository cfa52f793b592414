#include <doctest.h>

#include <cmath>
#include <set>

#include "arl/envs/maze.hpp"
#include "arl/envs/scripted.hpp"

using namespace arl;

TEST_CASE("maze text round trip and validation") {
  const MazeSpec m = builtin_maze("pointmaze15");
  const MazeSpec back = parse_maze(maze_text(m));
  CHECK(maze_text(back) == maze_text(m));
  CHECK(back.rows == 15);
  CHECK(back.cols == 15);
  CHECK(back.continuous);
  CHECK(back.starts.size() == 1);

  CHECK_THROWS(parse_maze("not a maze"));
  CHECK_THROWS(parse_maze("maze v1\ngrid\n###\n###\n"));  // no free cells
  CHECK_THROWS(parse_maze("maze v1\ngrid\n..\n...\n"));   // ragged
  CHECK_THROWS(parse_maze("maze v1\nbogus 3\ngrid\n..\n"));
  CHECK_THROWS(builtin_maze("no_such"));
}

TEST_CASE("continuous step clips against walls per axis") {
  MazeSpec m = builtin_maze("pointmaze15");
  Rng rng(0);

  // push straight into the left border wall: x blocked, y free
  EnvState s = make_state(m, Vec2(1.05, 2.5));
  Vec a(2);
  a << -1.0, 0.3;
  EnvState s2 = step(m, s, a, rng);
  CHECK(s2.pos(0) == s.pos(0));
  CHECK(s2.pos(1) == doctest::Approx(2.5 + 0.3 * m.max_step_size));

  // zero action is the identity on position
  a.setZero();
  EnvState s3 = step(m, s, a, rng);
  CHECK(s3.pos == s.pos);
  CHECK(s3.steps == s.steps + 1);

  // free space: both axes move the full clipped amount
  a << 0.5, -1.0;
  EnvState s4 = step(m, make_state(m, Vec2(7.5, 7.5)), a, rng);
  CHECK(s4.pos(0) == doctest::Approx(7.5 + 0.5 * m.max_step_size));
  CHECK(s4.pos(1) == doctest::Approx(7.5 - m.max_step_size));

  // inputs beyond the action box are clamped, never fault
  a << 40.0, 0.0;
  EnvState s5 = step(m, make_state(m, Vec2(7.5, 7.5)), a, rng);
  CHECK(s5.pos(0) == doctest::Approx(7.5 + m.max_step_size));
}

TEST_CASE("discrete step on an open 3x3 grid") {
  MazeSpec m = builtin_maze("open3");
  m.continuous = false;
  Rng rng(0);
  EnvState c = make_state_cell(m, m.cell_index(1, 1));
  Vec a(1);
  a << 3;  // right
  CHECK(step(m, c, a, rng).cell == m.cell_index(1, 2));
  a << 0;  // up
  CHECK(step(m, c, a, rng).cell == m.cell_index(0, 1));

  // walking off the borderless grid is blocked (outside counts as wall)
  EnvState corner = make_state_cell(m, m.cell_index(0, 0));
  a << 0;
  CHECK(step(m, corner, a, rng).cell == corner.cell);
  a << 2;
  CHECK(step(m, corner, a, rng).cell == corner.cell);
}

TEST_CASE("reward is 0 inside the closed goal ball, -1 outside") {
  const MazeSpec m = builtin_maze("open5");
  GoalTest g = goal_at_cell(m, m.cell_index(2, 2));  // center (2.5, 2.5)

  CHECK(reward(m, make_state(m, Vec2(2.5, 2.5)), g) == 0.0);
  CHECK(reward(m, make_state(m, Vec2(4.5, 0.5)), g) == -1.0);
  // exactly on the radius: closed ball, still 0
  CHECK(reward(m, make_state(m, Vec2(3.0, 2.5)), g) == 0.0);
  CHECK(reward(m, make_state(m, Vec2(3.0 + 1e-9, 2.5)), g) == -1.0);

  MazeSpec md = builtin_maze("open3");
  md.continuous = false;
  GoalTest gd = goal_at_cell(md, md.cell_index(0, 2));
  CHECK(reward(md, make_state_cell(md, md.cell_index(0, 2)), gd) == 0.0);
  CHECK(reward(md, make_state_cell(md, md.cell_index(1, 2)), gd) == -1.0);
}

TEST_CASE("flood fill equals Manhattan distance on open grids") {
  const MazeSpec m = builtin_maze("open7");
  const int goal = m.cell_index(3, 2);
  const std::vector<int> d = flood_fill(m, goal);
  for (int r = 0; r < 7; ++r)
    for (int c = 0; c < 7; ++c)
      CHECK(d[m.cell_index(r, c)] == std::abs(r - 3) + std::abs(c - 2));
}

TEST_CASE("pointmaze15 serpentine distances") {
  const MazeSpec m = builtin_maze("pointmaze15");
  const std::vector<int> d = flood_fill(m, m.cell_index(1, 1));
  CHECK(d[m.cell_index(6, 12)] == 16);
  CHECK(d[m.cell_index(13, 13)] == 40);
  CHECK(d[m.cell_index(10, 1)] == 29);

  // every free cell reachable from the start region
  check_reachable(m, m.free_cells());

  // wall rows really separate the rooms
  CHECK(d[m.cell_index(5, 5)] == -1);  // wall cell
  CHECK(d[m.cell_index(6, 1)] > d[m.cell_index(1, 13)]);
}

TEST_CASE("teleport pads relocate to another pad using the stream") {
  const MazeSpec m = builtin_maze("teleport7");
  REQUIRE(m.teleports.size() == 2);
  const int pad = m.teleports[0];

  // step into the pad from the cell left of it
  const int from = m.cell_index(m.cell_row(pad), m.cell_col(pad) - 1);
  EnvState s = make_state_cell(m, from);
  Vec a(2);
  a << 1.0, 0.0;
  Rng r1(99), r2(99);
  EnvState out;
  EnvState cur = s;
  for (int i = 0; i < 30; ++i) {
    cur = step(m, cur, a, r1);
    if (cur.cell != from && m.is_teleport(cur.cell)) break;
  }
  out = cur;
  CHECK(out.cell == m.teleports[1]);  // only other pad

  // identical seed replays the identical path
  cur = s;
  for (int i = 0; i < 30; ++i) {
    EnvState nxt = step(m, cur, a, r2);
    cur = nxt;
    if (cur.cell == out.cell) break;
  }
  CHECK(cur.cell == out.cell);

  // standing on the exit pad does not re-teleport
  EnvState stay = out;
  Vec z = Vec::Zero(2);
  CHECK(step(m, stay, z, r1).cell == out.cell);
}

TEST_CASE("scripted greedy walk follows shortest paths exactly") {
  const MazeSpec m = builtin_maze("pointmaze15");
  const int start = m.cell_index(1, 1);
  const int target = m.cell_index(8, 12);
  const std::vector<int> dist = flood_fill(m, target);
  Rng rng(4);

  EnvState s = make_state_cell(m, start);
  int cell_moves = 0;
  int prev_d = dist[s.cell];
  for (int t = 0; t < 4000 && s.cell != target; ++t) {
    const Vec a = scripted_action(m, s, dist, 0.0, rng);
    EnvState nxt = step(m, s, a, rng);
    if (nxt.cell != s.cell) {
      ++cell_moves;
      CHECK(dist[nxt.cell] == dist[s.cell] - 1);  // each cell change is a shortest-path move
    }
    s = nxt;
    CHECK(dist[s.cell] <= prev_d);
    prev_d = dist[s.cell];
  }
  CHECK(s.cell == target);
  CHECK(cell_moves == dist[start]);
}

TEST_CASE("generate_dataset counts, determinism, wall safety") {
  const MazeSpec m = builtin_maze("open5");
  const Dataset d = generate_dataset(m, "stitch", 2, 5, 0.1, 7);
  CHECK(d.transitions() == 10);
  CHECK(d.trajs.size() == 2);
  CHECK(d.trajs[0].states.rows() == 6);
  CHECK(d.trajs[0].actions.rows() == 5);

  const Dataset d2 = generate_dataset(m, "stitch", 2, 5, 0.1, 7);
  CHECK(dataset_hash(d) == dataset_hash(d2));
  const Dataset d3 = generate_dataset(m, "stitch", 2, 5, 0.1, 8);
  CHECK(dataset_hash(d) != dataset_hash(d3));

  CHECK_THROWS(generate_dataset(m, "wander", 2, 5, 0.0, 7));
  CHECK_THROWS(generate_dataset(m, "stitch", 0, 5, 0.0, 7));

  // no state ever sits inside a wall, and per-axis motion never crosses one
  const MazeSpec big = builtin_maze("pointmaze15");
  const Dataset nav = generate_dataset(big, "navigate", 4, 200, 0.2, 3);
  for (const auto& tr : nav.trajs) {
    for (int t = 0; t < tr.states.rows(); ++t) {
      const Vec2 p(tr.states(t, 0), tr.states(t, 1));
      CHECK(big.free_cell(big.cell_of(p)));
      if (t < tr.actions.rows()) {
        const Vec2 q(tr.states(t + 1, 0), tr.states(t + 1, 1));
        CHECK((q - p).lpNorm<Eigen::Infinity>() <= big.max_step_size + 1e-12);
        CHECK(big.free_cell(big.cell_of(Vec2(q(0), p(1)))));  // x leg of the L-shaped move
      }
    }
  }
}

TEST_CASE("stitch trajectories stay near their anchor, navigate roams") {
  const MazeSpec m = builtin_maze("pointmaze15");
  const Dataset st = generate_dataset(m, "stitch", 40, 50, 0.05, 11);
  int max_span = 0;
  for (const auto& tr : st.trajs) {
    const int anchor = m.cell_of(Vec2(tr.states(0, 0), tr.states(0, 1)));
    const std::vector<int> ad = flood_fill(m, anchor);
    for (int t = 0; t < tr.states.rows(); ++t) {
      const int c = m.cell_of(Vec2(tr.states(t, 0), tr.states(t, 1)));
      max_span = std::max(max_span, ad[c]);
    }
  }
  CHECK(max_span <= 7);  // anchor leash (4) plus target reach (3)

  const Dataset nv = generate_dataset(m, "navigate", 4, 500, 0.05, 11);
  int nav_span = 0;
  for (const auto& tr : nv.trajs) {
    const int anchor = m.cell_of(Vec2(tr.states(0, 0), tr.states(0, 1)));
    const std::vector<int> ad = flood_fill(m, anchor);
    for (int t = 0; t < tr.states.rows(); ++t)
      nav_span = std::max(nav_span, ad[m.cell_of(Vec2(tr.states(t, 0), tr.states(t, 1)))]);
  }
  CHECK(nav_span > max_span);
}

TEST_CASE("random gridmaze is connected") {
  Rng rng(13);
  for (int i = 0; i < 10; ++i) {
    const MazeSpec m = random_gridmaze(5, 5, 0.3, rng);
    const auto free = m.free_cells();
    const auto d = flood_fill(m, free[0]);
    for (int f : free) CHECK(d[f] >= 0);
  }
}
