#include "arl/tabular/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <tuple>

#include <json.hpp>

namespace arl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void bump(Kappa& k, double ds, double db, int i0, int i1, int i2) {
  if (ds <= 0.0) return;
  const double r = db > 0.0 ? ds / db : kInf;
  if (r > k.value) {
    k.value = r;
    k.witness = {i0, i1, i2};
  }
}

void check_map(const AbstractionMap& map) {
  if (map.n_states < 1 || map.n_goals < 1 || map.n_options < 1)
    throw std::invalid_argument("abstraction: empty index space");
  if (int(map.phi_h.size()) != map.n_states * map.n_goals ||
      int(map.phi_l.size()) != map.n_states * map.n_options)
    throw std::invalid_argument("abstraction: class table size mismatch");
  std::vector<uint8_t> used_h(map.n_classes_h, 0), used_l(map.n_classes_l, 0);
  for (int c : map.phi_h) {
    if (c < 0 || c >= map.n_classes_h) throw std::invalid_argument("abstraction: class id out of range");
    used_h[c] = 1;
  }
  for (int c : map.phi_l) {
    if (c < 0 || c >= map.n_classes_l) throw std::invalid_argument("abstraction: class id out of range");
    used_l[c] = 1;
  }
  if (std::count(used_h.begin(), used_h.end(), 1) != map.n_classes_h ||
      std::count(used_l.begin(), used_l.end(), 1) != map.n_classes_l)
    throw std::invalid_argument("abstraction: class ids are not dense");
}

/// Both hierarchy levels plus their optimal decision sets, shared by the
/// abstraction factories and the report builder.
struct Levels {
  FiniteMDP high, low;
  std::vector<std::vector<std::vector<int>>> sets_h;  // [gi][s] -> optimal options
  std::vector<std::vector<std::vector<int>>> sets_l;  // [wi][s] -> optimal actions
};

Levels build_levels(const FiniteMDP& mdp, int n) {
  Levels lv;
  lv.high = lift_mdp(mdp, n);
  lv.low = low_mdp(mdp, n);
  lv.sets_h.reserve(lv.high.goals.size());
  for (int g : lv.high.goals) {
    const VIResult vi = value_iteration(lv.high, g);
    lv.sets_h.push_back(optimal_action_sets(lv.high, vi.v, g));
  }
  lv.sets_l.reserve(lv.low.goals.size());
  for (int w : lv.low.goals) {
    const VIResult vi = value_iteration(lv.low, w);
    lv.sets_l.push_back(optimal_action_sets(lv.low, vi.v, w));
  }
  return lv;
}

using ClassKey = std::tuple<int, int, std::vector<int>>;

/// Dense first-seen ids for (salt_a, salt_b, decision set) keys.
std::vector<int> dense_classes(int n_states, int n_targets,
                               const std::function<ClassKey(int, int)>& key, int* n_classes) {
  std::map<ClassKey, int> ids;
  std::vector<int> phi(size_t(n_states) * n_targets);
  for (int s = 0; s < n_states; ++s)
    for (int t = 0; t < n_targets; ++t) {
      const auto it = ids.emplace(key(s, t), int(ids.size())).first;
      phi[size_t(s) * n_targets + t] = it->second;
    }
  *n_classes = int(ids.size());
  return phi;
}

std::string pair_text(const char* target, int s, int t) {
  return "(s=" + std::to_string(s) + "," + target + "=" + std::to_string(t) + ")";
}

void check_level(const char* level, const char* target, int n_states, int n_targets,
                 const std::vector<int>& targets, const std::vector<int>& phi,
                 const std::vector<std::vector<std::vector<int>>>& sets) {
  const int n_classes = 1 + *std::max_element(phi.begin(), phi.end());
  std::vector<std::vector<int>> shared(n_classes);     // running intersections
  std::vector<std::array<int, 2>> first(n_classes, {-1, -1});
  for (int s = 0; s < n_states; ++s)
    for (int ti = 0; ti < n_targets; ++ti) {
      const int c = phi[size_t(s) * n_targets + ti];
      const std::vector<int>& mine = sets[ti][s];
      if (first[c][0] < 0) {
        first[c] = {s, targets[ti]};
        shared[c] = mine;
        continue;
      }
      std::vector<int> both;
      std::set_intersection(shared[c].begin(), shared[c].end(), mine.begin(), mine.end(),
                            std::back_inserter(both));
      if (both.empty())
        throw std::invalid_argument(
            std::string("abstraction: ") + level + " class " + std::to_string(c) + " mixes " +
            pair_text(target, first[c][0], first[c][1]) + " and " +
            pair_text(target, s, targets[ti]) + " with no shared optimal " +
            (level == std::string("high") ? "option" : "action"));
      shared[c].swap(both);
    }
}

nlohmann::json json_num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

nlohmann::json json_kappa(const Kappa& k) {
  return {{"value", json_num(k.value)}, {"witness", k.witness}};
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

}  // namespace

Kappa concentrability(const OccupancyTable& d_star, const OccupancyTable& d_bc) {
  if (d_star.goals != d_bc.goals || d_star.gamma != d_bc.gamma)
    throw std::invalid_argument("concentrability: occupancy index spaces differ");
  Kappa k;
  for (size_t gi = 0; gi < d_star.per_goal.size(); ++gi) {
    const Mat& ds = d_star.per_goal[gi];
    const Mat& db = d_bc.per_goal[gi];
    if (ds.rows() != db.rows() || ds.cols() != db.cols())
      throw std::invalid_argument("concentrability: occupancy index spaces differ");
    for (int s = 0; s < ds.rows(); ++s)
      for (int a = 0; a < ds.cols(); ++a) {
        bump(k, ds(s, a), db(s, a), s, a, int(gi));
        if (std::isinf(k.value)) return k;
      }
  }
  return k;
}

Kappa concentrability(const Mat& d_star, const Mat& d_bc) {
  if (d_star.rows() != d_bc.rows() || d_star.cols() != d_bc.cols())
    throw std::invalid_argument("concentrability: table shapes differ");
  Kappa k;
  for (int i = 0; i < d_star.rows(); ++i)
    for (int j = 0; j < d_star.cols(); ++j) {
      bump(k, d_star(i, j), d_bc(i, j), i, j, -1);
      if (std::isinf(k.value)) return k;
    }
  return k;
}

Mat aggregate(const OccupancyTable& d, const AbstractionMap& map, Level level) {
  check_map(map);
  const int n_targets = level == Level::high ? map.n_goals : map.n_options;
  const int n_classes = level == Level::high ? map.n_classes_h : map.n_classes_l;
  const std::vector<int>& phi = level == Level::high ? map.phi_h : map.phi_l;
  if (int(d.goals.size()) != n_targets)
    throw std::invalid_argument("aggregate: occupancy does not match the map's index space");
  Mat out;
  for (int ti = 0; ti < n_targets; ++ti) {
    const Mat& slice = d.per_goal[ti];
    if (slice.rows() != map.n_states)
      throw std::invalid_argument("aggregate: occupancy does not match the map's index space");
    if (out.size() == 0) out = Mat::Zero(n_classes, slice.cols());
    for (int s = 0; s < map.n_states; ++s)
      out.row(phi[size_t(s) * n_targets + ti]) += slice.row(s);
  }
  return out;
}

AbstractionMap identity_abstraction(const FiniteMDP& mdp) {
  AbstractionMap map;
  map.n_states = mdp.n_states;
  map.n_goals = int(mdp.goals.size());
  map.n_options = mdp.n_states;
  map.n_classes_h = map.n_states * map.n_goals;
  map.n_classes_l = map.n_states * map.n_options;
  map.phi_h.resize(map.n_classes_h);
  map.phi_l.resize(map.n_classes_l);
  for (int i = 0; i < map.n_classes_h; ++i) map.phi_h[i] = i;
  for (int i = 0; i < map.n_classes_l; ++i) map.phi_l[i] = i;
  return map;
}

AbstractionMap optimal_action_abstraction(const FiniteMDP& mdp, int n) {
  const Levels lv = build_levels(mdp, n);
  AbstractionMap map;
  map.n_states = mdp.n_states;
  map.n_goals = int(mdp.goals.size());
  map.n_options = mdp.n_states;
  map.phi_h = dense_classes(
      map.n_states, map.n_goals,
      [&](int s, int gi) { return ClassKey{0, 0, lv.sets_h[gi][s]}; }, &map.n_classes_h);
  map.phi_l = dense_classes(
      map.n_states, map.n_options,
      [&](int s, int wi) { return ClassKey{0, 0, lv.sets_l[wi][s]}; }, &map.n_classes_l);
  return map;
}

AbstractionMap displacement_abstraction(const FiniteMDP& mdp, int n) {
  if (!mdp.has_coords())
    throw std::invalid_argument("displacement_abstraction: instance has no coordinates");
  const Levels lv = build_levels(mdp, n);
  AbstractionMap map;
  map.n_states = mdp.n_states;
  map.n_goals = int(mdp.goals.size());
  map.n_options = mdp.n_states;
  const auto delta = [&](int s, int t) {
    return std::array<int, 2>{mdp.coords[t][0] - mdp.coords[s][0],
                              mdp.coords[t][1] - mdp.coords[s][1]};
  };
  map.phi_h = dense_classes(
      map.n_states, map.n_goals,
      [&](int s, int gi) {
        const auto d = delta(s, mdp.goals[gi]);
        return ClassKey{d[0], d[1], lv.sets_h[gi][s]};
      },
      &map.n_classes_h);
  map.phi_l = dense_classes(
      map.n_states, map.n_options,
      [&](int s, int wi) {
        const auto d = delta(s, wi);
        return ClassKey{d[0], d[1], lv.sets_l[wi][s]};
      },
      &map.n_classes_l);
  return map;
}

void check_policy_equivalence(const AbstractionMap& map, const FiniteMDP& high,
                              const FiniteMDP& low) {
  check_map(map);
  if (high.n_states != map.n_states || int(high.goals.size()) != map.n_goals ||
      high.n_actions != map.n_options || low.n_states != map.n_states ||
      int(low.goals.size()) != map.n_options)
    throw std::invalid_argument("check_policy_equivalence: level shapes do not match the map");
  std::vector<std::vector<std::vector<int>>> sets_h, sets_l;
  for (int g : high.goals) {
    const VIResult vi = value_iteration(high, g);
    sets_h.push_back(optimal_action_sets(high, vi.v, g));
  }
  for (int w : low.goals) {
    const VIResult vi = value_iteration(low, w);
    sets_l.push_back(optimal_action_sets(low, vi.v, w));
  }
  check_level("high", "g", map.n_states, map.n_goals, high.goals, map.phi_h, sets_h);
  check_level("low", "w", map.n_states, map.n_options, low.goals, map.phi_l, sets_l);
}

int relative_option_count(const FiniteMDP& mdp, int n) {
  if (!mdp.has_coords())
    throw std::invalid_argument("relative_option_count: instance has no coordinates");
  std::set<std::pair<int, int>> deltas;
  std::vector<int> dist(mdp.n_states);
  for (int s = 0; s < mdp.n_states; ++s) {
    std::fill(dist.begin(), dist.end(), -1);
    std::deque<int> frontier{s};
    dist[s] = 0;
    deltas.emplace(0, 0);
    while (!frontier.empty()) {
      const int x = frontier.front();
      frontier.pop_front();
      if (dist[x] == n) continue;
      for (int a = 0; a < mdp.n_actions; ++a) {
        const int y = mdp.next_of(x, a);
        if (dist[y] < 0) {
          dist[y] = dist[x] + 1;
          deltas.emplace(mdp.coords[y][0] - mdp.coords[s][0],
                         mdp.coords[y][1] - mdp.coords[s][1]);
          frontier.push_back(y);
        }
      }
    }
  }
  return int(deltas.size());
}

MotivationReport verify_motivation_box(const FiniteMDP& mdp, const Behaviour& behaviour,
                                       const AbstractionMap& map, int n) {
  validate(mdp);
  if (n < 1) throw std::invalid_argument("verify_motivation_box: option length must be positive");
  if (map.n_states != mdp.n_states || map.n_goals != int(mdp.goals.size()) ||
      map.n_options != mdp.n_states)
    throw std::invalid_argument("verify_motivation_box: map does not match the instance");

  const Levels lv = build_levels(mdp, n);
  check_map(map);
  check_level("high", "g", map.n_states, map.n_goals, lv.high.goals, map.phi_h, lv.sets_h);
  check_level("low", "w", map.n_states, map.n_options, lv.low.goals, map.phi_l, lv.sets_l);

  MotivationReport r;
  r.n = n;
  r.n_states = mdp.n_states;
  r.n_actions = mdp.n_actions;
  r.n_goals = int(mdp.goals.size());
  r.n_options = lv.high.n_actions;
  r.n_options_rel = mdp.has_coords() ? relative_option_count(mdp, n) : r.n_options;
  r.n_classes_h = map.n_classes_h;
  r.n_classes_l = map.n_classes_l;
  r.gamma = mdp.gamma;
  r.gamma_h = lv.high.gamma;
  r.gamma_l = lv.low.gamma;
  r.horizon_flat = 1.0 / std::pow(1.0 - r.gamma, 3);
  r.horizon_hier = 1.0 / std::pow(1.0 - r.gamma_h, 3);

  const OccupancyTable flat_star = occupancy(mdp, greedy_policy(mdp), mdp.gamma);
  const OccupancyTable flat_bc = occupancy(mdp, behaviour_policy(mdp, behaviour), mdp.gamma);
  r.kappa_flat = concentrability(flat_star, flat_bc);

  const OccupancyTable high_star = occupancy(lv.high, greedy_policy(lv.high), lv.high.gamma);
  const OccupancyTable high_bc =
      occupancy(lv.high, behaviour_policy(lv.high, behaviour), lv.high.gamma);
  r.kappa_h = concentrability(high_star, high_bc);
  r.kappa_rep_h =
      concentrability(aggregate(high_star, map, Level::high), aggregate(high_bc, map, Level::high));

  const OccupancyTable low_star = occupancy(lv.low, greedy_policy(lv.low), lv.low.gamma);
  const OccupancyTable low_bc =
      occupancy(lv.low, behaviour_policy(lv.low, behaviour), lv.low.gamma);
  r.kappa_l = concentrability(low_star, low_bc);
  r.kappa_rep_l =
      concentrability(aggregate(low_star, map, Level::low), aggregate(low_bc, map, Level::low));

  const double S = r.n_states, A = r.n_actions, G = r.n_goals, W = r.n_options;
  const double n3 = double(n) * n * n;
  r.eps_flat = std::sqrt(S * G * A * r.kappa_flat.value * r.horizon_flat);
  r.eps_hier = std::sqrt(S * G * W * r.kappa_h.value * r.horizon_hier) +
               std::sqrt(S * W * A * n3 * r.kappa_l.value);
  r.eps_hier_rep = std::sqrt(r.n_classes_h * W * r.kappa_rep_h.value * r.horizon_hier) +
                   std::sqrt(r.n_classes_l * A * n3 * r.kappa_rep_l.value);
  r.ratio_hier_flat = r.eps_hier / r.eps_flat;
  r.ratio_rep_flat = r.eps_hier_rep / r.eps_flat;
  r.ratio_rep_hier = r.eps_hier_rep / r.eps_hier;

  r.ok_horizon = r.horizon_hier <= r.horizon_flat;
  r.ok_cardinality = r.n_classes_h <= r.n_states * r.n_goals &&
                     r.n_classes_l <= r.n_states * r.n_options;
  r.ok_options = r.n_options_rel <= r.n_options;
  r.ok_kappa = r.kappa_rep_h.value <= r.kappa_h.value && r.kappa_rep_l.value <= r.kappa_l.value;
  return r;
}

std::string report_json(const MotivationReport& r) {
  nlohmann::json j{{"name", r.name},
                   {"n", r.n},
                   {"n_states", r.n_states},
                   {"n_actions", r.n_actions},
                   {"n_goals", r.n_goals},
                   {"n_options", r.n_options},
                   {"n_options_rel", r.n_options_rel},
                   {"n_classes_h", r.n_classes_h},
                   {"n_classes_l", r.n_classes_l},
                   {"gamma", r.gamma},
                   {"gamma_h", json_num(r.gamma_h)},
                   {"gamma_l", r.gamma_l},
                   {"horizon_flat", json_num(r.horizon_flat)},
                   {"horizon_hier", json_num(r.horizon_hier)},
                   {"kappa_flat", json_kappa(r.kappa_flat)},
                   {"kappa_h", json_kappa(r.kappa_h)},
                   {"kappa_l", json_kappa(r.kappa_l)},
                   {"kappa_rep_h", json_kappa(r.kappa_rep_h)},
                   {"kappa_rep_l", json_kappa(r.kappa_rep_l)},
                   {"eps_flat", json_num(r.eps_flat)},
                   {"eps_hier", json_num(r.eps_hier)},
                   {"eps_hier_rep", json_num(r.eps_hier_rep)},
                   {"ratio_hier_flat", json_num(r.ratio_hier_flat)},
                   {"ratio_rep_flat", json_num(r.ratio_rep_flat)},
                   {"ratio_rep_hier", json_num(r.ratio_rep_hier)},
                   {"ok_horizon", r.ok_horizon},
                   {"ok_cardinality", r.ok_cardinality},
                   {"ok_options", r.ok_options},
                   {"ok_kappa", r.ok_kappa},
                   {"ok", r.ok()}};
  return j.dump();
}

std::string report_csv_header() {
  return "name,n,n_states,n_actions,n_goals,n_options,n_options_rel,n_classes_h,n_classes_l,"
         "gamma,gamma_h,kappa_flat,kappa_h,kappa_l,kappa_rep_h,kappa_rep_l,"
         "eps_flat,eps_hier,eps_hier_rep,ratio_hier_flat,ratio_rep_flat,ratio_rep_hier,ok";
}

std::string report_csv_row(const MotivationReport& r) {
  std::string row = r.name;
  for (double x : {double(r.n), double(r.n_states), double(r.n_actions), double(r.n_goals),
                   double(r.n_options), double(r.n_options_rel), double(r.n_classes_h),
                   double(r.n_classes_l), r.gamma, r.gamma_h, r.kappa_flat.value, r.kappa_h.value,
                   r.kappa_l.value, r.kappa_rep_h.value, r.kappa_rep_l.value, r.eps_flat,
                   r.eps_hier, r.eps_hier_rep, r.ratio_hier_flat, r.ratio_rep_flat,
                   r.ratio_rep_hier})
    row += "," + fmt(x);
  return row + "," + (r.ok() ? "1" : "0");
}

void write_reports(const std::vector<MotivationReport>& reports, const std::string& jsonl_path,
                   const std::string& csv_path) {
  std::ofstream jf(jsonl_path);
  if (!jf) throw std::runtime_error("write_reports: cannot open " + jsonl_path);
  for (const MotivationReport& r : reports) jf << report_json(r) << "\n";
  std::ofstream cf(csv_path);
  if (!cf) throw std::runtime_error("write_reports: cannot open " + csv_path);
  cf << report_csv_header() << "\n";
  for (const MotivationReport& r : reports) cf << report_csv_row(r) << "\n";
  if (!jf.flush() || !cf.flush()) throw std::runtime_error("write_reports: write failed");
}

}  // namespace arl
