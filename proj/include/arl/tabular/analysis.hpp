#pragma once

#include <array>
#include <string>
#include <vector>

#include "arl/tabular/mdp.hpp"

namespace arl {

/// Concentrability coefficient: the supremum of d_star / d_bc over entries
/// where d_star is positive, together with the attaining index. +infinity
/// marks a support mismatch (optimal mass on an entry the behaviour data
/// never visits).
struct Kappa {
  double value = 0.0;
  std::array<int, 3> witness = {-1, -1, -1};  // (s, a, goal idx) or (class, col, -1)
};

Kappa concentrability(const OccupancyTable& d_star, const OccupancyTable& d_bc);
Kappa concentrability(const Mat& d_star, const Mat& d_bc);

enum class Level { high, low };

/// Class maps over state-goal pairs (phi_h) and state-option pairs (phi_l)
/// with dense ids. Option index wi is the waypoint's state id, matching the
/// goal order of low_mdp and the action order of lift_mdp.
struct AbstractionMap {
  int n_states = 0, n_goals = 0, n_options = 0;
  int n_classes_h = 0, n_classes_l = 0;
  std::vector<int> phi_h;  // [s * n_goals + gi] -> class
  std::vector<int> phi_l;  // [s * n_options + wi] -> class

  int class_h(int s, int gi) const { return phi_h[s * n_goals + gi]; }
  int class_l(int s, int wi) const { return phi_l[s * n_options + wi]; }
};

/// Preimage sums: high collapses d(s, g, w) to d(class, w), low collapses
/// d(s, w, a) to d(class, a). Total mass is preserved exactly.
Mat aggregate(const OccupancyTable& d, const AbstractionMap& map, Level level);

/// Singleton classes; aggregation under this map is a no-op reshape.
AbstractionMap identity_abstraction(const FiniteMDP& mdp);

/// Groups pairs sharing the same optimal decision set at their level, the
/// coarsest map that provably respects policy equivalence.
AbstractionMap optimal_action_abstraction(const FiniteMDP& mdp, int n);

/// Groups pairs by the (row, col) displacement to their target, refined by
/// the optimal decision set so translated copies of local geometry share a
/// class without ever mixing conflicting optima. Requires coords.
AbstractionMap displacement_abstraction(const FiniteMDP& mdp, int n);

/// Checks that same-class pairs share at least one optimal option (high) and
/// action (low) under the given per-level MDPs. Throws std::invalid_argument
/// naming a witnessing pair of pairs on violation.
void check_policy_equivalence(const AbstractionMap& map, const FiniteMDP& high,
                              const FiniteMDP& low);

/// Distinct displacement vectors realizable within n steps, the size of the
/// relative option set (the absolute set has one waypoint per state).
/// Requires coords.
int relative_option_count(const FiniteMDP& mdp, int n);

/// Numerical audit of the four motivation claims on one instance, plus the
/// flat / hierarchical / abstracted error terms up to their shared constant
/// (reported at N = 1 and as ratios, the only well-defined comparison).
struct MotivationReport {
  std::string name;
  int n = 1;
  int n_states = 0, n_actions = 0, n_goals = 0;
  int n_options = 0, n_options_rel = 0;
  int n_classes_h = 0, n_classes_l = 0;
  double gamma = 0.0, gamma_h = 0.0, gamma_l = 0.0;
  double horizon_flat = 0.0, horizon_hier = 0.0;  // 1/(1-gamma)^3, 1/(1-gamma^n)^3

  Kappa kappa_flat, kappa_h, kappa_l, kappa_rep_h, kappa_rep_l;

  double eps_flat = 0.0, eps_hier = 0.0, eps_hier_rep = 0.0;
  double ratio_hier_flat = 0.0, ratio_rep_flat = 0.0, ratio_rep_hier = 0.0;

  bool ok_horizon = false;      // 1/(1-gamma^n)^3 <= 1/(1-gamma)^3
  bool ok_cardinality = false;  // |C_h| <= |S||G| and |C_l| <= |S||Omega|
  bool ok_options = false;      // |Omega_rel| <= |Omega_abs|
  bool ok_kappa = false;        // kappa_rep <= kappa at both levels

  bool ok() const { return ok_horizon && ok_cardinality && ok_options && ok_kappa; }
};

/// Builds both hierarchy levels for the given option length, verifies the map
/// respects policy equivalence (rejected with a witness otherwise), computes
/// optimal and behaviour occupancies at every level, and fills the report.
MotivationReport verify_motivation_box(const FiniteMDP& mdp, const Behaviour& behaviour,
                                       const AbstractionMap& map, int n);

/// One line-delimited JSON record per instance; infinities and NaNs are
/// rendered as strings so every line stays parseable.
std::string report_json(const MotivationReport& r);

std::string report_csv_header();
std::string report_csv_row(const MotivationReport& r);

/// Writes all records as JSONL plus the CSV summary. Throws on I/O failure.
void write_reports(const std::vector<MotivationReport>& reports, const std::string& jsonl_path,
                   const std::string& csv_path);

}  // namespace arl
