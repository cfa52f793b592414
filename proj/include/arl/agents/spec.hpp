#pragma once

#include <cmath>
#include <vector>

#include "arl/data/sampler.hpp"

namespace arl {

/// The six algorithm variants. IQL is the flat baseline; the rest are
/// hierarchical with an n-step waypoint level.
enum class Variant { IQL, HIQL1vr, HIQL2v, HIQL2vr, ARLi, ARLe };

enum class PolicyLoss { AWR, DDPGBC };

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);
const char* policy_loss_name(PolicyLoss p);
PolicyLoss policy_loss_from_name(const std::string& name);

/// Full training configuration for one agent. The discounts γ_l = 1 − 1/n
/// and γ_h = γⁿ are always derived from (n, γ) on access so they can never
/// go stale when either field changes.
struct AgentSpec {
  Variant variant = Variant::ARLi;
  int n = 25;                // waypoint horizon (steps)
  double gamma = 0.99;       // env discount
  double tau = 0.7;          // expectile
  double alpha = 1.0;        // flat policy coefficient
  double alpha_l = 3.0;      // low policy coefficient
  double alpha_h = 3.0;      // high policy coefficient
  PolicyLoss low_loss = PolicyLoss::AWR;   // also selects the flat policy loss
  PolicyLoss high_loss = PolicyLoss::AWR;
  int d = 10;                // option embedding dimension
  double target_rate = 0.005;
  double exp_adv_max = 100.0;
  double lr = 3e-4;
  int batch_size = 1024;
  bool layer_norm = true;
  std::vector<int> hidden = {1024, 1024, 1024, 1024};
  std::vector<int> repr_hidden = {512, 512, 512};

  // Environment binding, filled from the dataset before construction.
  int state_dim = 0;
  int action_dim = 0;
  bool discrete_actions = false;
  int num_actions = 0;

  double gamma_l() const { return 1.0 - 1.0 / double(n); }
  double gamma_h() const { return std::pow(gamma, double(n)); }
  bool hierarchical() const { return variant != Variant::IQL; }

  // Goal-draw mixtures per loss family: (current, same-trajectory future,
  // unrelated random), with the future offset either uniform or geometric.
  GoalSampleConfig value_goals() const      { return {0.2, 0.5, 0.3, false, gamma}; }
  GoalSampleConfig low_value_goals() const  { return {0.10, 0.85, 0.05, true, gamma_l()}; }
  GoalSampleConfig high_value_goals() const { return {0.2, 0.5, 0.3, false, gamma}; }
  GoalSampleConfig policy_goals() const     { return {0.0, 0.5, 0.5, true, gamma}; }

  /// Throws std::invalid_argument on any out-of-range field or an
  /// unsatisfiable combination (DDPGBC needs a differentiable action input,
  /// so discrete actions only train with AWR; HIQL1vr has no low critic).
  void validate() const;
};

/// Defaults shared by all experiments; the expectile is the one setting
/// that differs between the flat and hierarchical variants.
AgentSpec default_spec(Variant v);

/// Locomotion-style profile: long horizon, near-undiscounted env.
void apply_maze_profile(AgentSpec& s);

/// Manipulation-style profile: DDPGBC extraction at both levels where the
/// paper uses it.
void apply_manipulation_profile(AgentSpec& s);

}  // namespace arl
