#include "arl/agents/spec.hpp"

#include <stdexcept>

namespace arl {

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::IQL: return "iql";
    case Variant::HIQL1vr: return "hiql1vr";
    case Variant::HIQL2v: return "hiql2v";
    case Variant::HIQL2vr: return "hiql2vr";
    case Variant::ARLi: return "arli";
    case Variant::ARLe: return "arle";
  }
  throw std::logic_error("variant_name: bad enum");
}

Variant variant_from_name(const std::string& name) {
  for (Variant v : {Variant::IQL, Variant::HIQL1vr, Variant::HIQL2v, Variant::HIQL2vr,
                    Variant::ARLi, Variant::ARLe})
    if (name == variant_name(v)) return v;
  throw std::invalid_argument("unknown variant: " + name);
}

const char* policy_loss_name(PolicyLoss p) {
  return p == PolicyLoss::AWR ? "awr" : "ddpgbc";
}

PolicyLoss policy_loss_from_name(const std::string& name) {
  if (name == "awr") return PolicyLoss::AWR;
  if (name == "ddpgbc") return PolicyLoss::DDPGBC;
  throw std::invalid_argument("unknown policy loss: " + name);
}

void AgentSpec::validate() const {
  auto bad = [](const std::string& msg) { throw std::invalid_argument("AgentSpec: " + msg); };
  if (n < 2) bad("n must be >= 2 so gamma_l lands in (0,1)");
  if (!(gamma > 0.0 && gamma < 1.0)) bad("gamma must be in (0,1)");
  if (!(tau > 0.0 && tau < 1.0)) bad("tau must be in (0,1)");
  if (d < 1) bad("d must be positive");
  if (!(target_rate > 0.0 && target_rate <= 1.0)) bad("target_rate must be in (0,1]");
  if (exp_adv_max <= 0.0) bad("exp_adv_max must be positive");
  if (lr <= 0.0) bad("lr must be positive");
  if (batch_size < 1) bad("batch_size must be positive");
  if (hidden.empty() || repr_hidden.empty()) bad("hidden sizes must be nonempty");
  for (int h : hidden)
    if (h < 1) bad("hidden sizes must be positive");
  for (int h : repr_hidden)
    if (h < 1) bad("repr hidden sizes must be positive");
  if (state_dim < 1) bad("state_dim unset");
  if (discrete_actions) {
    if (num_actions < 2) bad("discrete env needs num_actions >= 2");
    if (low_loss == PolicyLoss::DDPGBC)
      bad("DDPGBC action extraction needs continuous actions; use AWR");
    if (variant == Variant::IQL && alpha <= 0.0) bad("alpha must be positive");
  } else if (action_dim < 1) {
    bad("action_dim unset");
  }
  if (variant == Variant::HIQL1vr && low_loss == PolicyLoss::DDPGBC)
    bad("HIQL1vr has no low critic, so its low policy only trains with AWR");
}

AgentSpec default_spec(Variant v) {
  AgentSpec s;
  s.variant = v;
  s.tau = v == Variant::IQL ? 0.9 : 0.7;
  return s;
}

void apply_maze_profile(AgentSpec& s) {
  s.n = 25;
  s.gamma = 0.995;
  s.alpha = 0.1;
  s.alpha_l = 3.0;
  s.alpha_h = 3.0;
  s.low_loss = s.variant == Variant::IQL ? PolicyLoss::DDPGBC : PolicyLoss::AWR;
  s.high_loss = PolicyLoss::AWR;
}

void apply_manipulation_profile(AgentSpec& s) {
  s.n = 25;
  s.gamma = 0.99;
  s.alpha = 1.0;
  s.alpha_l = 3.0;
  s.alpha_h = 0.1;
  s.low_loss = s.variant == Variant::IQL ? PolicyLoss::DDPGBC : PolicyLoss::AWR;
  s.high_loss = PolicyLoss::DDPGBC;
}

}  // namespace arl
