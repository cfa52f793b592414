#pragma once

#include <map>
#include <string>

#include "arl/agents/agent.hpp"
#include "arl/data/sampler.hpp"

namespace arl {

using Metrics = std::map<std::string, double>;

/// Each update takes one sampled batch, steps the nets it owns, and then
/// Polyak-updates the target copies of exactly those nets. Advantage and
/// regression targets are always computed outside the graph, so no gradient
/// ever reaches a value net through a policy loss or vice versa. All ops
/// throw NumericError on non-finite losses or gradients.

/// Expectile fit of V_l against the target low critic, then squared TD fit
/// of Q_l with the waypoint-relabelled reward at discount γ_l. HIQL2vr
/// learns its embedding here (V_l sees the normalized φ of (s, waypoint));
/// ARLe feeds displacements instead of (state, waypoint) pairs.
Metrics update_low_value_iql(Agent& agent, const SampledBatch& b);

/// One-step expectile value fit of V_h(s, g) toward r + γ·target-V_h(s', g).
/// HIQL1vr routes this through its single value net and trains the embedder
/// jointly, with target copies of both nets on the bootstrap side.
Metrics update_high_value_ivl(Agent& agent, const SampledBatch& b);

/// Squared regression of the action-free Q_h(s, g, option) onto the frozen
/// V_h(waypoint, g). The option input is the raw waypoint (HIQL2v) or the
/// stopgradded embedding (all representation variants).
Metrics fit_high_q(Agent& agent, const SampledBatch& b);

/// Advantage-weighted (or DDPGBC) step on the low policy. ARLi and ARLe
/// train the embedder here, through the conditioning input; every other
/// variant conditions on constants.
Metrics update_low_policy(Agent& agent, const SampledBatch& b);

/// Advantage-weighted (or DDPGBC) step on the high policy. The option
/// target is always stopgradded: this op never touches the embedder.
Metrics update_high_policy(Agent& agent, const SampledBatch& b);

/// Flat-variant analogues over (s, g) with the env discount.
Metrics update_flat_value(Agent& agent, const SampledBatch& b);
Metrics update_flat_policy(Agent& agent, const SampledBatch& b);

}  // namespace arl
