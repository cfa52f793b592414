#include "arl/agents/train.hpp"

#include <cstdio>

#include "arl/envs/maze.hpp"

namespace arl {

namespace {

void merge(Metrics& into, const Metrics& from) { into.insert(from.begin(), from.end()); }

}  // namespace

TrainResult train(AgentSpec spec, const Dataset& data, int64_t steps, uint64_t seed,
                  int64_t log_every) {
  require(steps >= 0, "train: steps must be nonnegative");
  require(log_every >= 1, "train: log_every must be positive");
  require(!data.trajs.empty(), "train: empty dataset");
  const MazeSpec env = parse_maze(data.env_text);

  spec.state_dim = data.state_dim;
  spec.action_dim = data.action_dim;
  spec.discrete_actions = data.discrete_actions;
  spec.num_actions = data.discrete_actions ? MazeSpec::kNumDiscreteActions : 0;
  spec.validate();

  Rng root(seed);
  Rng init = root.fork(0);
  Rng sampling = root.fork(1);

  TrainResult res;
  res.agent = make_agent(spec, init);
  Agent last_good = res.agent;

  auto draw = [&](const GoalSampleConfig& cfg) {
    return sample_batch(data, env, spec.batch_size, cfg, spec.n, sampling);
  };

  for (int64_t step = 0; step < steps; ++step) {
    Metrics m;
    try {
      if (spec.variant == Variant::IQL) {
        merge(m, update_flat_value(res.agent, draw(spec.value_goals())));
        merge(m, update_flat_policy(res.agent, draw(spec.policy_goals())));
      } else {
        if (res.agent.has("v_l"))
          merge(m, update_low_value_iql(res.agent, draw(spec.low_value_goals())));
        merge(m, update_high_value_ivl(res.agent, draw(spec.high_value_goals())));
        merge(m, fit_high_q(res.agent, draw(spec.high_value_goals())));
        merge(m, update_low_policy(res.agent, draw(spec.policy_goals())));
        merge(m, update_high_policy(res.agent, draw(spec.policy_goals())));
      }
    } catch (const NumericError& e) {
      res.aborted = true;
      res.abort_step = step;
      res.abort_reason = e.what();
      res.agent = last_good;
      break;
    }
    if ((step + 1) % log_every == 0 || step + 1 == steps) {
      res.log.push_back({step + 1, m});
      last_good = res.agent;
    }
  }
  return res;
}

std::string metric_log_text(const std::vector<MetricRow>& log) {
  std::string out;
  char buf[64];
  for (const auto& row : log) {
    out += "step=" + std::to_string(row.step);
    for (const auto& [key, value] : row.m) {
      std::snprintf(buf, sizeof buf, " %s=%.17g", key.c_str(), value);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace arl
