#pragma once

#include <map>
#include <string>
#include <vector>

#include "arl/agents/spec.hpp"
#include "arl/core/adam.hpp"
#include "arl/core/mlp.hpp"

namespace arl {

/// One trainable network: online/target parameter pair plus its optimizer
/// state. Target copies start equal to the online parameters.
struct Net {
  NetBundle b;
  AdamState adam;
};

/// Name and architecture of every net a variant owns. Exposed separately
/// from construction so tests can assert the wiring structurally.
struct NetPlan {
  std::string name;
  MlpSpec spec;
};

std::vector<NetPlan> net_plans(const AgentSpec& spec);

struct Agent {
  AgentSpec spec;
  std::map<std::string, Net> nets;
  int64_t degenerate_options = 0;  // zero-vector hits in deploy normalization

  Net& net(const std::string& name);
  const Net& net(const std::string& name) const;
  bool has(const std::string& name) const { return nets.count(name) != 0; }
};

/// Builds exactly the variant's net set, deterministically from the stream.
Agent make_agent(const AgentSpec& spec, Rng& rng);

/// Samples an action for state s toward goal g (both observation vectors).
/// Hierarchical variants draw an option from the high policy, normalize it
/// as the variant requires, and condition the low policy on it; the
/// deterministic flag takes the mean (argmax for discrete heads) everywhere.
/// Discrete actions come back as a single-entry vector holding the index.
Vec act(Agent& agent, const Vec& s, const Vec& g, bool deterministic, Rng& stream);

/// Value surfaces in each variant's deployed input form: ARLe reads its
/// displacement-only low net, the representation variants embed and
/// normalize first, and flat IQL answers both levels from its single V.
double value_low(const Agent& agent, const Vec& s, const Vec& gs);
double value_high(const Agent& agent, const Vec& s, const Vec& g);

/// Checkpoint container: spec header plus every net's online and target
/// tensors. Optimizer state is not persisted; checkpoints are for
/// deployment and evaluation, not for resuming an interrupted run.
void save_agent(const Agent& agent, const std::string& path);
Agent load_agent(const std::string& path);

}  // namespace arl
