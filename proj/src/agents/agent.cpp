#include "arl/agents/agent.hpp"

#include <fstream>

#include "arl/core/heads.hpp"
#include "arl/core/scalar_ops.hpp"
#include "arl/core/serialize.hpp"

namespace arl {

namespace {

constexpr uint32_t kMagic = 0x414c5241;  // "ARLA"
constexpr uint32_t kVersion = 1;

std::vector<int> stack(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> sizes;
  sizes.reserve(hidden.size() + 2);
  sizes.push_back(in);
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

}  // namespace

std::vector<NetPlan> net_plans(const AgentSpec& s) {
  s.validate();
  const int ds = s.state_dim;
  const int da = s.action_dim;
  const int d = s.d;
  const bool ln = s.layer_norm;
  const auto& hid = s.hidden;

  auto value = [&](int in) { return mlp_spec(stack(in, hid, 1), ln); };
  auto repr = [&](int in) { return mlp_spec(stack(in, s.repr_hidden, d), ln); };
  // Action heads: diagonal Gaussian over the action box, or categorical
  // logits for discrete envs. Option heads are always Gaussian.
  auto action_policy = [&](int in) {
    if (s.discrete_actions)
      return mlp_spec(stack(in, hid, s.num_actions), ln, FinalInit::zero);
    return mlp_spec(stack(in, hid, da), ln, FinalInit::zero, Head::gaussian);
  };
  auto option_policy = [&](int out) {
    return mlp_spec(stack(2 * ds, hid, out), ln, FinalInit::zero, Head::gaussian);
  };

  std::vector<NetPlan> plans;
  switch (s.variant) {
    case Variant::IQL:
      plans = {{"v", value(2 * ds)},
               {"q", value(2 * ds + da)},
               {"pi", action_policy(2 * ds)}};
      break;
    case Variant::HIQL1vr:
      // Single value head over (state, option embedding of the goal).
      plans = {{"v", value(ds + d)},
               {"q_h", value(2 * ds + d)},
               {"pi_l", action_policy(ds + d)},
               {"pi_h", option_policy(d)},
               {"phi", repr(2 * ds)}};
      break;
    case Variant::HIQL2v:
      plans = {{"v_l", value(2 * ds)},
               {"q_l", value(2 * ds + da)},
               {"v_h", value(2 * ds)},
               {"q_h", value(2 * ds + ds)},
               {"pi_l", action_policy(2 * ds)},
               {"pi_h", option_policy(ds)}};
      break;
    case Variant::HIQL2vr:
      plans = {{"v_l", value(ds + d)},
               {"q_l", value(2 * ds + da)},
               {"v_h", value(2 * ds)},
               {"q_h", value(2 * ds + d)},
               {"pi_l", action_policy(ds + d)},
               {"pi_h", option_policy(d)},
               {"phi", repr(2 * ds)}};
      break;
    case Variant::ARLi:
      plans = {{"v_l", value(2 * ds)},
               {"q_l", value(2 * ds + da)},
               {"v_h", value(2 * ds)},
               {"q_h", value(2 * ds + d)},
               {"pi_l", action_policy(ds + d)},
               {"pi_h", option_policy(d)},
               {"phi", repr(2 * ds)}};
      break;
    case Variant::ARLe:
      // Low-level quantities see displacements only; the embedder input is
      // the raw waypoint displacement.
      plans = {{"v_l", value(ds)},
               {"q_l", value(2 * ds + da)},
               {"v_h", value(2 * ds)},
               {"q_h", value(2 * ds + d)},
               {"pi_l", action_policy(ds + d)},
               {"pi_h", option_policy(d)},
               {"phi", repr(ds)}};
      break;
  }
  return plans;
}

Net& Agent::net(const std::string& name) {
  auto it = nets.find(name);
  require(it != nets.end(), "agent has no net '" + name + "'");
  return it->second;
}

const Net& Agent::net(const std::string& name) const {
  auto it = nets.find(name);
  require(it != nets.end(), "agent has no net '" + name + "'");
  return it->second;
}

Agent make_agent(const AgentSpec& spec, Rng& rng) {
  Agent a;
  a.spec = spec;
  const auto plans = net_plans(spec);
  for (size_t i = 0; i < plans.size(); ++i) {
    Rng sub = rng.fork(i);
    Net n;
    n.b = init_bundle(plans[i].spec, sub);
    n.adam = AdamState::like(n.b.online);
    a.nets.emplace(plans[i].name, std::move(n));
  }
  return a;
}

namespace {

Row forward_row(const Net& net, const Vec& in) {
  Mat x(1, in.size());
  x.row(0) = in.transpose();
  return mlp_forward(net.b.spec, net.b.online, x).row(0);
}

Vec sample_action_head(const Net& pi, const Vec& in, bool deterministic, Rng& stream,
                       bool discrete) {
  const Row out = forward_row(pi, in);
  if (discrete) {
    int pick = 0;
    if (deterministic) {
      out.maxCoeff(&pick);
    } else {
      // Invert the softmax CDF with one uniform draw.
      const Row z = (out.array() - out.maxCoeff()).exp();
      const double total = z.sum();
      double u = stream.uniform() * total;
      for (pick = 0; pick < int(z.size()) - 1; ++pick) {
        u -= z(pick);
        if (u <= 0.0) break;
      }
    }
    Vec a(1);
    a(0) = double(pick);
    return a;
  }
  Vec a = out.transpose();
  if (!deterministic) {
    const Row ls = log_std_of(pi.b.online).row(0);
    for (int i = 0; i < a.size(); ++i)
      a(i) += std::exp(std::clamp(ls(i), kLogStdMin, kLogStdMax)) * stream.normal();
  }
  return a;
}

Vec sample_option(const Net& pih, const Vec& in, bool deterministic, Rng& stream) {
  const Row out = forward_row(pih, in);
  Vec w = out.transpose();
  if (!deterministic) {
    const Row ls = log_std_of(pih.b.online).row(0);
    for (int i = 0; i < w.size(); ++i)
      w(i) += std::exp(std::clamp(ls(i), kLogStdMin, kLogStdMax)) * stream.normal();
  }
  return w;
}

Vec concat_vec(const Vec& a, const Vec& b) {
  Vec out(a.size() + b.size());
  out << a, b;
  return out;
}

}  // namespace

Vec act(Agent& agent, const Vec& s, const Vec& g, bool deterministic, Rng& stream) {
  const AgentSpec& sp = agent.spec;
  require(int(s.size()) == sp.state_dim && int(g.size()) == sp.state_dim,
          "act: observation dims do not match the spec");
  if (sp.variant == Variant::IQL)
    return sample_action_head(agent.net("pi"), concat_vec(s, g), deterministic, stream,
                              sp.discrete_actions);

  Vec w = sample_option(agent.net("pi_h"), concat_vec(s, g), deterministic, stream);
  switch (sp.variant) {
    case Variant::HIQL2v:
      break;  // raw subgoal
    case Variant::ARLe:
      w = soft_normalize(w);
      break;
    default:
      w = length_normalize(w, &agent.degenerate_options);
      break;
  }
  return sample_action_head(agent.net("pi_l"), concat_vec(s, w), deterministic, stream,
                            sp.discrete_actions);
}

namespace {

Vec embedded(const Agent& ag, const Vec& a, const Vec& b) {
  return length_normalize(forward_row(ag.net("phi"), concat_vec(a, b)).transpose());
}

}  // namespace

double value_low(const Agent& agent, const Vec& s, const Vec& gs) {
  const AgentSpec& sp = agent.spec;
  require(int(s.size()) == sp.state_dim && int(gs.size()) == sp.state_dim,
          "value_low: observation dims do not match the spec");
  switch (sp.variant) {
    case Variant::IQL:
      return forward_row(agent.net("v"), concat_vec(s, gs))(0);
    case Variant::HIQL1vr:
      return forward_row(agent.net("v"), concat_vec(s, embedded(agent, s, gs)))(0);
    case Variant::HIQL2vr:
      return forward_row(agent.net("v_l"), concat_vec(s, embedded(agent, s, gs)))(0);
    case Variant::ARLe:
      return forward_row(agent.net("v_l"), Vec(gs - s))(0);
    default:  // HIQL2v, ARLi keep raw (state, waypoint) value inputs
      return forward_row(agent.net("v_l"), concat_vec(s, gs))(0);
  }
}

double value_high(const Agent& agent, const Vec& s, const Vec& g) {
  const AgentSpec& sp = agent.spec;
  require(int(s.size()) == sp.state_dim && int(g.size()) == sp.state_dim,
          "value_high: observation dims do not match the spec");
  if (sp.variant == Variant::IQL) return forward_row(agent.net("v"), concat_vec(s, g))(0);
  if (sp.variant == Variant::HIQL1vr)
    return forward_row(agent.net("v"), concat_vec(s, embedded(agent, s, g)))(0);
  return forward_row(agent.net("v_h"), concat_vec(s, g))(0);
}

namespace {

void write_spec(BinWriter& w, const AgentSpec& s) {
  w.u8(uint8_t(s.variant));
  w.u32(uint32_t(s.n));
  w.f64(s.gamma);
  w.f64(s.tau);
  w.f64(s.alpha);
  w.f64(s.alpha_l);
  w.f64(s.alpha_h);
  w.u8(uint8_t(s.low_loss));
  w.u8(uint8_t(s.high_loss));
  w.u32(uint32_t(s.d));
  w.f64(s.target_rate);
  w.f64(s.exp_adv_max);
  w.f64(s.lr);
  w.u32(uint32_t(s.batch_size));
  w.u8(s.layer_norm ? 1 : 0);
  w.u32(uint32_t(s.hidden.size()));
  for (int h : s.hidden) w.u32(uint32_t(h));
  w.u32(uint32_t(s.repr_hidden.size()));
  for (int h : s.repr_hidden) w.u32(uint32_t(h));
  w.u32(uint32_t(s.state_dim));
  w.u32(uint32_t(s.action_dim));
  w.u8(s.discrete_actions ? 1 : 0);
  w.u32(uint32_t(s.num_actions));
}

AgentSpec read_spec(BinReader& r) {
  AgentSpec s;
  s.variant = Variant(r.u8());
  s.n = int(r.u32());
  s.gamma = r.f64();
  s.tau = r.f64();
  s.alpha = r.f64();
  s.alpha_l = r.f64();
  s.alpha_h = r.f64();
  s.low_loss = PolicyLoss(r.u8());
  s.high_loss = PolicyLoss(r.u8());
  s.d = int(r.u32());
  s.target_rate = r.f64();
  s.exp_adv_max = r.f64();
  s.lr = r.f64();
  s.batch_size = int(r.u32());
  s.layer_norm = r.u8() != 0;
  s.hidden.resize(r.u32());
  for (auto& h : s.hidden) h = int(r.u32());
  s.repr_hidden.resize(r.u32());
  for (auto& h : s.repr_hidden) h = int(r.u32());
  s.state_dim = int(r.u32());
  s.action_dim = int(r.u32());
  s.discrete_actions = r.u8() != 0;
  s.num_actions = int(r.u32());
  return s;
}

void write_params(BinWriter& w, const ParamSet& p) {
  w.u32(uint32_t(p.t.size()));
  for (const auto& m : p.t) w.mat(m);
}

ParamSet read_params(BinReader& r) {
  ParamSet p;
  p.t.resize(r.u32());
  for (auto& m : p.t) m = r.mat();
  return p;
}

}  // namespace

void save_agent(const Agent& agent, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  require(bool(os), "save_agent: cannot open " + path);
  BinWriter w(os);
  w.u32(kMagic);
  w.u32(kVersion);
  write_spec(w, agent.spec);
  w.u32(uint32_t(agent.nets.size()));
  for (const auto& [name, net] : agent.nets) {
    w.str(name);
    write_params(w, net.b.online);
    write_params(w, net.b.target);
  }
  require(bool(os), "save_agent: write failed for " + path);
}

Agent load_agent(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(bool(is), "load_agent: cannot open " + path);
  BinReader r(is);
  require(r.u32() == kMagic, "load_agent: bad magic in " + path);
  require(r.u32() == kVersion, "load_agent: unsupported version in " + path);
  Agent a;
  a.spec = read_spec(r);
  const auto plans = net_plans(a.spec);
  const uint32_t count = r.u32();
  require(count == plans.size(), "load_agent: net count does not match the variant");
  for (uint32_t i = 0; i < count; ++i) {
    const std::string name = r.str();
    Net n;
    n.b.online = read_params(r);
    n.b.target = read_params(r);
    bool found = false;
    for (const auto& p : plans)
      if (p.name == name) {
        n.b.spec = p.spec;
        found = true;
        break;
      }
    require(found, "load_agent: unexpected net '" + name + "'");
    require(int(n.b.online.t.size()) == n.b.spec.tensor_count() &&
                int(n.b.target.t.size()) == n.b.spec.tensor_count(),
            "load_agent: tensor count mismatch in '" + name + "'");
    n.adam = AdamState::like(n.b.online);
    a.nets.emplace(name, std::move(n));
  }
  return a;
}

}  // namespace arl
