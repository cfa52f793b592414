#include "arl/agents/updates.hpp"

#include "arl/core/heads.hpp"

namespace arl {

namespace {

Mat hcat(const Mat& a, const Mat& b) {
  Mat out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

Mat hcat(const Mat& a, const Mat& b, const Mat& c) { return hcat(hcat(a, b), c); }

Mat fwd(const Net& n, const Mat& x) { return mlp_forward(n.b.spec, n.b.online, x); }
Mat fwd_target(const Net& n, const Mat& x) { return mlp_forward(n.b.spec, n.b.target, x); }

bool trains_embedder_with_low_policy(Variant v) {
  return v == Variant::ARLi || v == Variant::ARLe;
}

Mat normalize_rows(const Mat& raw, bool soft) {
  Mat out(raw.rows(), raw.cols());
  for (int i = 0; i < raw.rows(); ++i) {
    const Vec row = raw.row(i).transpose();
    out.row(i) = (soft ? soft_normalize(row) : length_normalize(row)).transpose();
  }
  return out;
}

/// Deployed-form option for each batch row, computed without a graph:
/// the raw waypoint for HIQL2v, otherwise the variant's normalized
/// embedding of (s, waypoint) or of the displacement.
Mat option_target_plain(const Agent& ag, const SampledBatch& b, bool use_target = false) {
  const Variant v = ag.spec.variant;
  if (v == Variant::HIQL2v) return b.gs;
  const Net& phi = ag.net("phi");
  const Mat x = v == Variant::ARLe ? Mat(b.gs - b.s) : hcat(b.s, b.gs);
  const Mat raw = use_target ? fwd_target(phi, x) : fwd(phi, x);
  return normalize_rows(raw, v == Variant::ARLe);
}

/// HIQL1vr's value input embedding for arbitrary (state rows, goal rows).
Mat embed_pair_plain(const Agent& ag, const Mat& x, const Mat& g, bool use_target = false) {
  const Net& phi = ag.net("phi");
  const Mat raw = use_target ? fwd_target(phi, hcat(x, g)) : fwd(phi, hcat(x, g));
  return normalize_rows(raw, false);
}

Mat clipped_weights(const Mat& adv, double alpha, double cap) {
  Mat w = (alpha * adv.array()).exp().min(cap).matrix();
  if (!w.allFinite()) throw NumericError("advantage weights are not finite");
  return w;
}

AdamConfig adam_cfg(const AgentSpec& s) {
  AdamConfig c;
  c.lr = s.lr;
  return c;
}

/// A net's parameters bound into a graph as leaves.
struct GNet {
  Net* net = nullptr;
  std::vector<Var> leaves;
};

GNet bind(Graph& g, Net& n, bool trainable) { return {&n, param_leaves(g, n.b.online, trainable)}; }

Var gfwd(Graph& g, const GNet& gn, Var x) {
  return mlp_forward(g, gn.net->b.spec, gn.leaves, x);
}

double loss_value(Graph& g, Var loss, const char* who) {
  const double l = g.val(loss)(0, 0);
  if (!std::isfinite(l))
    throw NumericError(std::string("non-finite loss in ") + who);
  return l;
}

void step_net(Graph& g, GNet& gn, const AdamConfig& cfg, const char* who, double rate) {
  std::vector<Mat> grads;
  grads.reserve(gn.leaves.size());
  for (Var v : gn.leaves) grads.push_back(g.grad(v));
  adam_step(gn.net->b.online, grads, gn.net->adam, cfg, who);
  polyak_update(gn.net->b, rate);
}

/// Negative log-likelihood rows of `targets` under the head of `pi` given
/// in-graph conditioning input x. Gaussian heads clamp their global log-std.
Var head_nll(Graph& g, const GNet& pi, Var x, const Mat& targets, bool discrete) {
  Var out = gfwd(g, pi, x);
  if (discrete) {
    std::vector<int> acts(targets.rows());
    for (int i = 0; i < targets.rows(); ++i) acts[i] = int(std::lround(targets(i, 0)));
    return categorical_nll_rows(out, acts);
  }
  Var lstd = clamp_(pi.leaves.back(), kLogStdMin, kLogStdMax);
  return gaussian_nll_rows(out, lstd, targets);
}

}  // namespace

Metrics update_low_value_iql(Agent& ag, const SampledBatch& b) {
  const AgentSpec& sp = ag.spec;
  require(ag.has("v_l"), "update_low_value_iql: variant has no low value net");
  const Variant v = sp.variant;
  const double gl = sp.gamma_l();

  Mat qin, vin, vnext_in;
  switch (v) {
    case Variant::ARLe:
      vin = b.gs - b.s;
      qin = hcat(b.s, Mat(b.gs - b.s), b.a);
      vnext_in = b.gs - b.sp;
      break;
    case Variant::HIQL2vr:
      qin = hcat(b.s, b.gs, b.a);
      break;  // value inputs are built in-graph with the embedder
    default:
      vin = hcat(b.s, b.gs);
      qin = hcat(b.s, b.gs, b.a);
      vnext_in = hcat(b.sp, b.gs);
      break;
  }

  const Mat q_tilde = fwd_target(ag.net("q_l"), qin);
  double lv;
  {
    Graph g;
    GNet vl = bind(g, ag.net("v_l"), true);
    Var val;
    GNet phi;
    if (v == Variant::HIQL2vr) {
      phi = bind(g, ag.net("phi"), true);
      Var emb = length_normalize_rows(gfwd(g, phi, g.constant(hcat(b.s, b.gs))));
      val = gfwd(g, vl, concat_cols(g.constant(b.s), emb));
    } else {
      val = gfwd(g, vl, g.constant(vin));
    }
    Var loss = mean_all(expectile_(g.constant(q_tilde) - val, sp.tau));
    g.backward(loss);
    lv = loss_value(g, loss, "v_l");
    step_net(g, vl, adam_cfg(sp), "v_l", sp.target_rate);
    if (v == Variant::HIQL2vr) step_net(g, phi, adam_cfg(sp), "phi", sp.target_rate);
  }

  Mat v_next;
  if (v == Variant::HIQL2vr) {
    const Mat emb = normalize_rows(fwd(ag.net("phi"), hcat(b.sp, b.gs)), false);
    v_next = fwd(ag.net("v_l"), hcat(b.sp, emb));
  } else {
    v_next = fwd(ag.net("v_l"), vnext_in);
  }
  const Mat target = b.r_gs + gl * v_next;
  double lq;
  {
    Graph g;
    GNet ql = bind(g, ag.net("q_l"), true);
    Var q = gfwd(g, ql, g.constant(qin));
    Var loss = mean_all(square(q - g.constant(target)));
    g.backward(loss);
    lq = loss_value(g, loss, "q_l");
    step_net(g, ql, adam_cfg(sp), "q_l", sp.target_rate);
  }
  return {{"loss_v_l", lv}, {"loss_q_l", lq}};
}

Metrics update_high_value_ivl(Agent& ag, const SampledBatch& b) {
  const AgentSpec& sp = ag.spec;
  require(sp.hierarchical(), "update_high_value_ivl: flat variant uses update_flat_value");

  if (sp.variant == Variant::HIQL1vr) {
    const Mat emb_next = embed_pair_plain(ag, b.sp, b.g, /*use_target=*/true);
    const Mat v_next = fwd_target(ag.net("v"), hcat(b.sp, emb_next));
    const Mat target = b.r_g + sp.gamma * v_next;
    Graph g;
    GNet vn = bind(g, ag.net("v"), true);
    GNet phi = bind(g, ag.net("phi"), true);
    Var emb = length_normalize_rows(gfwd(g, phi, g.constant(hcat(b.s, b.g))));
    Var val = gfwd(g, vn, concat_cols(g.constant(b.s), emb));
    Var loss = mean_all(expectile_(g.constant(target) - val, sp.tau));
    g.backward(loss);
    const double l = loss_value(g, loss, "v");
    step_net(g, vn, adam_cfg(sp), "v", sp.target_rate);
    step_net(g, phi, adam_cfg(sp), "phi", sp.target_rate);
    return {{"loss_v", l}};
  }

  const Mat target = b.r_g + sp.gamma * fwd_target(ag.net("v_h"), hcat(b.sp, b.g));
  Graph g;
  GNet vh = bind(g, ag.net("v_h"), true);
  Var val = gfwd(g, vh, g.constant(hcat(b.s, b.g)));
  Var loss = mean_all(expectile_(g.constant(target) - val, sp.tau));
  g.backward(loss);
  const double l = loss_value(g, loss, "v_h");
  step_net(g, vh, adam_cfg(sp), "v_h", sp.target_rate);
  return {{"loss_v_h", l}};
}

Metrics fit_high_q(Agent& ag, const SampledBatch& b) {
  const AgentSpec& sp = ag.spec;
  require(sp.hierarchical(), "fit_high_q: flat variant has no high critic");

  const Mat option = option_target_plain(ag, b);
  Mat target;
  if (sp.variant == Variant::HIQL1vr)
    target = fwd(ag.net("v"), hcat(b.gs, embed_pair_plain(ag, b.gs, b.g)));
  else
    target = fwd(ag.net("v_h"), hcat(b.gs, b.g));

  Graph g;
  GNet qh = bind(g, ag.net("q_h"), true);
  Var q = gfwd(g, qh, g.constant(hcat(b.s, b.g, option)));
  Var loss = mean_all(square(q - g.constant(target)));
  g.backward(loss);
  const double l = loss_value(g, loss, "q_h");
  step_net(g, qh, adam_cfg(sp), "q_h", sp.target_rate);
  return {{"loss_q_h", l}};
}

Metrics update_low_policy(Agent& ag, const SampledBatch& b) {
  const AgentSpec& sp = ag.spec;
  require(sp.hierarchical(), "update_low_policy: flat variant uses update_flat_policy");
  const Variant v = sp.variant;

  Mat adv;
  switch (v) {
    case Variant::HIQL1vr: {
      const Mat e_next = embed_pair_plain(ag, b.sp, b.gs);
      const Mat e_cur = embed_pair_plain(ag, b.s, b.gs);
      adv = fwd(ag.net("v"), hcat(b.sp, e_next)) - fwd(ag.net("v"), hcat(b.s, e_cur));
      break;
    }
    case Variant::HIQL2vr: {
      const Mat emb = option_target_plain(ag, b);
      adv = fwd(ag.net("q_l"), hcat(b.s, b.gs, b.a)) - fwd(ag.net("v_l"), hcat(b.s, emb));
      break;
    }
    case Variant::ARLe:
      adv = fwd(ag.net("q_l"), hcat(b.s, Mat(b.gs - b.s), b.a)) -
            fwd(ag.net("v_l"), Mat(b.gs - b.s));
      break;
    default:  // HIQL2v, ARLi
      adv = fwd(ag.net("q_l"), hcat(b.s, b.gs, b.a)) - fwd(ag.net("v_l"), hcat(b.s, b.gs));
      break;
  }

  Graph g;
  GNet pi = bind(g, ag.net("pi_l"), true);
  GNet phi;
  Var cond;
  const bool train_phi = trains_embedder_with_low_policy(v);
  if (train_phi) {
    phi = bind(g, ag.net("phi"), true);
    Var x = g.constant(v == Variant::ARLe ? Mat(b.gs - b.s) : hcat(b.s, b.gs));
    Var raw = gfwd(g, phi, x);
    Var emb = v == Variant::ARLe ? soft_normalize_rows(raw) : length_normalize_rows(raw);
    cond = concat_cols(g.constant(b.s), emb);
  } else if (v == Variant::HIQL2v) {
    cond = g.constant(hcat(b.s, b.gs));
  } else {
    cond = g.constant(hcat(b.s, option_target_plain(ag, b)));
  }

  double l;
  if (sp.low_loss == PolicyLoss::AWR) {
    const Mat w = clipped_weights(adv, sp.alpha_l, sp.exp_adv_max);
    Var nll = head_nll(g, pi, cond, b.a, sp.discrete_actions);
    Var loss = mean_all(g.constant(w) * nll);
    g.backward(loss);
    l = loss_value(g, loss, "pi_l");
  } else {
    GNet ql = bind(g, ag.net("q_l"), false);
    Var mu = gfwd(g, pi, cond);
    Var lstd = clamp_(pi.leaves.back(), kLogStdMin, kLogStdMax);
    Var nll = gaussian_nll_rows(mu, lstd, b.a);
    const Mat sg = v == Variant::ARLe ? hcat(b.s, Mat(b.gs - b.s)) : hcat(b.s, b.gs);
    Var q = gfwd(g, ql, concat_cols(g.constant(sg), mu));
    Var loss = mean_all(-1.0 * q) + sp.alpha_l * mean_all(nll);
    g.backward(loss);
    l = loss_value(g, loss, "pi_l");
  }
  step_net(g, pi, adam_cfg(sp), "pi_l", sp.target_rate);
  if (train_phi) step_net(g, phi, adam_cfg(sp), "phi", sp.target_rate);
  return {{"loss_pi_l", l}};
}

Metrics update_high_policy(Agent& ag, const SampledBatch& b) {
  const AgentSpec& sp = ag.spec;
  require(sp.hierarchical(), "update_high_policy: flat variant uses update_flat_policy");

  const Mat option = option_target_plain(ag, b);
  Mat adv;
  if (sp.variant == Variant::HIQL1vr) {
    adv = fwd(ag.net("v"), hcat(b.gs, embed_pair_plain(ag, b.gs, b.g))) -
          fwd(ag.net("v"), hcat(b.s, embed_pair_plain(ag, b.s, b.g)));
  } else {
    adv = fwd(ag.net("q_h"), hcat(b.s, b.g, option)) - fwd(ag.net("v_h"), hcat(b.s, b.g));
  }

  Graph g;
  GNet pi = bind(g, ag.net("pi_h"), true);
  Var cond = g.constant(hcat(b.s, b.g));
  double l;
  if (sp.high_loss == PolicyLoss::AWR) {
    const Mat w = clipped_weights(adv, sp.alpha_h, sp.exp_adv_max);
    Var nll = head_nll(g, pi, cond, option, /*discrete=*/false);
    Var loss = mean_all(g.constant(w) * nll);
    g.backward(loss);
    l = loss_value(g, loss, "pi_h");
  } else {
    GNet qh = bind(g, ag.net("q_h"), false);
    Var mu = gfwd(g, pi, cond);
    Var lstd = clamp_(pi.leaves.back(), kLogStdMin, kLogStdMax);
    Var nll = gaussian_nll_rows(mu, lstd, option);
    Var q = gfwd(g, qh, concat_cols(g.constant(hcat(b.s, b.g)), mu));
    Var loss = mean_all(-1.0 * q) + sp.alpha_h * mean_all(nll);
    g.backward(loss);
    l = loss_value(g, loss, "pi_h");
  }
  step_net(g, pi, adam_cfg(sp), "pi_h", sp.target_rate);
  return {{"loss_pi_h", l}};
}

Metrics update_flat_value(Agent& ag, const SampledBatch& b) {
  const AgentSpec& sp = ag.spec;
  require(sp.variant == Variant::IQL, "update_flat_value: hierarchical variants split levels");

  const Mat qin = hcat(b.s, b.g, b.a);
  const Mat q_tilde = fwd_target(ag.net("q"), qin);
  double lv;
  {
    Graph g;
    GNet vn = bind(g, ag.net("v"), true);
    Var val = gfwd(g, vn, g.constant(hcat(b.s, b.g)));
    Var loss = mean_all(expectile_(g.constant(q_tilde) - val, sp.tau));
    g.backward(loss);
    lv = loss_value(g, loss, "v");
    step_net(g, vn, adam_cfg(sp), "v", sp.target_rate);
  }
  const Mat target = b.r_g + sp.gamma * fwd(ag.net("v"), hcat(b.sp, b.g));
  double lq;
  {
    Graph g;
    GNet qn = bind(g, ag.net("q"), true);
    Var q = gfwd(g, qn, g.constant(qin));
    Var loss = mean_all(square(q - g.constant(target)));
    g.backward(loss);
    lq = loss_value(g, loss, "q");
    step_net(g, qn, adam_cfg(sp), "q", sp.target_rate);
  }
  return {{"loss_v", lv}, {"loss_q", lq}};
}

Metrics update_flat_policy(Agent& ag, const SampledBatch& b) {
  const AgentSpec& sp = ag.spec;
  require(sp.variant == Variant::IQL, "update_flat_policy: hierarchical variants split levels");

  Graph g;
  GNet pi = bind(g, ag.net("pi"), true);
  Var cond = g.constant(hcat(b.s, b.g));
  double l;
  if (sp.low_loss == PolicyLoss::AWR) {
    const Mat adv =
        fwd(ag.net("q"), hcat(b.s, b.g, b.a)) - fwd(ag.net("v"), hcat(b.s, b.g));
    const Mat w = clipped_weights(adv, sp.alpha, sp.exp_adv_max);
    Var nll = head_nll(g, pi, cond, b.a, sp.discrete_actions);
    Var loss = mean_all(g.constant(w) * nll);
    g.backward(loss);
    l = loss_value(g, loss, "pi");
  } else {
    GNet qn = bind(g, ag.net("q"), false);
    Var mu = gfwd(g, pi, cond);
    Var lstd = clamp_(pi.leaves.back(), kLogStdMin, kLogStdMax);
    Var nll = gaussian_nll_rows(mu, lstd, b.a);
    Var q = gfwd(g, qn, concat_cols(g.constant(hcat(b.s, b.g)), mu));
    Var loss = mean_all(-1.0 * q) + sp.alpha * mean_all(nll);
    g.backward(loss);
    l = loss_value(g, loss, "pi");
  }
  step_net(g, pi, adam_cfg(sp), "pi", sp.target_rate);
  return {{"loss_pi", l}};
}

}  // namespace arl
