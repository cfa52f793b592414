#pragma once

#include <string>
#include <vector>

#include "arl/core/graph.hpp"
#include "arl/core/rng.hpp"
#include "arl/core/types.hpp"

namespace arl {

enum class FinalInit { scaled, zero };
enum class Head { plain, gaussian };

/// Fully-connected stack: sizes = {in, hidden..., out}, GELU on hidden
/// layers, optional per-layer normalization (applied between the linear map
/// and the activation, with learned gain/bias). Head::gaussian appends one
/// global 1 x out log-std tensor to the parameter list.
struct MlpSpec {
  std::vector<int> sizes;
  bool layer_norm = false;
  FinalInit final_init = FinalInit::scaled;
  Head head = Head::plain;

  int layers() const { return int(sizes.size()) - 1; }
  int in_dim() const { return sizes.front(); }
  int out_dim() const { return sizes.back(); }
  int tensor_count() const;
};

/// Flat list of parameter tensors in the spec's fixed layout:
/// per hidden layer W, b [, ln_gain, ln_bias], then final W, b [, log_std].
struct ParamSet {
  std::vector<Mat> t;

  bool all_finite() const;
};

MlpSpec mlp_spec(std::vector<int> sizes, bool layer_norm, FinalInit fi = FinalInit::scaled,
                 Head head = Head::plain);

/// Orthogonal-ish fan-in scaled init for hidden weights (orthonormal columns
/// of a random Gaussian's QR factor), zero biases, zero final layer when
/// requested, unit layer-norm gains, zero log-std.
ParamSet init_params(const MlpSpec& spec, Rng& rng);

/// Plain forward pass (no tape), batched rows.
Mat mlp_forward(const MlpSpec& spec, const ParamSet& p, const Mat& x);

/// Same computation expressed on a graph. leaves must come from param_leaves.
Var mlp_forward(Graph& g, const MlpSpec& spec, const std::vector<Var>& leaves, Var x);

std::vector<Var> param_leaves(Graph& g, const ParamSet& p, bool trainable);

/// Online/target parameter pair over one spec.
struct NetBundle {
  MlpSpec spec;
  ParamSet online;
  ParamSet target;
};

NetBundle init_bundle(const MlpSpec& spec, Rng& rng);

/// target <- (1 - rate) * target + rate * online.
void polyak_update(NetBundle& net, double rate);

/// 1 x out log-std tensor of a gaussian-head net.
inline Mat& log_std_of(ParamSet& p) { return p.t.back(); }
inline const Mat& log_std_of(const ParamSet& p) { return p.t.back(); }

}  // namespace arl
