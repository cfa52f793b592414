#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "arl/core/mlp.hpp"
#include "arl/core/types.hpp"

namespace arl {

/// Thrown on non-finite gradients or losses; training aborts rather than
/// silently continuing with poisoned parameters.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  int64_t t = 0;
  std::vector<Mat> m;
  std::vector<Mat> v;

  static AdamState like(const ParamSet& p) {
    AdamState s;
    for (const auto& w : p.t) {
      s.m.push_back(Mat::Zero(w.rows(), w.cols()));
      s.v.push_back(Mat::Zero(w.rows(), w.cols()));
    }
    return s;
  }
};

/// One Adam step over a parameter list. Fails fast on non-finite gradients.
inline void adam_step(ParamSet& p, const std::vector<Mat>& grads, AdamState& s,
                      const AdamConfig& cfg, const std::string& who = "") {
  if (p.t.size() != grads.size() || p.t.size() != s.m.size())
    throw std::invalid_argument("adam_step: state/param/grad size mismatch");
  ++s.t;
  const double bc1 = 1.0 - std::pow(cfg.beta1, double(s.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, double(s.t));
  for (size_t i = 0; i < p.t.size(); ++i) {
    if (!grads[i].allFinite())
      throw NumericError("adam_step: non-finite gradient in " + who + " tensor " +
                         std::to_string(i) + " at step " + std::to_string(s.t));
    s.m[i] = cfg.beta1 * s.m[i] + (1.0 - cfg.beta1) * grads[i];
    s.v[i] = cfg.beta2 * s.v[i] + (1.0 - cfg.beta2) * grads[i].cwiseProduct(grads[i]);
    p.t[i].array() -= cfg.lr * (s.m[i].array() / bc1) /
                      ((s.v[i].array() / bc2).sqrt() + cfg.eps);
  }
}

}  // namespace arl
