#pragma once

#include <vector>

#include "arl/core/graph.hpp"
#include "arl/core/types.hpp"

namespace arl {

/// Bounds applied to every policy head's global log-std, in and out of the
/// training graph.
inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;

/// Diagonal-Gaussian log density of one action row.
inline double gaussian_log_prob(const Row& mean, const Row& log_std, const Row& a) {
  double lp = 0.0;
  for (int i = 0; i < mean.size(); ++i) {
    const double z = (a(i) - mean(i)) * std::exp(-log_std(i));
    lp += -0.5 * kLog2Pi - log_std(i) - 0.5 * z * z;
  }
  return lp;
}

/// Graph version, batched: B x 1 negative log likelihoods of constant action
/// rows under N(mu, diag(exp(log_std))^2). log_std is a 1 x k var (clamp it
/// before calling if bounds apply).
inline Var gaussian_nll_rows(Var mu, Var log_std, const Mat& actions) {
  Graph& g = *mu.g;
  const int rows = int(g.val(mu).rows());
  const int k = int(g.val(mu).cols());
  Var d2 = square(g.constant(actions) - mu);
  Var quad = rowwise_sum(mul_rowvec(d2, exp_(-2.0 * log_std)));
  Var base = 0.5 * quad + g.constant(Mat::Constant(rows, 1, 0.5 * k * kLog2Pi));
  return add_scalar_bcast(base, sum_all(log_std));
}

inline double categorical_log_prob(const Row& logits, int a) {
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return logits(a) - lse;
}

/// B x 1 negative log likelihoods of taken discrete actions.
inline Var categorical_nll_rows(Var logits, const std::vector<int>& actions) {
  return -gather_cols(log_softmax_rows(logits), actions);
}

}  // namespace arl
