#pragma once

#include <Eigen/Dense>

namespace arl {

/// Dense type bundle for a given scalar. Everything downstream runs on the
/// double instantiation; the templates exist so the core stays generic.
template <typename Scalar>
struct Dense {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Row = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
  using Arr = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
};

using Mat = Dense<double>::Mat;
using Vec = Dense<double>::Vec;
using Row = Dense<double>::Row;
using Vec2 = Eigen::Vector2d;

}  // namespace arl
