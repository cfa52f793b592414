#include "arl/core/mlp.hpp"

#include <Eigen/QR>

namespace arl {

int MlpSpec::tensor_count() const {
  const int hidden = layers() - 1;
  int n = 2 * layers() + (layer_norm ? 2 * hidden : 0);
  if (head == Head::gaussian) ++n;
  return n;
}

bool ParamSet::all_finite() const {
  for (const auto& w : t)
    if (!w.allFinite()) return false;
  return true;
}

MlpSpec mlp_spec(std::vector<int> sizes, bool layer_norm, FinalInit fi, Head head) {
  require(sizes.size() >= 2, "mlp_spec: need at least in/out sizes");
  for (int s : sizes) require(s > 0, "mlp_spec: sizes must be positive");
  return MlpSpec{std::move(sizes), layer_norm, fi, head};
}

namespace {

Mat gaussian_matrix(int rows, int cols, Rng& rng) {
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

// Orthonormal columns (rows if cols > rows) of a random matrix's QR factor;
// entries scale like 1/sqrt(fan_in).
Mat orthogonal_init(int rows, int cols, Rng& rng) {
  const bool tall = rows >= cols;
  const int r = tall ? rows : cols;
  const int c = tall ? cols : rows;
  Mat g = gaussian_matrix(r, c, rng);
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ() * Mat::Identity(r, c);
  // Fix the sign ambiguity so the draw is a deterministic function of g.
  Mat rfac = qr.matrixQR().topRows(c).triangularView<Eigen::Upper>();
  for (int j = 0; j < c; ++j)
    if (rfac(j, j) < 0) q.col(j) *= -1.0;
  return tall ? q : Mat(q.transpose());
}

}  // namespace

ParamSet init_params(const MlpSpec& spec, Rng& rng) {
  ParamSet p;
  for (int l = 0; l < spec.layers(); ++l) {
    const int in = spec.sizes[l];
    const int out = spec.sizes[l + 1];
    const bool final_layer = l == spec.layers() - 1;
    if (final_layer && spec.final_init == FinalInit::zero)
      p.t.push_back(Mat::Zero(in, out));
    else
      p.t.push_back(orthogonal_init(in, out, rng));
    p.t.push_back(Mat::Zero(1, out));
    if (spec.layer_norm && !final_layer) {
      p.t.push_back(Mat::Ones(1, out));
      p.t.push_back(Mat::Zero(1, out));
    }
  }
  if (spec.head == Head::gaussian) p.t.push_back(Mat::Zero(1, spec.out_dim()));
  return p;
}

Mat mlp_forward(const MlpSpec& spec, const ParamSet& p, const Mat& x) {
  require(int(p.t.size()) == spec.tensor_count(), "mlp_forward: wrong tensor count");
  require(x.cols() == spec.in_dim(), "mlp_forward: input dim mismatch");
  Mat h = x;
  size_t i = 0;
  for (int l = 0; l < spec.layers(); ++l) {
    const bool final_layer = l == spec.layers() - 1;
    h = (h * p.t[i]).rowwise() + p.t[i + 1].row(0);
    i += 2;
    if (final_layer) break;
    if (spec.layer_norm) {
      const auto& gain = p.t[i].row(0);
      const auto& bias = p.t[i + 1].row(0);
      i += 2;
      for (int r = 0; r < h.rows(); ++r) {
        const double mu = h.row(r).mean();
        const double var = (h.row(r).array() - mu).square().sum() / h.cols();
        h.row(r) = (((h.row(r).array() - mu) / std::sqrt(var + 1e-5)) * gain.array() +
                    bias.array())
                       .matrix();
      }
    }
    h = h.unaryExpr([](double v) { return gelu(v); });
  }
  return h;
}

Var mlp_forward(Graph& g, const MlpSpec& spec, const std::vector<Var>& leaves, Var x) {
  require(int(leaves.size()) == spec.tensor_count(), "mlp_forward: wrong leaf count");
  Var h = x;
  size_t i = 0;
  for (int l = 0; l < spec.layers(); ++l) {
    const bool final_layer = l == spec.layers() - 1;
    h = add_rowvec(matmul(h, leaves[i]), leaves[i + 1]);
    i += 2;
    if (final_layer) break;
    if (spec.layer_norm) {
      h = add_rowvec(mul_rowvec(layer_norm_rows(h), leaves[i]), leaves[i + 1]);
      i += 2;
    }
    h = gelu_(h);
  }
  return h;
}

std::vector<Var> param_leaves(Graph& g, const ParamSet& p, bool trainable) {
  std::vector<Var> vs;
  vs.reserve(p.t.size());
  for (const auto& w : p.t) vs.push_back(g.leaf(w, trainable));
  return vs;
}

NetBundle init_bundle(const MlpSpec& spec, Rng& rng) {
  NetBundle net;
  net.spec = spec;
  net.online = init_params(spec, rng);
  net.target = net.online;
  return net;
}

void polyak_update(NetBundle& net, double rate) {
  require(rate >= 0.0 && rate <= 1.0, "polyak_update: rate in [0,1]");
  for (size_t i = 0; i < net.online.t.size(); ++i)
    net.target.t[i] = (1.0 - rate) * net.target.t[i] + rate * net.online.t[i];
}

}  // namespace arl
