#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "pinvnet/activation.hpp"
#include "pinvnet/pinv.hpp"
#include "pinvnet/random.hpp"

namespace pinvnet {

struct RepresentationReport {
  /// ||A A^+ Y - Y||_F / max(1, ||Y||_F)
  double residual = 0.0;
  std::size_t rank_estimate = 0;
  bool is_representative = false;
};

/// Whether the columns of `y` lie in the range of `a`.
inline RepresentationReport representation_check(const Matrix& a, const Matrix& y, double tol = 1e-9,
                                                 const PinvOptions& opts = {}) {
  if (a.rows() != y.rows()) {
    throw InvalidArgument("representation_check: row mismatch " + shape_string(a) + " vs " +
                          shape_string(y));
  }
  if (!(tol > 0.0)) throw InvalidArgument("representation_check: tolerance must be > 0");
  require_finite(y, "representation_check");
  RepresentationReport out;
  const Matrix projected = a * (pinv(a, opts) * y);
  out.residual = (projected - y).norm() / std::max(1.0, y.norm());
  out.rank_estimate = numerical_rank(a, opts);
  out.is_representative = out.residual <= tol;
  return out;
}

namespace detail {

struct PinvAndProjector {
  Matrix pinv;
  Matrix projector;
};

/// A^+ and A A^+ from one SVD. The projector is U_r U_r^T, and exactly the
/// identity when `a` is numerically full row rank.
inline PinvAndProjector pinv_and_projector(const Matrix& a, const PinvOptions& opts = {}) {
  require_finite(a, "range_projector");
  const auto svd = thin_svd(a);
  const Vector& s = svd.singularValues();
  const double tol = cutoff(s, a.rows(), a.cols(), opts);
  const auto r = static_cast<Eigen::Index>((s.array() > tol).count());
  PinvAndProjector out;
  const auto u = svd.matrixU().leftCols(r);
  const Vector inv = s.head(r).cwiseInverse();
  out.pinv = svd.matrixV().leftCols(r) * inv.asDiagonal() * u.transpose();
  if (r == a.rows()) {
    out.projector = Matrix::Identity(a.rows(), a.rows());
  } else {
    out.projector = u * u.transpose();
  }
  return out;
}

}  // namespace detail

/// Orthogonal projector A A^+ onto the range of `a`.
inline Matrix range_projector(const Matrix& a, const PinvOptions& opts = {}) {
  return detail::pinv_and_projector(a, opts).projector;
}

/// H_1 = X, H_{k+1} = f(H_k H_k^+). Every H_k past the first is m x m.
inline std::vector<Matrix> variance_chain(const Matrix& x, const Activation& f, std::size_t max_depth,
                                          const PinvOptions& opts = {}) {
  require_finite(x, "variance_chain");
  if (max_depth < 1) throw InvalidArgument("variance_chain: max_depth must be >= 1");
  std::vector<Matrix> chain{x};
  while (chain.size() < max_depth) chain.push_back(apply(f, range_projector(chain.back(), opts)));
  return chain;
}

struct VarianceConfig {
  std::size_t m = 100;
  std::size_t d = 10;
  double input_lo = -5.0;
  double input_hi = 5.0;
  double noise_scale = 1.0;
  std::size_t trials = 1000;
  std::size_t max_depth = 8;
  Activation activation = Activation::exp_scaled();
  std::uint64_t seed = 0;

  void validate() const {
    if (m < 1 || d < 1) throw InvalidConfiguration("variance: m and d must be >= 1");
    if (!(input_lo < input_hi)) throw InvalidConfiguration("variance: input range is empty");
    if (!(noise_scale > 0.0)) throw InvalidConfiguration("variance: noise scale must be > 0");
    if (trials < 1) throw InvalidConfiguration("variance: trials must be >= 1");
    if (max_depth < 1) throw InvalidConfiguration("variance: max_depth must be >= 1");
  }
};

struct VarianceReport {
  /// Entry k-1 belongs to depth k.
  std::vector<double> per_depth_mean;
  std::vector<double> per_depth_std;
  /// Length of x0 at each depth: d for depth 1, m afterwards.
  std::vector<std::size_t> probe_dim;
};

/// Monte Carlo estimate of (x0^T H_k^+ eps)^2 for k = 1..max_depth.
///
/// Each trial draws X (m x d) and x0 uniformly from the input range and eps
/// uniformly from [-noise_scale, noise_scale]^m, all from its own sub-stream.
/// The same x0 (its first d entries at depth 1) and eps serve every depth of a
/// trial. The spread is the population standard deviation over trials.
inline VarianceReport mc_output_variance(const VarianceConfig& cfg) {
  cfg.validate();
  const auto m = static_cast<Eigen::Index>(cfg.m);
  const auto d = static_cast<Eigen::Index>(cfg.d);
  std::vector<double> sum(cfg.max_depth, 0.0);
  std::vector<double> sum_sq(cfg.max_depth, 0.0);
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    Rng rng(cfg.seed, "mc", t);
    const Matrix x = rng.uniform_matrix(m, d, cfg.input_lo, cfg.input_hi);
    const Vector x0 = rng.uniform_matrix(std::max(m, d), 1, cfg.input_lo, cfg.input_hi);
    const Vector eps = rng.uniform_matrix(m, 1, -cfg.noise_scale, cfg.noise_scale);
    Matrix h = x;
    for (std::size_t k = 0; k < cfg.max_depth; ++k) {
      auto pp = detail::pinv_and_projector(h);
      const double v = x0.head(pp.pinv.rows()).dot(pp.pinv * eps);
      sum[k] += v * v;
      sum_sq[k] += v * v * v * v;
      if (k + 1 < cfg.max_depth) h = apply(cfg.activation, pp.projector);
    }
  }
  VarianceReport out;
  const auto n = static_cast<double>(cfg.trials);
  for (std::size_t k = 0; k < cfg.max_depth; ++k) {
    const double mean = sum[k] / n;
    out.per_depth_mean.push_back(mean);
    out.per_depth_std.push_back(std::sqrt(std::max(0.0, sum_sq[k] / n - mean * mean)));
    out.probe_dim.push_back(k == 0 ? cfg.d : cfg.m);
  }
  return out;
}

/// Number of feasible weight-set families of an n-layer network, as the pair
/// (exponent, multiplier) of N^exponent * multiplier, where N is the
/// (unbounded) number of choices per free layer.
///
/// For n = 2 the general formula gives 2N while the two-layer argument on its
/// own counts N; the general formula is returned.
inline std::pair<std::size_t, std::size_t> solution_count(std::size_t n) {
  if (n < 2) throw InvalidArgument("solution_count: a single layer has a unique solution; need n >= 2");
  return {n - 1, n};
}

/// Empirical squared bias: mean over test points and outputs of
/// (average prediction across fits - truth)^2.
inline double bias_squared(const std::vector<Matrix>& predictions, const Matrix& truth) {
  if (predictions.empty()) throw InvalidArgument("bias_squared: no predictions");
  require_nonempty(truth, "bias_squared");
  Matrix mean = Matrix::Zero(truth.rows(), truth.cols());
  for (const auto& p : predictions) {
    require_same_shape(p, truth, "bias_squared");
    mean += p;
  }
  mean /= static_cast<double>(predictions.size());
  return (mean - truth).squaredNorm() / static_cast<double>(truth.size());
}

/// Mean over test points of the across-fit variance of the prediction.
inline double prediction_variance(const std::vector<Matrix>& predictions) {
  if (predictions.empty()) throw InvalidArgument("prediction_variance: no predictions");
  Matrix mean = Matrix::Zero(predictions[0].rows(), predictions[0].cols());
  for (const auto& p : predictions) {
    require_same_shape(p, mean, "prediction_variance");
    mean += p;
  }
  mean /= static_cast<double>(predictions.size());
  double acc = 0.0;
  for (const auto& p : predictions) acc += (p - mean).squaredNorm();
  return acc / static_cast<double>(predictions.size() * static_cast<std::size_t>(mean.size()));
}

}  // namespace pinvnet
