#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <optional>

#include <Eigen/SVD>

#include "pinvnet/matrix.hpp"

namespace pinvnet {

struct PinvOptions {
  /// Singular values at or below this are treated as zero. Unset means
  /// max(rows, cols) * eps * sigma_max.
  std::optional<double> tolerance;
  /// Tikhonov parameter; 0 gives the exact Moore-Penrose inverse.
  double ridge = 0.0;

  void validate() const {
    if (tolerance && !(*tolerance >= 0.0)) throw InvalidArgument("pinv: tolerance must be >= 0");
    if (!(ridge >= 0.0) || !std::isfinite(ridge)) throw InvalidArgument("pinv: ridge must be >= 0");
  }
};

namespace detail {

inline Eigen::BDCSVD<Matrix> thin_svd(const Matrix& a) {
  return Eigen::BDCSVD<Matrix>(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
}

inline double cutoff(const Vector& sigma, Eigen::Index rows, Eigen::Index cols,
                     const PinvOptions& opts) {
  if (opts.tolerance) return *opts.tolerance;
  const double smax = sigma.size() ? sigma.maxCoeff() : 0.0;
  return static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon() * smax;
}

}  // namespace detail

/// Moore-Penrose pseudoinverse by truncated SVD.
///
/// With ridge > 0 each singular value s maps to s / (s^2 + ridge), which equals
/// (A^T A + ridge I)^-1 A^T for tall A and A^T (A A^T + ridge I)^-1 for wide A.
inline Matrix pinv(const Matrix& a, const PinvOptions& opts = {}) {
  require_finite(a, "pinv");
  opts.validate();
  const auto svd = detail::thin_svd(a);
  const Vector& s = svd.singularValues();
  Vector inv(s.size());
  if (opts.ridge > 0.0) {
    for (Eigen::Index i = 0; i < s.size(); ++i) inv(i) = s(i) / (s(i) * s(i) + opts.ridge);
  } else {
    const double tol = detail::cutoff(s, a.rows(), a.cols(), opts);
    for (Eigen::Index i = 0; i < s.size(); ++i) inv(i) = s(i) > tol ? 1.0 / s(i) : 0.0;
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

/// Number of singular values above the pinv cutoff.
inline std::size_t numerical_rank(const Matrix& a, const PinvOptions& opts = {}) {
  require_finite(a, "numerical_rank");
  const auto svd = detail::thin_svd(a);
  const Vector& s = svd.singularValues();
  const double tol = detail::cutoff(s, a.rows(), a.cols(), opts);
  return static_cast<std::size_t>((s.array() > tol).count());
}

/// Largest of the four Penrose-condition defects, each as a Frobenius norm
/// scaled by max(1, ||a||_F).
inline double penrose_residual(const Matrix& a, const Matrix& a_dag) {
  require_nonempty(a, "penrose_residual");
  if (a_dag.rows() != a.cols() || a_dag.cols() != a.rows()) {
    throw InvalidArgument("penrose_residual: expected " + std::to_string(a.cols()) + "x" +
                          std::to_string(a.rows()) + " inverse, got " + shape_string(a_dag));
  }
  const Matrix ax = a * a_dag;
  const Matrix xa = a_dag * a;
  const double r1 = (ax * a - a).norm();
  const double r2 = (xa * a_dag - a_dag).norm();
  const double r3 = (ax - ax.transpose()).norm();
  const double r4 = (xa - xa.transpose()).norm();
  const double scale = std::max(1.0, a.norm());
  return std::max({r1, r2, r3, r4}) / scale;
}

/// Minimum-norm minimiser of ||a * theta - y||_F.
inline Matrix solve_least_squares(const Matrix& a, const Matrix& y, const PinvOptions& opts = {}) {
  if (a.rows() != y.rows()) {
    throw InvalidArgument("solve_least_squares: row mismatch " + shape_string(a) + " vs " +
                          shape_string(y));
  }
  require_finite(y, "solve_least_squares");
  return pinv(a, opts) * y;
}

/// trace((g - y)^T (g - y)).
inline double sse(const Matrix& g, const Matrix& y) {
  require_same_shape(g, y, "sse");
  return (g - y).squaredNorm();
}

}  // namespace pinvnet
