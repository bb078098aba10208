#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include <Eigen/Dense>

#include "pinvnet/error.hpp"

namespace pinvnet {

/// Dense real matrix, one row per sample and one column per feature.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
/// Boolean sparsity pattern; true marks a trainable weight.
using Mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

inline void require_nonempty(const Matrix& m, const char* what) {
  if (m.rows() < 1 || m.cols() < 1) {
    throw InvalidArgument(std::string(what) + ": matrix must have at least one row and column, got " +
                          std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

inline void require_finite(const Matrix& m, const char* what) {
  require_nonempty(m, what);
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (!std::isfinite(m(i, j))) {
        throw InvalidArgument(std::string(what) + ": non-finite entry at (" + std::to_string(i) +
                              ", " + std::to_string(j) + ")");
      }
    }
  }
}

inline void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InvalidArgument(std::string(what) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                          std::to_string(b.cols()));
  }
}

inline std::string shape_string(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace pinvnet
