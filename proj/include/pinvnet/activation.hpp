#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>

#include "pinvnet/matrix.hpp"

namespace pinvnet {

/// Elementwise, strictly increasing, invertible activation.
///
///   identity    f(x) = x
///   softplus    f(x) = log(1 + e^x)      inverse domain y > 0
///   softplus08  f(x) = log(0.8 + e^x)    inverse domain y > ln 0.8
///   exp_scaled  f(x) = e^(alpha x)       inverse domain y > 0
class Activation {
 public:
  enum class Kind { identity, softplus, softplus08, exp_scaled };

  static constexpr double kDefaultExpAlpha = 1e-4;

  constexpr Activation() = default;

  static constexpr Activation identity() { return Activation(Kind::identity, 0.0); }
  static constexpr Activation softplus() { return Activation(Kind::softplus, 0.0); }
  static constexpr Activation softplus08() { return Activation(Kind::softplus08, 0.0); }
  static Activation exp_scaled(double alpha = kDefaultExpAlpha) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
      throw InvalidArgument("exp_scaled activation needs alpha > 0");
    }
    return Activation(Kind::exp_scaled, alpha);
  }

  constexpr Kind kind() const { return kind_; }
  constexpr double alpha() const { return alpha_; }
  constexpr bool is_identity() const { return kind_ == Kind::identity; }

  /// Infimum of the range of f; the inverse is defined strictly above it.
  double lower_bound() const {
    switch (kind_) {
      case Kind::identity:
        return -std::numeric_limits<double>::infinity();
      case Kind::softplus:
      case Kind::exp_scaled:
        return 0.0;
      case Kind::softplus08:
        return std::log(0.8);
    }
    return 0.0;
  }

  double operator()(double x) const {
    switch (kind_) {
      case Kind::identity:
        return x;
      case Kind::softplus:
        return x > 30.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
      case Kind::softplus08:
        return x > 30.0 ? x + std::log1p(0.8 * std::exp(-x)) : std::log(0.8 + std::exp(x));
      case Kind::exp_scaled:
        return std::exp(alpha_ * x);
    }
    return x;
  }

  /// Inverse without domain checking; NaN or -inf below the bound.
  double inverse(double y) const {
    switch (kind_) {
      case Kind::identity:
        return y;
      case Kind::softplus:
        return y > 30.0 ? y + std::log1p(-std::exp(-y)) : std::log(std::expm1(y));
      case Kind::softplus08:
        return y > 30.0 ? y + std::log1p(-0.8 * std::exp(-y)) : std::log(std::exp(y) - 0.8);
      case Kind::exp_scaled:
        return std::log(y) / alpha_;
    }
    return y;
  }

  std::string name() const {
    switch (kind_) {
      case Kind::identity:
        return "identity";
      case Kind::softplus:
        return "softplus";
      case Kind::softplus08:
        return "softplus08";
      case Kind::exp_scaled: {
        char buf[64];
        auto res = std::to_chars(buf, buf + sizeof buf, alpha_, std::chars_format::fixed);
        return "exp:" + std::string(buf, res.ptr);
      }
    }
    return "identity";
  }

  /// Accepts "identity", "softplus", "softplus08" (alias "softplus8"), "exp" and "exp:<alpha>".
  static Activation parse(std::string_view text) {
    if (text == "identity" || text == "linear") return identity();
    if (text == "softplus") return softplus();
    if (text == "softplus08" || text == "softplus8") return softplus08();
    if (text == "exp") return exp_scaled();
    if (text.substr(0, 4) == "exp:") {
      const auto digits = text.substr(4);
      double alpha = 0.0;
      auto res = std::from_chars(digits.data(), digits.data() + digits.size(), alpha);
      if (res.ec != std::errc{} || res.ptr != digits.data() + digits.size()) {
        throw ParseError("bad exp activation parameter: '" + std::string(digits) + "'");
      }
      return exp_scaled(alpha);
    }
    throw ParseError("unknown activation '" + std::string(text) + "'");
  }

  friend constexpr bool operator==(const Activation&, const Activation&) = default;

 private:
  constexpr Activation(Kind k, double a) : kind_(k), alpha_(a) {}

  Kind kind_ = Kind::identity;
  double alpha_ = 0.0;
};

inline Matrix apply(const Activation& f, const Matrix& a) {
  if (f.is_identity()) return a;
  return a.unaryExpr([&f](double x) { return f(x); });
}

struct InvertResult {
  Matrix value;
  std::size_t clamped = 0;
};

/// Entrywise inverse of `f`.
///
/// Without a clamp margin, any entry at or below the domain bound L raises
/// DomainViolation. With margin d, entries <= L + d are raised to L + d first and
/// counted in `clamped`.
inline InvertResult invert(const Activation& f, const Matrix& y,
                           std::optional<double> clamp_margin = std::nullopt) {
  if (clamp_margin && !(*clamp_margin >= 0.0)) {
    throw InvalidArgument("invert: clamp margin must be >= 0");
  }
  InvertResult out{Matrix(y.rows(), y.cols()), 0};
  if (f.is_identity()) {
    out.value = y;
    return out;
  }
  const double bound = f.lower_bound();
  const double floor = clamp_margin ? bound + *clamp_margin : bound;
  for (Eigen::Index j = 0; j < y.cols(); ++j) {
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      double v = y(i, j);
      if (std::isnan(v)) {
        throw DomainViolation(static_cast<std::size_t>(i), static_cast<std::size_t>(j), v, bound);
      }
      if (clamp_margin && v <= floor) {
        v = floor;
        ++out.clamped;
      }
      const double x = f.inverse(v);
      if (!(v > bound) || !std::isfinite(x)) {
        throw DomainViolation(static_cast<std::size_t>(i), static_cast<std::size_t>(j), y(i, j),
                              bound);
      }
      out.value(i, j) = x;
    }
  }
  return out;
}

}  // namespace pinvnet
