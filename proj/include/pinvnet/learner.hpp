#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "pinvnet/activation.hpp"
#include "pinvnet/network.hpp"
#include "pinvnet/pinv.hpp"
#include "pinvnet/random.hpp"

namespace pinvnet {

/// Placeholders R_k drawn uniformly from [-scale, scale].
struct RandomInit {
  std::uint64_t seed = 0;
  double scale = 1.0;
};

/// Inner layers take the pseudoinverse of their own input (W_1 = X^+, W_k = A_{k-1}^+),
/// which forces every hidden width to equal the sample count.
struct DataMatrixInit {};

struct InitScheme {
  std::variant<RandomInit, DataMatrixInit> variant = RandomInit{};
  /// Order in which inner layers (0-based, excluding the output layer) are
  /// solved. Empty means 0, 1, ..., n-2. The output layer is always solved last.
  std::vector<std::size_t> solve_order;

  bool is_random() const { return std::holds_alternative<RandomInit>(variant); }
  std::string describe() const { return is_random() ? "random" : "data_matrix"; }
};

struct TrainConfig {
  InitScheme init;
  PinvOptions pinv;
  /// Back-target entries at or below an inverse-domain bound are raised to
  /// bound + clamp_margin. Disabled, they raise DomainViolation instead.
  bool clamp = true;
  double clamp_margin = 1e-9;
  /// Keep each layer's design matrix and target in the report.
  bool record_intermediates = false;

  std::optional<double> effective_clamp() const {
    if (!clamp) return std::nullopt;
    return clamp_margin;
  }
};

struct TrainReport {
  WeightSet weights;
  double train_sse = 0.0;
  /// ||A_{k-1} W_k - T_k||_F for each layer k, where T_k is what it was solved against.
  std::vector<double> solve_residuals;
  /// Entries clamped while forming each layer's target.
  std::vector<std::size_t> clamped_counts;
  /// Layer indices in the order they were solved.
  std::vector<std::size_t> solve_order;
  double wall_time = 0.0;
  std::vector<Matrix> designs;
  std::vector<Matrix> targets;
};

struct BackTarget {
  Matrix value;
  std::size_t clamped = 0;
};

/// Peels fixed downstream layers off the target.
///
/// `weights_after` and `activations_after` run from the output layer inwards.
/// Each step applies the layer's activation inverse and then right-multiplies by
/// the pseudoinverse of its weight. The output layer's inverse is skipped when
/// `linear_output` is set. The activation of the layer being solved is not
/// applied here.
inline BackTarget back_target(const Matrix& y, std::span<const Matrix> weights_after,
                              std::span<const Activation> activations_after, bool linear_output,
                              std::optional<double> clamp_margin = 1e-9,
                              const PinvOptions& opts = {}) {
  if (weights_after.size() != activations_after.size()) {
    throw InvalidArgument("back_target: weights and activations differ in length");
  }
  BackTarget out{y, 0};
  for (std::size_t i = 0; i < weights_after.size(); ++i) {
    const Matrix& w = weights_after[i];
    if (w.cols() != out.value.cols()) {
      throw InvalidArgument("back_target: weight " + shape_string(w) + " does not match target " +
                            shape_string(out.value));
    }
    if (!(i == 0 && linear_output)) {
      auto inv = invert(activations_after[i], out.value, clamp_margin);
      out.value = std::move(inv.value);
      out.clamped += inv.clamped;
    }
    out.value = out.value * pinv(w, opts);
  }
  return out;
}

/// Least squares restricted to each column's support in `mask`.
/// Column j of the result is pinv(a[:, S_j]) t[:, j] on S_j and zero elsewhere.
inline Matrix solve_masked_layer(const Matrix& a, const Matrix& t, const Mask& mask,
                                 const PinvOptions& opts = {}) {
  if (a.rows() != t.rows() || mask.rows() != a.cols() || mask.cols() != t.cols()) {
    throw InvalidArgument("solve_masked_layer: shapes " + shape_string(a) + ", " + shape_string(t) +
                          ", mask " + std::to_string(mask.rows()) + "x" +
                          std::to_string(mask.cols()) + " do not chain");
  }
  Matrix w = Matrix::Zero(a.cols(), t.cols());
  if (mask.all()) return solve_least_squares(a, t, opts);
  for (Eigen::Index j = 0; j < t.cols(); ++j) {
    std::vector<Eigen::Index> support;
    for (Eigen::Index i = 0; i < mask.rows(); ++i)
      if (mask(i, j)) support.push_back(i);
    if (support.empty()) continue;
    const Matrix sub = a(Eigen::all, support);
    const Vector coef = pinv(sub, opts) * t.col(j);
    for (std::size_t s = 0; s < support.size(); ++s) w(support[s], j) = coef(static_cast<Eigen::Index>(s));
  }
  return w;
}

namespace detail {

inline std::vector<std::size_t> resolve_solve_order(const InitScheme& init, std::size_t depth) {
  std::vector<std::size_t> order = init.solve_order;
  if (order.empty()) {
    order.resize(depth - 1);
    std::iota(order.begin(), order.end(), std::size_t{0});
  } else {
    if (!init.is_random()) {
      throw InvalidConfiguration("a custom solve order needs random initialization");
    }
    std::vector<std::size_t> sorted = order;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      if (sorted.size() != depth - 1 || sorted[i] != i) {
        throw InvalidConfiguration(
            "solve order must list every inner layer exactly once; the output layer is solved last");
      }
    }
  }
  order.push_back(depth - 1);
  return order;
}

/// Placeholder for layer k, drawn from its own sub-stream so that every
/// solve order sees the same R_k for a given seed.
inline Matrix placeholder(const NetworkSpec& spec, std::size_t k, const RandomInit& init) {
  Rng rng(init.seed, "init", k);
  Matrix r = rng.uniform_matrix(static_cast<Eigen::Index>(spec.layer_input_dim(k)),
                                static_cast<Eigen::Index>(spec.layers[k].width), -1.0, 1.0) *
             init.scale;
  if (auto mask = layer_mask(spec, k)) r = apply_mask(std::move(r), *mask);
  return r;
}

}  // namespace detail

/// Gradient-free training: every layer is solved in closed form by a
/// pseudoinverse projection.
///
/// Random init: placeholders stand in for unsolved layers. Layer k is solved
/// against design A_{k-1} (the current network up to k) and target
/// g_k(back_target through the current layers k+1..n), then replaces its
/// placeholder for all later solves. Data-matrix init: W_k = A_{k-1}^+ for inner
/// layers and W_n = A_{n-1}^+ g_n(Y).
inline TrainReport train(const NetworkSpec& spec, const Matrix& x_raw, const Matrix& y,
                         const TrainConfig& cfg) {
  const auto started = std::chrono::steady_clock::now();
  spec.validate();
  cfg.pinv.validate();
  require_finite(x_raw, "train");
  require_finite(y, "train");
  if (x_raw.rows() != y.rows()) {
    throw InvalidArgument("train: " + std::to_string(x_raw.rows()) + " inputs but " +
                          std::to_string(y.rows()) + " targets");
  }
  if (static_cast<std::size_t>(x_raw.cols()) != spec.input_dim) {
    throw InvalidArgument("train: input has " + std::to_string(x_raw.cols()) +
                          " columns, network expects " + std::to_string(spec.input_dim));
  }
  if (static_cast<std::size_t>(y.cols()) != spec.output_dim()) {
    throw InvalidArgument("train: target has " + std::to_string(y.cols()) +
                          " columns, output layer has " + std::to_string(spec.output_dim()));
  }
  if (cfg.clamp && !(cfg.clamp_margin >= 0.0)) {
    throw InvalidConfiguration("clamp margin must be >= 0");
  }

  const std::size_t n = spec.depth();
  const auto m = static_cast<std::size_t>(x_raw.rows());
  const Matrix x = augment(x_raw);
  const auto clamp = cfg.effective_clamp();
  const auto& out_act = spec.layers.back().activation;

  TrainReport report;
  report.solve_residuals.assign(n, 0.0);
  report.clamped_counts.assign(n, 0);
  report.solve_order = detail::resolve_solve_order(cfg.init, n);

  std::vector<Matrix> current(n);

  if (const auto* rnd = std::get_if<RandomInit>(&cfg.init.variant)) {
    if (!(rnd->scale > 0.0)) throw InvalidConfiguration("scaling factor c must be > 0");
    for (std::size_t k = 0; k < n; ++k) current[k] = detail::placeholder(spec, k, *rnd);

    for (std::size_t k : report.solve_order) {
      const Matrix design = detail::propagate(spec, current, x, k);

      std::vector<Matrix> after;
      std::vector<Activation> acts;
      for (std::size_t j = n; j-- > k + 1;) {
        after.push_back(current[j]);
        acts.push_back(spec.layers[j].activation);
      }
      auto peeled = back_target(y, after, acts, spec.linear_output, clamp, cfg.pinv);
      Matrix target;
      if (k + 1 == n && spec.linear_output) {
        target = std::move(peeled.value);
      } else {
        auto inv = invert(spec.layers[k].activation, peeled.value, clamp);
        target = std::move(inv.value);
        peeled.clamped += inv.clamped;
      }

      const auto mask = layer_mask(spec, k);
      Matrix w = mask ? solve_masked_layer(design, target, *mask, cfg.pinv)
                      : solve_least_squares(design, target, cfg.pinv);
      report.solve_residuals[k] = (design * w - target).norm();
      report.clamped_counts[k] = peeled.clamped;
      if (cfg.record_intermediates) {
        report.designs.push_back(design);
        report.targets.push_back(target);
      }
      current[k] = std::move(w);
    }
  } else {
    for (std::size_t k = 0; k + 1 < n; ++k) {
      if (spec.layers[k].width != m) {
        throw InvalidConfiguration("data-matrix initialization needs every hidden width equal to the "
                                   "sample count " +
                                   std::to_string(m) + "; layer " + std::to_string(k + 1) +
                                   " has width " + std::to_string(spec.layers[k].width));
      }
      if (spec.layers[k].band) {
        throw InvalidConfiguration("data-matrix initialization does not support banded layers");
      }
    }
    Matrix design = x;
    for (std::size_t k = 0; k < n; ++k) {
      Matrix target;
      if (k + 1 < n) {
        target = Matrix::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
        current[k] = pinv(design, cfg.pinv);
      } else {
        if (spec.linear_output) {
          target = y;
        } else {
          auto inv = invert(out_act, y, clamp);
          target = std::move(inv.value);
          report.clamped_counts[k] = inv.clamped;
        }
        const auto mask = layer_mask(spec, k);
        current[k] = mask ? solve_masked_layer(design, target, *mask, cfg.pinv)
                          : solve_least_squares(design, target, cfg.pinv);
      }
      report.solve_residuals[k] = (design * current[k] - target).norm();
      if (cfg.record_intermediates) {
        report.designs.push_back(design);
        report.targets.push_back(target);
      }
      if (k + 1 < n) design = apply(spec.layers[k].activation, design * current[k]);
    }
  }

  report.weights = WeightSet(spec, std::move(current));
  report.train_sse = sse(forward(spec, report.weights, x_raw), y);
  report.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

}  // namespace pinvnet
