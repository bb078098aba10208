#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "pinvnet/activation.hpp"
#include "pinvnet/matrix.hpp"

namespace pinvnet {

struct LayerSpec {
  std::size_t width = 1;
  /// Receptive-field size r (odd). Unset means a fully connected layer.
  std::optional<std::size_t> band;
  Activation activation = Activation::softplus08();

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Width and optional band of one layer as written in a structure string.
struct LayerShape {
  std::size_t width = 1;
  std::optional<std::size_t> band;

  friend bool operator==(const LayerShape&, const LayerShape&) = default;
};

/// Parses "150^r3-250-150-6": widths joined by '-', "^r<k>" marks a banded layer.
inline std::vector<LayerShape> parse_structure(std::string_view text) {
  std::vector<LayerShape> shapes;
  if (text.empty()) throw ParseError("empty structure string");
  auto parse_count = [&](std::string_view s) {
    std::size_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size() || v == 0) {
      throw ParseError("bad count '" + std::string(s) + "' in structure '" + std::string(text) + "'");
    }
    return v;
  };
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto dash = text.find('-', start);
    const auto token = text.substr(start, dash == std::string_view::npos ? text.npos : dash - start);
    LayerShape shape;
    const auto caret = token.find('^');
    if (caret == std::string_view::npos) {
      shape.width = parse_count(token);
    } else {
      shape.width = parse_count(token.substr(0, caret));
      const auto suffix = token.substr(caret + 1);
      if (suffix.size() < 2 || suffix[0] != 'r') {
        throw ParseError("bad receptive-field suffix '" + std::string(suffix) + "'");
      }
      shape.band = parse_count(suffix.substr(1));
      if (*shape.band % 2 == 0) throw ParseError("receptive field must be odd: '" + std::string(token) + "'");
    }
    shapes.push_back(shape);
    if (dash == std::string_view::npos) break;
    start = dash + 1;
  }
  return shapes;
}

struct NetworkSpec {
  /// Raw input dimension d, before the bias column is prepended.
  std::size_t input_dim = 1;
  std::vector<LayerSpec> layers;
  /// Skip the last layer's activation on output.
  bool linear_output = false;

  std::size_t depth() const { return layers.size(); }
  std::size_t output_dim() const { return layers.back().width; }
  /// Row count of layer k's weight matrix.
  std::size_t layer_input_dim(std::size_t k) const {
    return k == 0 ? input_dim + 1 : layers[k - 1].width;
  }

  void validate() const {
    if (input_dim < 1) throw InvalidArgument("network: input dimension must be >= 1");
    if (layers.empty()) throw InvalidArgument("network: at least one layer required");
    for (std::size_t k = 0; k < layers.size(); ++k) {
      if (layers[k].width < 1) throw InvalidArgument("network: layer widths must be >= 1");
      if (layers[k].band && (*layers[k].band < 1 || *layers[k].band % 2 == 0)) {
        throw InvalidArgument("network: receptive field of layer " + std::to_string(k + 1) +
                              " must be odd and >= 1");
      }
    }
  }

  /// One activation and linearity flag for every layer.
  static NetworkSpec from_structure(std::size_t input_dim, std::string_view structure,
                                    Activation activation, bool linear_output) {
    NetworkSpec spec;
    spec.input_dim = input_dim;
    spec.linear_output = linear_output;
    for (const auto& s : parse_structure(structure)) {
      spec.layers.push_back(LayerSpec{s.width, s.band, activation});
    }
    spec.validate();
    return spec;
  }

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

inline std::string format_structure(const std::vector<LayerShape>& shapes) {
  std::string out;
  for (std::size_t k = 0; k < shapes.size(); ++k) {
    if (k) out += '-';
    out += std::to_string(shapes[k].width);
    if (shapes[k].band) out += "^r" + std::to_string(*shapes[k].band);
  }
  return out;
}

inline std::string format_structure(const NetworkSpec& spec) {
  std::vector<LayerShape> shapes;
  for (const auto& l : spec.layers) shapes.push_back({l.width, l.band});
  return format_structure(shapes);
}

/// Prepends a column of ones.
inline Matrix augment(const Matrix& x) {
  require_nonempty(x, "augment");
  Matrix out(x.rows(), x.cols() + 1);
  out.col(0).setOnes();
  out.rightCols(x.cols()) = x;
  return out;
}

/// Banded connectivity: each output column sees a run of r consecutive inputs.
///
/// Column j is centred on input index round(j (d-1) / (width-1)) and the run is
/// shifted inward at the edges so every column keeps r inputs. With a biased
/// input the bias row sits just before data index 0 and joins the first bands.
inline Mask receptive_mask(std::size_t in_dim, std::size_t width, std::size_t r, bool biased_input) {
  if (r < 1 || r % 2 == 0) throw InvalidArgument("receptive_mask: r must be odd and >= 1");
  if (in_dim < 1 || width < 1) throw InvalidArgument("receptive_mask: dimensions must be >= 1");
  if (biased_input && in_dim < 2) throw InvalidArgument("receptive_mask: biased input needs a data row");
  const auto rows = static_cast<Eigen::Index>(in_dim);
  const auto cols = static_cast<Eigen::Index>(width);
  const std::size_t data_dim = biased_input ? in_dim - 1 : in_dim;
  if (r > data_dim) return Mask::Constant(rows, cols, true);

  Mask mask = Mask::Constant(rows, cols, false);
  const auto half = static_cast<long>(r / 2);
  const long offset = biased_input ? 1 : 0;
  for (std::size_t j = 0; j < width; ++j) {
    long centre;
    if (width > 1) {
      centre = std::lround(static_cast<double>(j) * static_cast<double>(data_dim - 1) /
                           static_cast<double>(width - 1));
    } else {
      centre = std::lround(static_cast<double>(data_dim - 1) / 2.0);
    }
    long lo = centre + offset - half;
    long hi = centre + offset + half;
    if (lo < 0) {
      hi -= lo;
      lo = 0;
    }
    if (hi > rows - 1) {
      lo -= hi - (rows - 1);
      hi = rows - 1;
    }
    for (long i = lo; i <= hi; ++i) mask(i, static_cast<Eigen::Index>(j)) = true;
  }
  return mask;
}

/// Mask for layer k of `spec`, or nothing for a fully connected layer.
inline std::optional<Mask> layer_mask(const NetworkSpec& spec, std::size_t k) {
  const auto& layer = spec.layers.at(k);
  if (!layer.band) return std::nullopt;
  return receptive_mask(spec.layer_input_dim(k), layer.width, *layer.band, k == 0);
}

inline Matrix apply_mask(Matrix w, const Mask& mask) {
  require_same_shape(w, mask.cast<double>(), "apply_mask");
  return mask.select(w, Matrix::Zero(w.rows(), w.cols()));
}

/// One weight matrix per layer plus the sparsity patterns they obey.
class WeightSet {
 public:
  WeightSet() = default;

  /// Checks shapes against `spec` and zeroes every masked-out entry.
  WeightSet(const NetworkSpec& spec, std::vector<Matrix> weights) {
    spec.validate();
    if (weights.size() != spec.depth()) {
      throw InvalidArgument("weights: expected " + std::to_string(spec.depth()) + " matrices, got " +
                            std::to_string(weights.size()));
    }
    for (std::size_t k = 0; k < weights.size(); ++k) {
      const auto rows = static_cast<Eigen::Index>(spec.layer_input_dim(k));
      const auto cols = static_cast<Eigen::Index>(spec.layers[k].width);
      if (weights[k].rows() != rows || weights[k].cols() != cols) {
        throw InvalidArgument("weights: layer " + std::to_string(k + 1) + " expected " +
                              std::to_string(rows) + "x" + std::to_string(cols) + ", got " +
                              shape_string(weights[k]));
      }
      auto mask = layer_mask(spec, k);
      if (mask) weights[k] = apply_mask(std::move(weights[k]), *mask);
      masks_.push_back(std::move(mask));
    }
    weights_ = std::move(weights);
  }

  std::size_t size() const { return weights_.size(); }
  const Matrix& operator[](std::size_t k) const { return weights_[k]; }
  const std::vector<Matrix>& weights() const { return weights_; }
  const std::optional<Mask>& mask(std::size_t k) const { return masks_[k]; }

 private:
  std::vector<Matrix> weights_;
  std::vector<std::optional<Mask>> masks_;
};

namespace detail {

inline void check_forward_inputs(const NetworkSpec& spec, const WeightSet& w, const Matrix& x_raw) {
  spec.validate();
  require_finite(x_raw, "forward");
  if (static_cast<std::size_t>(x_raw.cols()) != spec.input_dim) {
    throw InvalidArgument("forward: input has " + std::to_string(x_raw.cols()) +
                          " columns, network expects " + std::to_string(spec.input_dim));
  }
  if (w.size() != spec.depth()) throw InvalidArgument("forward: weight count does not match depth");
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (static_cast<std::size_t>(w[k].rows()) != spec.layer_input_dim(k) ||
        static_cast<std::size_t>(w[k].cols()) != spec.layers[k].width) {
      throw InvalidArgument("forward: weight " + std::to_string(k + 1) + " has shape " +
                            shape_string(w[k]));
    }
  }
}

/// Applies layers [0, upto) to an already augmented input.
inline Matrix propagate(const NetworkSpec& spec, const std::vector<Matrix>& w, Matrix a,
                        std::size_t upto) {
  const std::size_t n = spec.depth();
  for (std::size_t k = 0; k < upto; ++k) {
    Matrix z = a * w[k];
    const bool skip = k + 1 == n && spec.linear_output;
    a = skip ? std::move(z) : apply(spec.layers[k].activation, z);
  }
  return a;
}

}  // namespace detail

/// Network output for raw (unaugmented) inputs.
inline Matrix forward(const NetworkSpec& spec, const WeightSet& w, const Matrix& x_raw) {
  detail::check_forward_inputs(spec, w, x_raw);
  return detail::propagate(spec, w.weights(), augment(x_raw), spec.depth());
}

/// Activation after the first `upto_layer` layers; 0 gives the augmented input.
/// This is the design matrix that layer upto_layer + 1 is solved against.
inline Matrix hidden_activation(const NetworkSpec& spec, const WeightSet& w, const Matrix& x_raw,
                                std::size_t upto_layer) {
  detail::check_forward_inputs(spec, w, x_raw);
  if (upto_layer >= spec.depth()) {
    throw InvalidArgument("hidden_activation: layer index " + std::to_string(upto_layer) +
                          " must be below depth " + std::to_string(spec.depth()));
  }
  return detail::propagate(spec, w.weights(), augment(x_raw), upto_layer);
}

}  // namespace pinvnet
