#pragma once

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "pinvnet/analysis.hpp"
#include "pinvnet/learner.hpp"
#include "pinvnet/network.hpp"

namespace pinvnet {

/// Shortest text with 17 significant digits, so doubles survive a round trip.
inline std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline void write_matrix_csv(std::ostream& os, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) os << ',';
      os << format_number(m(i, j));
    }
    os << '\n';
  }
}

/// Headerless numeric CSV, as written by write_matrix_csv.
inline Matrix read_matrix_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      const std::string cell = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      double v = 0.0;
      auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || res.ec != std::errc{} || res.ptr != cell.data() + cell.size()) {
        throw ParseError("not a number: '" + cell + "'", lineno);
      }
      row.push_back(v);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError("expected " + std::to_string(rows.front().size()) + " values, found " +
                           std::to_string(row.size()),
                       lineno);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return Matrix(0, 0);
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

inline Matrix read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFound(path);
  return read_matrix_csv(in);
}

/// JSON summary of one training run. `include_time` false leaves out the
/// wall-clock field so repeated runs serialize identically.
inline nlohmann::ordered_json report_to_json(const NetworkSpec& spec, const TrainConfig& cfg,
                                             const TrainReport& report, bool include_time = true) {
  nlohmann::ordered_json j;
  j["structure"] = format_structure(spec);
  j["input_dim"] = spec.input_dim;
  j["activation"] = spec.layers.back().activation.name();
  j["linear_output"] = spec.linear_output;
  j["init"] = cfg.init.describe();
  if (const auto* rnd = std::get_if<RandomInit>(&cfg.init.variant)) {
    j["seed"] = rnd->seed;
    j["c"] = rnd->scale;
  } else {
    j["seed"] = nullptr;
    j["c"] = nullptr;
  }
  std::vector<std::size_t> order;
  for (auto k : report.solve_order) order.push_back(k + 1);
  j["solve_order"] = order;
  j["solve_residuals"] = report.solve_residuals;
  j["clamped_counts"] = report.clamped_counts;
  j["clamp_margin"] = cfg.clamp ? nlohmann::ordered_json(cfg.clamp_margin) : nlohmann::ordered_json(nullptr);
  j["train_sse"] = report.train_sse;
  if (include_time) j["wall_time"] = report.wall_time;
  return j;
}

/// depth,mean,std,probe_dim rows, one per depth.
inline void write_variance_csv(std::ostream& os, const VarianceReport& r) {
  os << "depth,mean,std,probe_dim\n";
  for (std::size_t k = 0; k < r.per_depth_mean.size(); ++k) {
    os << (k + 1) << ',' << format_number(r.per_depth_mean[k]) << ',' << format_number(r.per_depth_std[k])
       << ',' << r.probe_dim[k] << '\n';
  }
}

}  // namespace pinvnet
