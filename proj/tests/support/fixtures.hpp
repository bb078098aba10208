#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include <unistd.h>

#include "pinvnet/matrix.hpp"
#include "pinvnet/random.hpp"

namespace fixtures {

/// Uniform [-1, 1] matrix from a test-only stream.
inline pinvnet::Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  pinvnet::Rng rng(seed, "test.matrix");
  return rng.uniform_matrix(rows, cols, -1.0, 1.0);
}

/// rows x cols matrix of rank `rank` (generically) built as a product.
inline pinvnet::Matrix low_rank_matrix(Eigen::Index rows, Eigen::Index cols, Eigen::Index rank, std::uint64_t seed) {
  pinvnet::Rng rng(seed, "test.lowrank");
  return rng.uniform_matrix(rows, rank, -1.0, 1.0) * rng.uniform_matrix(rank, cols, -1.0, 1.0);
}

/// Fresh directory under the system temp dir, private to this process.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("pinvnet_test_" + std::to_string(::getpid()) + "_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline std::filesystem::path write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  os << text;
  return path;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace fixtures
