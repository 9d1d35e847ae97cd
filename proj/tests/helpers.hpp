#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "poac/core.hpp"
#include "poac/rng.hpp"

namespace poac::test {

/// Four points forming two tight pairs: (0,0),(0,1) and (10,0),(10,1).
inline Dataset four_points() {
  Matrix x(4, 2);
  x << 0, 0, 0, 1, 10, 0, 10, 1;
  return make_dataset("four", x, std::vector<int>{0, 0, 1, 1});
}

/// Gaussian blobs at well separated centers, rows grouped by cluster.
inline Dataset blobs(int per_cluster, int clusters, int dims, double spread, std::uint64_t seed) {
  RngStream rng(seed, 17);
  Matrix x(per_cluster * clusters, dims);
  std::vector<int> labels;
  for (int c = 0; c < clusters; ++c) {
    for (int i = 0; i < per_cluster; ++i) {
      const int r = c * per_cluster + i;
      for (int j = 0; j < dims; ++j) x(r, j) = (j == c % dims ? 20.0 * (1 + c / dims) : 0.0) + spread * rng.normal();
      labels.push_back(c);
    }
  }
  return make_dataset("blobs", x, labels);
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("poac_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace poac::test
