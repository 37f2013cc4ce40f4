#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "klsh/core.hpp"
#include "klsh/synth.hpp"

namespace fixtures {

/// n random points in [-1,1]^dim; every other point is TEST.
inline klsh::Dataset random_vectors(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<klsh::DataPoint> pts;
  for (std::size_t i = 0; i < n; ++i) {
    klsh::DenseVector v(dim);
    for (auto& e : v) e = u(rng);
    pts.push_back({"p" + std::to_string(i), v, i % 2 ? klsh::Split::Test : klsh::Split::Train,
                   static_cast<int>(i % 3 == 0)});
  }
  return klsh::Dataset(std::move(pts));
}

inline klsh::SynthConfig gmm(int n_train, int n_test, int clusters, int dim, double shift,
                             std::uint64_t seed) {
  klsh::SynthConfig c;
  c.mode = klsh::SynthMode::VectorGmm;
  c.n_train = n_train;
  c.n_test = n_test;
  c.n_clusters = clusters;
  c.dim = dim;
  c.shift = shift;
  c.seed = seed;
  return c;
}

/// Fresh scratch directory under the system temp path.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("klsh_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixtures
