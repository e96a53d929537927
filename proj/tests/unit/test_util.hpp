#pragma once

#include <random>
#include <vector>

#include <Eigen/Dense>

#include "ore/image.hpp"
#include "ore/numerics.hpp"

namespace testutil {

inline ore::Matrix random_matrix(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  ore::Matrix m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = n(rng);
  return m;
}

inline ore::Vector random_vector(int n, std::uint64_t seed) { return random_matrix(n, 1, seed).col(0); }

/// Residual of y against span(X) from an independent complete orthogonal
/// decomposition.
inline double oracle_residual(const ore::Matrix& X, const ore::Vector& y) {
  const Eigen::CompleteOrthogonalDecomposition<ore::Matrix> cod(X);
  return (y - X * cod.solve(y)).norm();
}

inline ore::FaceImage make_image(int w, int h, std::vector<double> pixels, int label = 0,
                                 int index = 0) {
  ore::FaceImage img;
  img.width = w;
  img.height = h;
  img.pixels = std::move(pixels);
  img.label = label;
  img.sample_index = index;
  img.id = "img" + std::to_string(index);
  return img;
}

inline ore::FaceImage random_image(int w, int h, int label, int index, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> px(static_cast<std::size_t>(w) * h);
  for (auto& p : px) p = u(rng);
  return make_image(w, h, std::move(px), label, index);
}

}  // namespace testutil
