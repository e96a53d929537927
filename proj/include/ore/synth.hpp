#pragma once

#include <cstdint>

#include "ore/image.hpp"

namespace ore {

/// Union-of-subspaces image generator. Each class owns Q "surfaces"; each
/// surface is spanned by Phi nonnegative basis images. A sample is a random
/// nonnegative combination of one surface's basis, scaled into [0,1], plus
/// optional clipped Gaussian noise. Any crop of a class image therefore lies in
/// a subspace of dimension at most Phi * Q.
struct SyntheticSpec {
  int K = 4;
  int M = 10;            // training samples per class
  int Phi = 3;
  int Q = 1;
  int width = 32;
  int height = 32;
  int test_per_class = 5;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticData {
  Dataset train;
  Dataset test;
};

SyntheticData synth_dataset(const SyntheticSpec& spec);

/// max(round(0.4 * width * height / s^2), 3), rounding half away from zero.
int occlusion_block_count(int width, int height, int s);

/// Copies `image` with occlusion_block_count() square s x s blocks at
/// independent uniform positions, filled with N(0.5, 0.25^2) noise clipped to
/// [0,1]. Blocks may overlap.
FaceImage occlude(const FaceImage& image, int s, std::uint64_t seed);

}  // namespace ore
