#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ore {

/// Grayscale image with pixels in [0,1], stored row-major.
struct FaceImage {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;
  int label = 0;  // zero-based class index
  int sample_index = 0;
  std::string id;

  double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  double& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

/// A labelled image collection plus the class names the zero-based labels
/// refer to.
struct Dataset {
  std::vector<FaceImage> images;
  std::vector<std::string> class_names;

  int num_classes() const { return static_cast<int>(class_names.size()); }
};

/// splitmix64 finalizer; derives independent child seeds from a master seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// Order-sensitive FNV-1a digest over labels, dimensions and pixels.
std::string dataset_digest(const std::vector<FaceImage>& images);

}  // namespace ore
