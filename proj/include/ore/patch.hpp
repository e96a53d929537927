#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ore/image.hpp"
#include "ore/numerics.hpp"

namespace ore {

struct PatchSpec {
  int id = 0;
  int x0 = 0;
  int y0 = 0;
  int w = 0;
  int h = 0;
  std::uint64_t projection_seed = 0;

  int area() const { return w * h; }
  bool operator==(const PatchSpec&) const = default;
};

inline constexpr int kDefaultPatchArea = 225;
inline const std::vector<int> kDefaultPatchWidths{5, 9, 15, 25, 45};

/// Draws `count` rectangles of the given area fully inside an img_w x img_h
/// grid. Widths that do not divide `area` or do not fit are dropped; throws
/// ConfigError when none remain.
std::vector<PatchSpec> sample_patches(int img_w, int img_h, int count, int area,
                                      std::span<const int> widths, std::uint64_t seed);

/// Projection used for a patch of `area` pixels reduced to `d` dimensions.
/// d == area keeps the raw pixels (identity map).
Matrix patch_projection(const PatchSpec& spec, int d);

/// Crops the spec window (row-major), applies the projection and normalizes.
NormalizedVector crop_vectorize(const FaceImage& image, const PatchSpec& spec,
                                const Matrix& projection);

/// Representation bases for one patch location.
struct PatchGallery {
  PatchSpec spec;
  Matrix projection;                  // d x area
  std::vector<HatOperator> per_class; // X_k^t, one per class
  HatOperator pooled;                 // X^t over all training samples
  /// For each class, the training-set indices of its columns in order.
  std::vector<std::vector<int>> members;
  /// Normalized patch vectors of every training sample (d x N), column i is
  /// sample i.
  Matrix samples;

  int dim() const { return static_cast<int>(projection.rows()); }
  int num_classes() const { return static_cast<int>(per_class.size()); }
};

struct GalleryOptions {
  bool require_balanced = true;
  bool build_pooled = true;
};

/// Per-class counts; throws ProtocolError if some class in [0, K) is empty or,
/// when `require_balanced`, the counts differ.
std::vector<int> class_counts(const std::vector<FaceImage>& train, int num_classes,
                              bool require_balanced);

int infer_num_classes(const std::vector<FaceImage>& train);

PatchGallery build_gallery(const std::vector<FaceImage>& train, const PatchSpec& spec,
                           int d, int num_classes, const GalleryOptions& options = {});

std::vector<PatchGallery> build_galleries(const std::vector<FaceImage>& train,
                                          const std::vector<PatchSpec>& specs, int d,
                                          const GalleryOptions& options = {});

}  // namespace ore
