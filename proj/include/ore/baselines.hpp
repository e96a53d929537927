#pragma once

#include <cstdint>
#include <vector>

#include "ore/image.hpp"
#include "ore/numerics.hpp"

namespace ore {

/// Normalized feature columns (d x N) with their labels.
struct FeatureSet {
  Matrix X;
  std::vector<int> labels;
  int num_classes = 0;
};

/// Whole-image features: the vectorized image, reduced to d dimensions by a
/// seeded Gaussian random projection when d is below the pixel count, then
/// unit-normalized.
class ImageFeatures {
 public:
  ImageFeatures(int width, int height, int d, std::uint64_t seed);
  Vector operator()(const FaceImage& img) const;
  FeatureSet operator()(const std::vector<FaceImage>& imgs) const;
  int dim() const { return d_; }

 private:
  int width_, height_, d_;
  Matrix projection_;  // empty when the raw pixels are kept
};

/// Label of the nearest training column (Euclidean); ties go to the lowest
/// sample index.
int nn_classify(const FeatureSet& train, const Vector& y);

/// Per-class hat operators over whole-class feature matrices.
std::vector<HatOperator> class_operators(const FeatureSet& train);

/// argmin_k ||y - X_k beta_k||; ties go to the lowest class index.
int lrc_classify(const std::vector<HatOperator>& class_ops, const Vector& y);

struct BlockPartition {
  int rows = 4;
  int cols = 2;
  int down_height = 12;
  int down_width = 9;
};

/// How DEF turns per-block LRC results into one label.
enum class DefRule {
  /// Label of the block whose best class residual is smallest.
  kMinResidual,
  /// Plurality vote of the per-block LRC labels (ties to the lowest class).
  kMajorityVote,
};

/// Area-average resampling of the window [x0, x0+w) x [y0, y0+h) to
/// out_w x out_h, returned row-major.
Vector resample_area(const FaceImage& img, int x0, int y0, int w, int h, int out_w, int out_h);

/// Block-wise LRC with fusion. Block boundaries are floor(b * size / count),
/// so blocks tile the image exactly and differ in size by at most one pixel.
class DefClassifier {
 public:
  DefClassifier(const BlockPartition& partition, const std::vector<FaceImage>& train,
                DefRule rule = DefRule::kMinResidual);

  int classify(const FaceImage& probe) const;
  /// K x B residual table for a probe.
  Matrix block_residuals(const FaceImage& probe) const;

  static int fuse(const Matrix& residuals, DefRule rule);

 private:
  Vector block_vector(const FaceImage& img, int b) const;

  BlockPartition partition_;
  DefRule rule_;
  int width_ = 0, height_ = 0;
  std::vector<std::vector<HatOperator>> ops_;  // [block][class]
};

int def_classify(const BlockPartition& partition, const std::vector<FaceImage>& train,
                 const FaceImage& y, DefRule rule = DefRule::kMinResidual);

}  // namespace ore
