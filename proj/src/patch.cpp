#include "ore/patch.hpp"

#include <algorithm>
#include <random>
#include <string>

#include "ore/errors.hpp"
#include "ore/parallel.hpp"

namespace ore {

std::vector<PatchSpec> sample_patches(int img_w, int img_h, int count, int area,
                                      std::span<const int> widths, std::uint64_t seed) {
  if (count < 0) throw ConfigError("sample_patches: negative patch count");
  if (area <= 0) throw ConfigError("sample_patches: patch area must be positive");
  std::vector<int> valid;
  for (int w : widths) {
    if (w <= 0 || area % w != 0) continue;
    const int h = area / w;
    if (w <= img_w && h <= img_h) valid.push_back(w);
  }
  if (valid.empty()) {
    throw ConfigError("sample_patches: no patch width fits a " + std::to_string(img_w) +
                      "x" + std::to_string(img_h) + " image with area " +
                      std::to_string(area));
  }

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, valid.size() - 1);
  std::vector<PatchSpec> specs;
  specs.reserve(count);
  for (int t = 0; t < count; ++t) {
    PatchSpec s;
    s.id = t;
    s.w = valid[pick(rng)];
    s.h = area / s.w;
    s.x0 = std::uniform_int_distribution<int>(0, img_w - s.w)(rng);
    s.y0 = std::uniform_int_distribution<int>(0, img_h - s.h)(rng);
    s.projection_seed = mix_seed(seed, static_cast<std::uint64_t>(t));
    specs.push_back(s);
  }
  return specs;
}

Matrix patch_projection(const PatchSpec& spec, int d) {
  if (d == spec.area()) return Matrix::Identity(d, d);
  return random_projection(spec.area(), d, spec.projection_seed);
}

NormalizedVector crop_vectorize(const FaceImage& image, const PatchSpec& spec,
                                const Matrix& projection) {
  if (spec.x0 < 0 || spec.y0 < 0 || spec.w <= 0 || spec.h <= 0 ||
      spec.x0 + spec.w > image.width || spec.y0 + spec.h > image.height) {
    throw DimensionError("crop_vectorize: patch " + std::to_string(spec.id) +
                         " lies outside the image");
  }
  if (projection.cols() != spec.area())
    throw DimensionError("crop_vectorize: projection does not match patch area");
  Vector raw(spec.area());
  int k = 0;
  for (int y = spec.y0; y < spec.y0 + spec.h; ++y)
    for (int x = spec.x0; x < spec.x0 + spec.w; ++x) raw(k++) = image.at(x, y);
  return unit_normalize(projection * raw);
}

int infer_num_classes(const std::vector<FaceImage>& train) {
  int k = 0;
  for (const auto& img : train) {
    if (img.label < 0) throw ProtocolError("negative class label");
    k = std::max(k, img.label + 1);
  }
  return k;
}

std::vector<int> class_counts(const std::vector<FaceImage>& train, int num_classes,
                              bool require_balanced) {
  std::vector<int> counts(num_classes, 0);
  for (const auto& img : train) {
    if (img.label < 0 || img.label >= num_classes)
      throw ProtocolError("class label out of range");
    ++counts[img.label];
  }
  for (int k = 0; k < num_classes; ++k)
    if (counts[k] == 0) throw ProtocolError("class " + std::to_string(k) + " has no samples");
  if (require_balanced &&
      std::adjacent_find(counts.begin(), counts.end(), std::not_equal_to<>()) != counts.end()) {
    throw ProtocolError("classes must have the same number of training samples");
  }
  return counts;
}

PatchGallery build_gallery(const std::vector<FaceImage>& train, const PatchSpec& spec,
                           int d, int num_classes, const GalleryOptions& options) {
  if (d <= 0 || d > spec.area())
    throw DimensionError("build_gallery: need 0 < d <= patch area");
  class_counts(train, num_classes, options.require_balanced);

  PatchGallery g;
  g.spec = spec;
  g.projection = patch_projection(spec, d);
  g.samples.resize(d, static_cast<Eigen::Index>(train.size()));
  g.members.assign(num_classes, {});
  for (std::size_t i = 0; i < train.size(); ++i) {
    g.samples.col(i) = crop_vectorize(train[i], spec, g.projection).v;
    g.members[train[i].label].push_back(static_cast<int>(i));
  }
  g.per_class.reserve(num_classes);
  for (int k = 0; k < num_classes; ++k) {
    Matrix X(d, static_cast<Eigen::Index>(g.members[k].size()));
    for (std::size_t j = 0; j < g.members[k].size(); ++j) X.col(j) = g.samples.col(g.members[k][j]);
    g.per_class.emplace_back(std::move(X));
  }
  if (options.build_pooled) g.pooled = HatOperator(g.samples);
  return g;
}

std::vector<PatchGallery> build_galleries(const std::vector<FaceImage>& train,
                                          const std::vector<PatchSpec>& specs, int d,
                                          const GalleryOptions& options) {
  const int k = infer_num_classes(train);
  class_counts(train, k, options.require_balanced);
  std::vector<PatchGallery> out(specs.size());
  parallel_for(specs.size(), [&](std::size_t t) {
    out[t] = build_gallery(train, specs[t], d, k, options);
  });
  return out;
}

}  // namespace ore
