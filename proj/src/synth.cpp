#include "ore/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "ore/errors.hpp"
#include "ore/numerics.hpp"

namespace ore {

void SyntheticSpec::validate() const {
  if (K < 1 || M < 1 || Phi < 1 || Q < 1 || width < 1 || height < 1 || test_per_class < 0)
    throw ConfigError("synthetic spec: counts must be positive");
  if (noise_sigma < 0.0) throw ConfigError("synthetic spec: noise_sigma must be >= 0");
}

namespace {

FaceImage render(const std::vector<Matrix>& surfaces, int q, std::mt19937_64& rng,
                 const SyntheticSpec& spec) {
  std::uniform_real_distribution<double> coef(0.05, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  const Matrix& B = surfaces[q];
  Vector c(B.cols());
  for (Eigen::Index j = 0; j < c.size(); ++j) c(j) = coef(rng);
  Vector v = B * c;
  v /= v.maxCoeff();
  FaceImage img;
  img.width = spec.width;
  img.height = spec.height;
  img.pixels.assign(v.data(), v.data() + v.size());
  if (spec.noise_sigma > 0.0) {
    for (auto& p : img.pixels) p = std::clamp(p + spec.noise_sigma * noise(rng), 0.0, 1.0);
  }
  return img;
}

std::string pad(int v, int width) {
  std::string s = std::to_string(v);
  return std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(s.size()))), '0') + s;
}

}  // namespace

SyntheticData synth_dataset(const SyntheticSpec& spec) {
  spec.validate();
  const int D = spec.width * spec.height;
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  SyntheticData out;
  for (int k = 0; k < spec.K; ++k) {
    const std::string name = "c" + pad(k, 3);
    out.train.class_names.push_back(name);
    out.test.class_names.push_back(name);
  }

  for (int k = 0; k < spec.K; ++k) {
    std::vector<Matrix> surfaces(spec.Q);
    for (auto& B : surfaces) {
      B.resize(D, spec.Phi);
      for (Eigen::Index j = 0; j < B.cols(); ++j)
        for (Eigen::Index i = 0; i < D; ++i) B(i, j) = unit(rng);
    }
    // Training samples cycle through the surfaces so each one is covered.
    for (int m = 0; m < spec.M; ++m) {
      FaceImage img = render(surfaces, m % spec.Q, rng, spec);
      img.label = k;
      img.id = out.train.class_names[k] + "_train_" + pad(m, 3);
      img.sample_index = static_cast<int>(out.train.images.size());
      out.train.images.push_back(std::move(img));
    }
    std::uniform_int_distribution<int> pick_surface(0, spec.Q - 1);
    for (int m = 0; m < spec.test_per_class; ++m) {
      FaceImage img = render(surfaces, pick_surface(rng), rng, spec);
      img.label = k;
      img.id = out.test.class_names[k] + "_test_" + pad(m, 3);
      img.sample_index = static_cast<int>(out.test.images.size());
      out.test.images.push_back(std::move(img));
    }
  }
  return out;
}

int occlusion_block_count(int width, int height, int s) {
  if (s < 1 || s > std::min(width, height))
    throw std::invalid_argument("occlusion block size must lie in [1, min(width, height)]");
  const double area = static_cast<double>(width) * height;
  const long n = std::lround(0.4 * area / (static_cast<double>(s) * s));
  return static_cast<int>(std::max(n, 3L));
}

FaceImage occlude(const FaceImage& image, int s, std::uint64_t seed) {
  const int blocks = occlusion_block_count(image.width, image.height, s);
  FaceImage out = image;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> px(0, image.width - s);
  std::uniform_int_distribution<int> py(0, image.height - s);
  std::normal_distribution<double> fill(0.5, 0.25);
  for (int b = 0; b < blocks; ++b) {
    const int x0 = px(rng);
    const int y0 = py(rng);
    for (int y = y0; y < y0 + s; ++y)
      for (int x = x0; x < x0 + s; ++x) out.at(x, y) = std::clamp(fill(rng), 0.0, 1.0);
  }
  return out;
}

}  // namespace ore
