#include "ore/baselines.hpp"

#include <algorithm>

#include "ore/bpr.hpp"
#include "ore/errors.hpp"
#include "ore/patch.hpp"

namespace ore {

ImageFeatures::ImageFeatures(int width, int height, int d, std::uint64_t seed)
    : width_(width), height_(height), d_(d) {
  const int pixels = width * height;
  if (d <= 0 || d > pixels) throw DimensionError("image features: need 0 < d <= pixel count");
  if (d < pixels) projection_ = random_projection(pixels, d, seed);
}

Vector ImageFeatures::operator()(const FaceImage& img) const {
  if (img.width != width_ || img.height != height_)
    throw DimensionError("image features: image size mismatch");
  const Eigen::Map<const Vector> raw(img.pixels.data(), static_cast<Eigen::Index>(img.pixels.size()));
  if (projection_.size() == 0) return unit_normalize(raw).v;
  return unit_normalize(projection_ * raw).v;
}

FeatureSet ImageFeatures::operator()(const std::vector<FaceImage>& imgs) const {
  FeatureSet fs;
  fs.X.resize(d_, static_cast<Eigen::Index>(imgs.size()));
  for (std::size_t i = 0; i < imgs.size(); ++i) {
    fs.X.col(i) = (*this)(imgs[i]);
    fs.labels.push_back(imgs[i].label);
  }
  fs.num_classes = infer_num_classes(imgs);
  return fs;
}

int nn_classify(const FeatureSet& train, const Vector& y) {
  if (train.X.cols() == 0) throw std::invalid_argument("nn_classify: empty training set");
  if (y.size() != train.X.rows()) throw DimensionError("nn_classify: dimension mismatch");
  Eigen::Index best = 0;
  double best_d = (train.X.col(0) - y).squaredNorm();
  for (Eigen::Index i = 1; i < train.X.cols(); ++i) {
    const double dist = (train.X.col(i) - y).squaredNorm();
    if (dist < best_d) {
      best_d = dist;
      best = i;
    }
  }
  return train.labels[best];
}

std::vector<HatOperator> class_operators(const FeatureSet& train) {
  std::vector<HatOperator> ops;
  for (int k = 0; k < train.num_classes; ++k) {
    std::vector<Eigen::Index> cols;
    for (std::size_t i = 0; i < train.labels.size(); ++i)
      if (train.labels[i] == k) cols.push_back(static_cast<Eigen::Index>(i));
    if (cols.empty()) throw ProtocolError("class " + std::to_string(k) + " has no samples");
    Matrix X(train.X.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) X.col(j) = train.X.col(cols[j]);
    ops.emplace_back(std::move(X));
  }
  return ops;
}

int lrc_classify(const std::vector<HatOperator>& class_ops, const Vector& y) {
  if (class_ops.empty()) throw std::invalid_argument("lrc_classify: no classes");
  Vector r(static_cast<Eigen::Index>(class_ops.size()));
  for (std::size_t k = 0; k < class_ops.size(); ++k) r(k) = class_ops[k].residual(y);
  return argmin_lowest(r);
}

namespace {

/// out x in weights of the overlap between uniform output cells and unit input
/// cells along one axis, each row normalized to sum 1.
Matrix overlap_weights(int in, int out) {
  Matrix W = Matrix::Zero(out, in);
  const double scale = static_cast<double>(in) / out;
  for (int o = 0; o < out; ++o) {
    const double a = o * scale;
    const double b = (o + 1) * scale;
    for (int i = static_cast<int>(a); i < in && i < b; ++i) {
      const double overlap = std::min(b, i + 1.0) - std::max(a, static_cast<double>(i));
      if (overlap > 0.0) W(o, i) = overlap;
    }
    W.row(o) /= W.row(o).sum();
  }
  return W;
}

}  // namespace

Vector resample_area(const FaceImage& img, int x0, int y0, int w, int h, int out_w, int out_h) {
  if (w <= 0 || h <= 0 || out_w <= 0 || out_h <= 0 || x0 < 0 || y0 < 0 ||
      x0 + w > img.width || y0 + h > img.height)
    throw DimensionError("resample_area: invalid window");
  Matrix block(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) block(y, x) = img.at(x0 + x, y0 + y);
  const Matrix small = overlap_weights(h, out_h) * block * overlap_weights(w, out_w).transpose();
  Vector out(out_w * out_h);
  for (int y = 0; y < out_h; ++y)
    for (int x = 0; x < out_w; ++x) out(y * out_w + x) = small(y, x);
  return out;
}

DefClassifier::DefClassifier(const BlockPartition& partition, const std::vector<FaceImage>& train,
                             DefRule rule)
    : partition_(partition), rule_(rule) {
  if (partition.rows < 1 || partition.cols < 1 || partition.down_height < 1 || partition.down_width < 1)
    throw ConfigError("DEF: invalid block partition");
  if (train.empty()) throw std::invalid_argument("DEF: empty training set");
  width_ = train.front().width;
  height_ = train.front().height;
  if (height_ < partition.rows || width_ < partition.cols)
    throw ConfigError("DEF: more blocks than pixels");
  const int K = infer_num_classes(train);
  const int B = partition.rows * partition.cols;
  ops_.resize(B);
  for (int b = 0; b < B; ++b) {
    FeatureSet fs;
    fs.num_classes = K;
    fs.X.resize(partition.down_height * partition.down_width, static_cast<Eigen::Index>(train.size()));
    for (std::size_t i = 0; i < train.size(); ++i) {
      fs.X.col(i) = block_vector(train[i], b);
      fs.labels.push_back(train[i].label);
    }
    ops_[b] = class_operators(fs);
  }
}

Vector DefClassifier::block_vector(const FaceImage& img, int b) const {
  if (img.width != width_ || img.height != height_) throw DimensionError("DEF: image size mismatch");
  const int br = b / partition_.cols;
  const int bc = b % partition_.cols;
  const int y0 = br * height_ / partition_.rows;
  const int y1 = (br + 1) * height_ / partition_.rows;
  const int x0 = bc * width_ / partition_.cols;
  const int x1 = (bc + 1) * width_ / partition_.cols;
  return unit_normalize(
             resample_area(img, x0, y0, x1 - x0, y1 - y0, partition_.down_width, partition_.down_height))
      .v;
}

Matrix DefClassifier::block_residuals(const FaceImage& probe) const {
  const auto B = static_cast<Eigen::Index>(ops_.size());
  const auto K = static_cast<Eigen::Index>(ops_.front().size());
  Matrix r(K, B);
  for (Eigen::Index b = 0; b < B; ++b) {
    const Vector y = block_vector(probe, static_cast<int>(b));
    for (Eigen::Index k = 0; k < K; ++k) r(k, b) = ops_[b][k].residual(y);
  }
  return r;
}

int DefClassifier::fuse(const Matrix& residuals, DefRule rule) {
  if (rule == DefRule::kMajorityVote) {
    Vector votes = Vector::Zero(residuals.rows());
    for (Eigen::Index b = 0; b < residuals.cols(); ++b) votes(argmin_lowest(residuals.col(b))) += 1.0;
    return argmax_lowest(votes);
  }
  // Scan block-major so ties resolve to the lowest block, then lowest class.
  Eigen::Index best_k = 0;
  double best = residuals(0, 0);
  for (Eigen::Index b = 0; b < residuals.cols(); ++b)
    for (Eigen::Index k = 0; k < residuals.rows(); ++k)
      if (residuals(k, b) < best) {
        best = residuals(k, b);
        best_k = k;
      }
  return static_cast<int>(best_k);
}

int DefClassifier::classify(const FaceImage& probe) const { return fuse(block_residuals(probe), rule_); }

int def_classify(const BlockPartition& partition, const std::vector<FaceImage>& train,
                 const FaceImage& y, DefRule rule) {
  return DefClassifier(partition, train, rule).classify(y);
}

}  // namespace ore
