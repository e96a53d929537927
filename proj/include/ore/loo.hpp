#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ore/numerics.hpp"
#include "ore/patch.hpp"

namespace ore {

/// Leave-one-out margins theta_{t,i} = b_{t,l_i}(x_i) - 1/K where x_i is
/// represented without itself in its class gallery. Row t is the oracle
/// vector c_t.
struct MarginMatrix {
  Matrix theta;                         // T x N
  std::vector<Matrix> loo_posteriors;   // per patch, K x N (may be empty)
  std::vector<int> labels;              // N
  int num_classes = 0;

  int num_patches() const { return static_cast<int>(theta.rows()); }
  int num_samples() const { return static_cast<int>(theta.cols()); }
  bool has_posteriors() const { return !loo_posteriors.empty(); }
};

enum class LooMethod {
  /// Rebuild the class hat operator without the left-out column.
  kDirect,
  /// Closed form r_j^2 = 1 / [(X^T X)^-1]_jj from the cached SVD; falls back to
  /// kDirect for rank-deficient or badly conditioned class galleries.
  kGramInverse,
};

struct LooOptions {
  LooMethod method = LooMethod::kGramInverse;
  bool keep_posteriors = true;
  /// Minimum sigma_min / sigma_max for the closed form.
  double min_inverse_condition = 1e-4;
};

struct LooRow {
  Vector theta;      // N
  Matrix posterior;  // K x N
};

/// Leave-one-out margins and posteriors for all training samples on one patch.
LooRow loo_row(const PatchGallery& gallery, const std::vector<int>& labels,
               const LooOptions& options = {});

MarginMatrix loo_margin_matrix(const std::vector<PatchGallery>& galleries,
                               const std::vector<int>& labels, const LooOptions& options = {});

/// Builds each gallery on the fly and discards it after its row is computed,
/// so memory stays O(one gallery) per worker.
MarginMatrix loo_margin_matrix(const std::vector<FaceImage>& train,
                               const std::vector<PatchSpec>& specs, int d,
                               const LooOptions& options = {},
                               const GalleryOptions& gallery_options = {});

/// Leave-one-out ensemble outputs xi_i = sum_t alpha_t b_t(x_i), K x N.
Matrix loo_ensemble_outputs(const Vector& alpha, const MarginMatrix& mm);

/// Fraction of samples whose leave-one-out ensemble argmax differs from the
/// label (ties resolve to the lowest class index).
double training_error(const Vector& alpha, const MarginMatrix& mm);

std::vector<int> labels_of(const std::vector<FaceImage>& images);

/// Identifies a cached margin matrix.
struct MarginCacheKey {
  std::string dataset_digest;
  std::uint64_t seed = 0;
  int d = 0;
  int T = 0;

  std::string str() const;
};

void save_margin_cache(const std::filesystem::path& path, const MarginCacheKey& key,
                       const MarginMatrix& mm);
/// Returns nullopt when the file is missing or was written for another key.
std::optional<MarginMatrix> load_margin_cache(const std::filesystem::path& path,
                                              const MarginCacheKey& key);

}  // namespace ore
