#include "ore/loo.hpp"

#include <cstring>
#include <fstream>

#include "ore/bpr.hpp"
#include "ore/errors.hpp"
#include "ore/parallel.hpp"

namespace ore {

namespace {

Matrix without_column(const Matrix& X, Eigen::Index j) {
  Matrix out(X.rows(), X.cols() - 1);
  out.leftCols(j) = X.leftCols(j);
  out.rightCols(X.cols() - 1 - j) = X.rightCols(X.cols() - 1 - j);
  return out;
}

bool well_conditioned(const HatOperator& op, double min_inverse_condition) {
  if (op.rank() < op.columns()) return false;
  const Vector& s = op.singular_values();
  return s(s.size() - 1) >= min_inverse_condition * s(0);
}

}  // namespace

std::vector<int> labels_of(const std::vector<FaceImage>& images) {
  std::vector<int> out;
  out.reserve(images.size());
  for (const auto& img : images) out.push_back(img.label);
  return out;
}

LooRow loo_row(const PatchGallery& gallery, const std::vector<int>& labels,
               const LooOptions& options) {
  const int K = gallery.num_classes();
  const auto N = static_cast<Eigen::Index>(labels.size());
  if (gallery.samples.cols() != N) throw DimensionError("loo_row: label count mismatch");
  for (const auto& m : gallery.members) {
    if (m.size() < 2)
      throw ProtocolError("leave-one-out margins need at least 2 samples per class");
  }

  // Residuals against the full class galleries; own-class entries are
  // replaced by leave-one-out values below.
  Matrix residuals(K, N);
  for (int k = 0; k < K; ++k) residuals.row(k) = gallery.per_class[k].residuals(gallery.samples).transpose();

  for (int k = 0; k < K; ++k) {
    const HatOperator& op = gallery.per_class[k];
    const auto& members = gallery.members[k];
    const bool closed_form = options.method == LooMethod::kGramInverse &&
                             well_conditioned(op, options.min_inverse_condition);
    for (std::size_t j = 0; j < members.size(); ++j) {
      const int i = members[j];
      double r;
      if (closed_form) {
        detail::count_residuals(1);
        r = 1.0 / op.coef_map().row(static_cast<Eigen::Index>(j)).norm();
      } else {
        HatOperator reduced(without_column(op.basis(), static_cast<Eigen::Index>(j)));
        r = reduced.residual(gallery.samples.col(i));
      }
      residuals(k, i) = r;
    }
  }

  LooRow out;
  out.theta.resize(N);
  out.posterior.resize(K, N);
  const double chance = 1.0 / K;
  for (Eigen::Index i = 0; i < N; ++i) {
    out.posterior.col(i) = bpr_posterior(residuals.col(i));
    out.theta(i) = out.posterior(labels[i], i) - chance;
  }
  return out;
}

namespace {

MarginMatrix assemble(std::vector<LooRow>& rows, const std::vector<int>& labels, int K,
                      bool keep_posteriors) {
  MarginMatrix mm;
  mm.labels = labels;
  mm.num_classes = K;
  mm.theta.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(labels.size()));
  for (std::size_t t = 0; t < rows.size(); ++t) mm.theta.row(t) = rows[t].theta.transpose();
  if (keep_posteriors) {
    mm.loo_posteriors.reserve(rows.size());
    for (auto& r : rows) mm.loo_posteriors.push_back(std::move(r.posterior));
  }
  return mm;
}

}  // namespace

MarginMatrix loo_margin_matrix(const std::vector<PatchGallery>& galleries,
                               const std::vector<int>& labels, const LooOptions& options) {
  if (galleries.empty()) throw std::invalid_argument("loo_margin_matrix: no patches");
  std::vector<LooRow> rows(galleries.size());
  parallel_for(galleries.size(), [&](std::size_t t) { rows[t] = loo_row(galleries[t], labels, options); });
  return assemble(rows, labels, galleries.front().num_classes(), options.keep_posteriors);
}

MarginMatrix loo_margin_matrix(const std::vector<FaceImage>& train,
                               const std::vector<PatchSpec>& specs, int d,
                               const LooOptions& options, const GalleryOptions& gallery_options) {
  if (specs.empty()) throw std::invalid_argument("loo_margin_matrix: no patches");
  const int K = infer_num_classes(train);
  class_counts(train, K, gallery_options.require_balanced);
  GalleryOptions go = gallery_options;
  go.build_pooled = false;
  const auto labels = labels_of(train);
  std::vector<LooRow> rows(specs.size());
  parallel_for(specs.size(), [&](std::size_t t) {
    const PatchGallery g = build_gallery(train, specs[t], d, K, go);
    rows[t] = loo_row(g, labels, options);
  });
  return assemble(rows, labels, K, options.keep_posteriors);
}

Matrix loo_ensemble_outputs(const Vector& alpha, const MarginMatrix& mm) {
  if (!mm.has_posteriors()) throw std::invalid_argument("margin matrix has no posteriors");
  if (alpha.size() != mm.num_patches()) throw DimensionError("alpha length must equal T");
  Matrix xi = Matrix::Zero(mm.num_classes, mm.num_samples());
  for (int t = 0; t < mm.num_patches(); ++t)
    if (alpha(t) != 0.0) xi += alpha(t) * mm.loo_posteriors[t];
  return xi;
}

double training_error(const Vector& alpha, const MarginMatrix& mm) {
  const Matrix xi = loo_ensemble_outputs(alpha, mm);
  int wrong = 0;
  for (int i = 0; i < mm.num_samples(); ++i)
    if (argmax_lowest(xi.col(i)) != mm.labels[i]) ++wrong;
  return static_cast<double>(wrong) / mm.num_samples();
}

// ---------------------------------------------------------------------------
// binary cache

std::string MarginCacheKey::str() const {
  return dataset_digest + ":" + std::to_string(seed) + ":" + std::to_string(d) + ":" +
         std::to_string(T);
}

namespace {

constexpr char kMagic[8] = {'O', 'R', 'E', 'T', 'H', 'E', 'T', 'A'};
constexpr std::uint32_t kCacheVersion = 1;

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw FormatError("truncated margin cache");
  return v;
}
void put_matrix(std::ostream& os, const Matrix& m) {
  put<std::int64_t>(os, m.rows());
  put<std::int64_t>(os, m.cols());
  os.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
}
Matrix get_matrix(std::istream& is) {
  const auto r = get<std::int64_t>(is);
  const auto c = get<std::int64_t>(is);
  if (r < 0 || c < 0) throw FormatError("corrupt margin cache");
  Matrix m(r, c);
  is.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
  if (!is) throw FormatError("truncated margin cache");
  return m;
}

}  // namespace

void save_margin_cache(const std::filesystem::path& path, const MarginCacheKey& key,
                       const MarginMatrix& mm) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot write margin cache " + path.string());
  os.write(kMagic, sizeof kMagic);
  put(os, kCacheVersion);
  const std::string k = key.str();
  put<std::uint32_t>(os, static_cast<std::uint32_t>(k.size()));
  os.write(k.data(), static_cast<std::streamsize>(k.size()));
  put<std::int32_t>(os, mm.num_classes);
  put<std::int64_t>(os, static_cast<std::int64_t>(mm.labels.size()));
  for (int l : mm.labels) put<std::int32_t>(os, l);
  put_matrix(os, mm.theta);
  put<std::int64_t>(os, static_cast<std::int64_t>(mm.loo_posteriors.size()));
  for (const auto& p : mm.loo_posteriors) put_matrix(os, p);
}

std::optional<MarginMatrix> load_margin_cache(const std::filesystem::path& path,
                                              const MarginCacheKey& key) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return std::nullopt;
  char magic[sizeof kMagic];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw FormatError("not a margin cache: " + path.string());
  if (get<std::uint32_t>(is) != kCacheVersion) throw FormatError("unsupported margin cache version");
  const auto klen = get<std::uint32_t>(is);
  std::string k(klen, '\0');
  is.read(k.data(), klen);
  if (k != key.str()) return std::nullopt;
  MarginMatrix mm;
  mm.num_classes = get<std::int32_t>(is);
  const auto n = get<std::int64_t>(is);
  mm.labels.resize(static_cast<std::size_t>(n));
  for (auto& l : mm.labels) l = get<std::int32_t>(is);
  mm.theta = get_matrix(is);
  const auto np = get<std::int64_t>(is);
  for (std::int64_t t = 0; t < np; ++t) mm.loo_posteriors.push_back(get_matrix(is));
  return mm;
}

}  // namespace ore
