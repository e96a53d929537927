#include "ore/bpr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ore/errors.hpp"

namespace ore {

Vector patch_residuals(const PatchGallery& gallery, const Vector& y) {
  if (y.size() != gallery.dim()) throw DimensionError("patch_residuals: dimension mismatch");
  Vector r(gallery.num_classes());
  for (int k = 0; k < gallery.num_classes(); ++k) r(k) = gallery.per_class[k].residual(y);
  return r;
}

double patch_variance(const Vector& residuals) {
  return std::max(kPatchVarianceScale * residuals.array().square().minCoeff(), kVarianceFloor);
}

Vector bpr_posterior_fixed(const Vector& residuals, double delta) {
  // log-sum-exp with the largest logit shifted to zero
  const Eigen::ArrayXd logits = -residuals.array().square() / delta;
  const Eigen::ArrayXd e = (logits - logits.maxCoeff()).exp();
  return (e / e.sum()).matrix();
}

Vector bpr_posterior(const Vector& residuals) {
  return bpr_posterior_fixed(residuals, patch_variance(residuals));
}

double generic_residual(const PatchGallery& gallery, const Vector& y) {
  if (gallery.pooled.columns() == 0)
    throw DimensionError("generic_residual: gallery has no pooled basis");
  return gallery.pooled.residual(y);
}

std::vector<double> gfc(const std::vector<double>& generic_residuals) {
  if (generic_residuals.empty()) throw std::invalid_argument("gfc: empty input");
  const double mean = std::accumulate(generic_residuals.begin(), generic_residuals.end(), 0.0) /
                      static_cast<double>(generic_residuals.size());
  const double delta = std::max(kGenericVarianceScale * mean * mean, kVarianceFloor);
  std::vector<double> out;
  out.reserve(generic_residuals.size());
  for (double r : generic_residuals) out.push_back(std::exp(-r * r / delta));
  return out;
}

Vector robust_bpr(const BprOutput& b, double gfc_t) { return gfc_t * b.posterior; }

int argmax_lowest(const Vector& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i)
    if (v(i) > v(best)) best = i;
  return best;
}

int argmin_lowest(const Vector& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i)
    if (v(i) < v(best)) best = i;
  return best;
}

}  // namespace ore
