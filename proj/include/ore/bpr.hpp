#pragma once

#include <optional>
#include <vector>

#include "ore/numerics.hpp"
#include "ore/patch.hpp"

namespace ore {

/// Bayesian patch representation of one probe patch.
struct BprOutput {
  int t = 0;
  Vector residuals;  // r_{t,k}, one per class
  Vector posterior;  // b_t on the K-simplex
  std::optional<double> generic_residual;
  std::optional<double> gfc;
};

inline constexpr double kVarianceFloor = 1e-12;
inline constexpr double kPatchVarianceScale = 0.1;
inline constexpr double kGenericVarianceScale = 0.05;

/// Per-class residuals ||y_t - X_k^t beta*_{t,k}||_2.
Vector patch_residuals(const PatchGallery& gallery, const Vector& y);

/// delta_t = max(0.1 * min_k r_k^2, 1e-12).
double patch_variance(const Vector& residuals);

/// Softmax of -r_k^2 / delta_t with the per-patch variance above.
Vector bpr_posterior(const Vector& residuals);

/// Softmax of -r_k^2 / delta for a caller-chosen delta.
Vector bpr_posterior_fixed(const Vector& residuals, double delta);

/// Residual of y against the span of all training patches at this location.
double generic_residual(const PatchGallery& gallery, const Vector& y);

/// GFC_t = exp(-r_t^2 / delta) with delta = max(0.05 * mean(r)^2, 1e-12)
/// taken over the given patches.
std::vector<double> gfc(const std::vector<double>& generic_residuals);

/// b_t scaled by its confidence; not renormalized.
Vector robust_bpr(const BprOutput& b, double gfc_t);

/// Lowest index attaining the maximum / minimum.
int argmax_lowest(const Vector& v);
int argmin_lowest(const Vector& v);

}  // namespace ore
