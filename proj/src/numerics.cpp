#include "ore/numerics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>

#include "ore/errors.hpp"

namespace ore {

namespace {
std::atomic<std::uint64_t> g_residual_evaluations{0};
}

namespace detail {
void count_residuals(std::uint64_t n) {
  g_residual_evaluations.fetch_add(n, std::memory_order_relaxed);
}
}  // namespace detail

std::uint64_t residual_evaluations() {
  return g_residual_evaluations.load(std::memory_order_relaxed);
}

void reset_residual_evaluations() { g_residual_evaluations.store(0); }

NormalizedVector unit_normalize(const Vector& v) {
  const double n = v.norm();
  if (!(n > kNormFloor)) return {v, true};
  return {v / n, false};
}

Matrix random_projection(int d_in, int d_out, std::uint64_t seed) {
  if (d_out <= 0 || d_in <= 0 || d_out > d_in) {
    throw DimensionError("random_projection: need 0 < d_out <= d_in, got d_in=" +
                         std::to_string(d_in) + " d_out=" + std::to_string(d_out));
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d_out));
  Matrix P(d_out, d_in);
  // Fill row by row so the stream order does not depend on storage order.
  for (int i = 0; i < d_out; ++i)
    for (int j = 0; j < d_in; ++j) P(i, j) = normal(rng) * scale;
  return P;
}

HatOperator::HatOperator(Matrix basis, double tol) : basis_(std::move(basis)) {
  const auto d = basis_.rows();
  const auto m = basis_.cols();
  if (d < 1 || m < 1) throw DimensionError("hat_operator: empty basis");
  if (!basis_.allFinite()) throw NumericError("hat_operator: non-finite basis entry");

  Vector sigma;
  Matrix U, V;
  auto decompose = [&](auto&& svd) {
    svd.compute(basis_, Eigen::ComputeThinU | Eigen::ComputeThinV);
    sigma = svd.singularValues();
    U = svd.matrixU();
    V = svd.matrixV();
  };
  // Jacobi is more accurate on the small per-class galleries.
  if (std::min(d, m) <= 64)
    decompose(Eigen::JacobiSVD<Matrix>());
  else
    decompose(Eigen::BDCSVD<Matrix>());

  const double smax = sigma.size() > 0 ? sigma(0) : 0.0;
  tolerance_ = tol >= 0.0 ? tol
                          : static_cast<double>(std::max(d, m)) *
                                std::numeric_limits<double>::epsilon() * smax;
  Eigen::Index r = 0;
  while (r < sigma.size() && sigma(r) > tolerance_) ++r;

  singular_values_ = sigma.head(r);
  range_ = U.leftCols(r);
  coef_map_ = V.leftCols(r) * singular_values_.cwiseInverse().asDiagonal();
}

Matrix HatOperator::pinv() const { return coef_map_ * range_.transpose(); }

Vector HatOperator::solve(const Vector& y) const {
  if (y.size() != dim()) throw DimensionError("hat_operator: dimension mismatch");
  if (rank() == 0) return Vector::Zero(columns());
  return coef_map_ * (range_.transpose() * y);
}

double HatOperator::residual(const Vector& y) const {
  if (y.size() != dim()) throw DimensionError("hat_operator: dimension mismatch");
  detail::count_residuals(1);
  if (rank() == 0) return y.norm();
  return (y - range_ * (range_.transpose() * y)).norm();
}

Vector HatOperator::residuals(const Matrix& Y) const {
  if (Y.rows() != dim()) throw DimensionError("hat_operator: dimension mismatch");
  detail::count_residuals(static_cast<std::uint64_t>(Y.cols()));
  if (rank() == 0) return Y.colwise().norm().transpose();
  return (Y - range_ * (range_.transpose() * Y)).colwise().norm().transpose();
}

LsResult ls_residual(const HatOperator& op, const Vector& y) {
  if (y.size() != op.dim()) throw DimensionError("ls_residual: dimension mismatch");
  LsResult out;
  out.beta = op.solve(y);
  detail::count_residuals(1);
  out.residual = (y - op.basis() * out.beta).norm();
  return out;
}

}  // namespace ore
