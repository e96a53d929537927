#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace ore {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct NormalizedVector {
  Vector v;
  bool degenerate = false;
};

inline constexpr double kNormFloor = 1e-12;

/// Scales v to unit Euclidean norm. Vectors with norm <= kNormFloor are
/// returned unchanged and flagged as degenerate.
NormalizedVector unit_normalize(const Vector& v);

/// d_out x d_in matrix with i.i.d. N(0,1)/sqrt(d_out) entries drawn from a
/// generator seeded with `seed`.
Matrix random_projection(int d_in, int d_out, std::uint64_t seed);

/// Least-squares solver for a fixed basis X (d x M). The minimum-norm
/// solution beta = E y comes from a truncated SVD X = U S V^T, with
/// singular values below `tolerance` treated as zero.
class HatOperator {
 public:
  HatOperator() = default;

  /// tol < 0 selects max(d, M) * eps * sigma_max.
  explicit HatOperator(Matrix basis, double tol = -1.0);

  int dim() const { return static_cast<int>(basis_.rows()); }
  int columns() const { return static_cast<int>(basis_.cols()); }
  int rank() const { return static_cast<int>(range_.cols()); }
  double tolerance() const { return tolerance_; }

  const Matrix& basis() const { return basis_; }
  /// Orthonormal basis of the column span (d x rank).
  const Matrix& range() const { return range_; }
  const Vector& singular_values() const { return singular_values_; }
  /// Right singular vectors scaled by 1/sigma (M x rank): E = coef_map * range^T.
  const Matrix& coef_map() const { return coef_map_; }

  /// Materialized pseudoinverse factor E (M x d).
  Matrix pinv() const;

  Vector solve(const Vector& y) const;

  /// ||y - X E y||_2 evaluated through the orthonormal range basis.
  double residual(const Vector& y) const;

  /// Residuals of every column of Y (d x n).
  Vector residuals(const Matrix& Y) const;

 private:
  Matrix basis_;
  Matrix range_;
  Matrix coef_map_;
  Vector singular_values_;
  double tolerance_ = 0.0;
};

struct LsResult {
  Vector beta;
  double residual = 0.0;
};

/// beta = E y and r = ||y - X beta||_2.
LsResult ls_residual(const HatOperator& op, const Vector& y);

/// Number of least-squares residual evaluations performed since process start
/// (or since the last reset). Used to verify that no representation is
/// recomputed where it should be reused.
std::uint64_t residual_evaluations();
void reset_residual_evaluations();

namespace detail {
void count_residuals(std::uint64_t n);
}

}  // namespace ore
