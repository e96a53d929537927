#pragma once

#include <vector>

#include "ore/loo.hpp"
#include "ore/numerics.hpp"

namespace ore {

/// sum_i exp(-z_i) with z = theta^T alpha; saturates at DBL_MAX instead of
/// overflowing.
double exp_loss(const Matrix& theta, const Vector& alpha);
double exp_loss(const MarginMatrix& mm, const Vector& alpha);

/// log of exp_loss, computed stably.
double log_exp_loss(const Matrix& theta, const Vector& alpha);

enum class SolverKind {
  /// Column generation over a working set whose restricted problems are
  /// solved by a barrier method on the lifted simplex {x >= 0, sum x = lambda}.
  kActiveSetBarrier,
  /// Entropic mirror descent (exponentiated gradient) with backtracking.
  kMirrorDescent,
};

struct SolverOptions {
  SolverKind kind = SolverKind::kActiveSetBarrier;
  /// Bound on the Frank-Wolfe gap of log f, relative to max(1, |log f|).
  double tol = 1e-8;
  int max_iter = 50000;
  /// Entries below this are reported as exactly zero.
  double truncate_below = 1e-12;
};

struct SolveResult {
  Vector alpha;
  double objective = 0.0;  // exp loss at alpha
  /// Frank-Wolfe gap of the log objective; bounds log f(alpha) - log f*,
  /// hence (approximately) the relative objective gap.
  double gap = 0.0;
  int iterations = 0;
};

/// min_alpha sum_i exp(-sum_t alpha_t theta_{t,i}) s.t. alpha >= 0,
/// ||alpha||_1 <= lambda. theta is T x N. Throws ConvergenceError when the
/// gap is still above tol after max_iter iterations.
SolveResult solve_ore(const Matrix& theta, double lambda, const SolverOptions& options = {});
SolveResult solve_ore(const MarginMatrix& mm, double lambda, const SolverOptions& options = {});

/// Dual quantities at a primal point: u_i = exp(-z_i), per-column edges
/// c_t^T u, r = max(0, max_t edge_t) and the gap between the primal value and
/// the Lagrange dual value -sum(u log u - u) - lambda r.
struct DualCertificate {
  Vector u;
  Vector edges;
  double r = 0.0;
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;
};
DualCertificate dual_certificate(const Matrix& theta, const Vector& alpha, double lambda);

/// Inverse-lambda candidates used for training-determined model selection.
std::vector<double> default_inverse_lambda_grid();
/// Bound used when no grid is given (1/lambda = 1e-5).
inline constexpr double kDefaultLambda = 1e5;

struct ModelSelection {
  double lambda = 0.0;
  Vector alpha;
  std::vector<double> lambdas;
  std::vector<double> training_errors;
  std::vector<double> objectives;
};

/// Solves for every lambda in the grid and keeps the one with the lowest
/// leave-one-out training error; ties go to the smaller lambda.
ModelSelection model_select(const MarginMatrix& mm, const std::vector<double>& lambda_grid,
                            const SolverOptions& options = {});

/// {t : alpha_t > 1e-6 * ||alpha||_1}
std::vector<int> selected_patches(const Vector& alpha);

}  // namespace ore
