#pragma once

#include <optional>
#include <vector>

#include "ore/learn.hpp"
#include "ore/loo.hpp"

namespace ore {

struct BestColumn {
  int t = -1;
  double edge = 0.0;  // c_t^T u
};

/// argmax_t c_t^T u over the rows of theta not marked in `excluded` (lowest
/// index on ties). nullopt when every column is excluded.
std::optional<BestColumn> best_bpr(const Matrix& theta, const Vector& u,
                                   const std::vector<bool>& excluded);

/// Restricted master: the primal problem over a subset of columns, with the
/// dual recovered from stationarity.
struct MasterSolution {
  Vector alpha;   // over the restricted columns
  Vector u;       // u_i = exp(-z_i)
  double r = 0.0; // max(0, max_t c_t^T u) over the restricted columns
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;
  /// max_i |u_i - exp(-z_i)| recomputed from alpha.
  double stationarity = 0.0;
};

MasterSolution solve_restricted_master(const Matrix& theta_restricted, double lambda,
                                       const SolverOptions& options = {});

struct BoostOptions {
  double lambda = 1.0;
  double epsilon = 1e-5;
  int max_iterations = 100;  // S
  SolverOptions solver{SolverKind::kActiveSetBarrier, 1e-10, 50000, 1e-12};
};

struct BoostIteration {
  int iteration = 0;
  int t_selected = -1;
  double edge = 0.0;
  double r = 0.0;
  double objective = 0.0;
  double training_error = 0.0;  // NaN when the margin matrix has no posteriors
  double duality_gap = 0.0;
  double stationarity = 0.0;
};

struct BoostResult {
  Vector alpha;                    // length T
  std::vector<int> columns;        // in insertion order
  std::vector<BoostIteration> log;
  Vector u;
  double r = 0.0;
  double objective = 0.0;
  bool exhausted = false;          // every column entered the master
};

/// Column-generation boosting over the precomputed oracle vectors (rows of
/// theta). No representation is evaluated inside the loop.
BoostResult boost(const MarginMatrix& mm, const BoostOptions& options);

}  // namespace ore
