#include "ore/boost.hpp"

#include <cmath>
#include <limits>

#include "ore/errors.hpp"

namespace ore {

std::optional<BestColumn> best_bpr(const Matrix& theta, const Vector& u,
                                   const std::vector<bool>& excluded) {
  if (u.size() != theta.cols()) throw DimensionError("best_bpr: weight length must equal N");
  const Vector scores = theta * u;
  std::optional<BestColumn> best;
  for (Eigen::Index t = 0; t < theta.rows(); ++t) {
    if (static_cast<std::size_t>(t) < excluded.size() && excluded[t]) continue;
    if (!best || scores(t) > best->edge) best = BestColumn{static_cast<int>(t), scores(t)};
  }
  return best;
}

MasterSolution solve_restricted_master(const Matrix& theta_restricted, double lambda,
                                       const SolverOptions& options) {
  if (theta_restricted.rows() < 1) throw std::invalid_argument("restricted master needs a column");
  const SolveResult res = solve_ore(theta_restricted, lambda, options);
  const DualCertificate cert = dual_certificate(theta_restricted, res.alpha, lambda);
  MasterSolution m;
  m.alpha = res.alpha;
  m.u = cert.u;
  m.r = cert.r;
  m.primal = cert.primal;
  m.dual = cert.dual;
  m.gap = cert.gap;
  const Vector z = theta_restricted.transpose() * m.alpha;
  m.stationarity = (m.u.array() - (-z.array()).exp()).abs().maxCoeff();
  return m;
}

BoostResult boost(const MarginMatrix& mm, const BoostOptions& options) {
  if (!(options.lambda > 0.0)) throw std::invalid_argument("boost: lambda must be positive");
  if (options.max_iterations < 1) throw std::invalid_argument("boost: need S >= 1");
  const Matrix& theta = mm.theta;
  const int T = mm.num_patches();
  const int N = mm.num_samples();

  BoostResult out;
  out.alpha = Vector::Zero(T);
  out.u = Vector::Constant(N, 1.0 / N);
  out.r = -std::numeric_limits<double>::infinity();
  out.objective = static_cast<double>(N);
  std::vector<bool> in_master(T, false);

  for (int s = 1; s <= options.max_iterations; ++s) {
    const auto best = best_bpr(theta, out.u, in_master);
    if (!best) {
      out.exhausted = true;
      break;
    }
    if (best->edge < out.r + options.epsilon) break;

    in_master[best->t] = true;
    out.columns.push_back(best->t);
    Matrix restricted(static_cast<Eigen::Index>(out.columns.size()), N);
    for (std::size_t j = 0; j < out.columns.size(); ++j) restricted.row(j) = theta.row(out.columns[j]);
    const MasterSolution master = solve_restricted_master(restricted, options.lambda, options.solver);

    out.u = master.u;
    out.r = master.r;
    out.objective = master.primal;
    out.alpha.setZero();
    for (std::size_t j = 0; j < out.columns.size(); ++j) out.alpha(out.columns[j]) = master.alpha(j);

    BoostIteration it;
    it.iteration = s;
    it.t_selected = best->t;
    it.edge = best->edge;
    it.r = master.r;
    it.objective = master.primal;
    it.training_error = mm.has_posteriors() ? training_error(out.alpha, mm)
                                            : std::numeric_limits<double>::quiet_NaN();
    it.duality_gap = master.gap;
    it.stationarity = master.stationarity;
    out.log.push_back(it);
  }
  return out;
}

}  // namespace ore
