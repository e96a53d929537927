#include "ore/learn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "ore/errors.hpp"

namespace ore {

namespace {

/// Log exp-loss over the lifted variable x = [alpha; slack]. The slack
/// coordinate carries no margin, so its gradient is identically zero.
class LiftedObjective {
 public:
  explicit LiftedObjective(const Matrix& theta) : theta_(theta), T_(theta.rows()) {}

  Eigen::Index size() const { return T_ + 1; }
  Eigen::Index slack() const { return T_; }

  double value(const Vector& x) const {
    const Eigen::ArrayXd a = -(theta_.transpose() * x.head(T_)).array();
    const double m = a.maxCoeff();
    return m + std::log((a - m).exp().sum());
  }

  /// Returns F(x); fills softmax weights p and gradient g.
  double evaluate(const Vector& x, Vector& p, Vector& g) const {
    const Eigen::ArrayXd a = -(theta_.transpose() * x.head(T_)).array();
    const double m = a.maxCoeff();
    const Eigen::ArrayXd e = (a - m).exp();
    const double s = e.sum();
    p = (e / s).matrix();
    g.resize(T_ + 1);
    g.head(T_) = -(theta_ * p);
    g(T_) = 0.0;
    return m + std::log(s);
  }

 private:
  const Matrix& theta_;
  Eigen::Index T_;
};

double fw_gap(const Vector& g, const Vector& x, double lambda) {
  return std::max(0.0, g.dot(x) - lambda * g.minCoeff());
}

SolveResult finish(const Matrix& theta, const Vector& x, double gap, int iterations,
                   const SolverOptions& options) {
  SolveResult out;
  out.alpha = x.head(theta.rows());
  for (Eigen::Index t = 0; t < out.alpha.size(); ++t)
    if (out.alpha(t) < options.truncate_below) out.alpha(t) = 0.0;
  out.objective = exp_loss(theta, out.alpha);
  out.gap = gap;
  out.iterations = iterations;
  return out;
}

/// Barrier method for the restricted problem over the columns in `cols` plus
/// the slack coordinate, in simplex coordinates b = x / lambda. Returns b
/// (slack last).
Vector barrier_solve(const Matrix& theta, const std::vector<Eigen::Index>& cols, double lambda,
                     double tol, const Vector& start) {
  const auto m = static_cast<Eigen::Index>(cols.size());
  const Eigen::Index n = m + 1;
  Matrix A(m, theta.cols());
  for (Eigen::Index a = 0; a < m; ++a) A.row(a) = lambda * theta.row(cols[a]);

  // G(b) = log sum_i exp(-(A^T b)_i); slack has no margin.
  auto G = [&](const Vector& b, Vector* p) {
    const Eigen::ArrayXd z = -(A.transpose() * b.head(m)).array();
    const double mx = z.maxCoeff();
    const Eigen::ArrayXd e = (z - mx).exp();
    const double s = e.sum();
    if (p) *p = (e / s).matrix();
    return mx + std::log(s);
  };
  // phi(b + s dir) - phi(b) for phi = t G - sum log b, evaluated from the
  // softmax weights at b so that small decreases survive cancellation.
  auto phi_change = [&](const Vector& b, const Vector& p, const Vector& dir, double s, double t) {
    const Eigen::ArrayXd w = -s * (A.transpose() * dir.head(m)).array();
    const double mx = w.maxCoeff();
    const double dG = mx + std::log((p.array() * (w - mx).exp()).sum());
    return t * dG - (s * dir.array() / b.array()).log1p().sum();
  };

  Vector b = start;
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  double t = static_cast<double>(n) / scale;
  const double t_final = 2.0 * static_cast<double>(n) / tol;
  Vector p;
  for (int outer = 0; outer < 200; ++outer) {
    for (int newton = 0; newton < 200; ++newton) {
      G(b, &p);
      const Vector Ap = A * p;
      Vector g(n);
      g.head(m) = -t * Ap;
      g(m) = 0.0;
      g.array() -= b.array().inverse();
      Matrix H = Matrix::Zero(n, n);
      // Centered form of A diag(p) A^T - (Ap)(Ap)^T; avoids cancellation.
      const Matrix Ac = (A.colwise() - Ap) * p.cwiseSqrt().asDiagonal();
      H.topLeftCorner(m, m) = t * (Ac * Ac.transpose());
      H.diagonal().array() += b.array().square().inverse();
      // Jacobi scaling keeps the factorization well conditioned when
      // barrier and curvature terms differ by many orders of magnitude.
      const Vector D = H.diagonal().cwiseSqrt().cwiseInverse();
      const Matrix Hs = D.asDiagonal() * H * D.asDiagonal();
      const Eigen::LDLT<Matrix> ldlt(Hs);
      const Vector hg = D.cwiseProduct(ldlt.solve(D.cwiseProduct(g)));
      const Vector h1 = D.cwiseProduct(ldlt.solve(D));
      const double nu = h1.sum() > 0.0 ? hg.sum() / h1.sum() : 0.0;
      Vector dir = -hg + nu * h1;
      dir -= dir.sum() * b;
      const double dec2 = -g.dot(dir);
      if (!(dec2 > 1e-12)) break;
      double step = 1.0;
      for (Eigen::Index j = 0; j < n; ++j)
        if (dir(j) < 0.0) step = std::min(step, -0.99 * b(j) / dir(j));
      while (step > 1e-16 && !(phi_change(b, p, dir, step, t) <= -0.25 * step * dec2)) step *= 0.5;
      if (step <= 1e-16) break;
      b += step * dir;
      b /= b.sum();
      if (dec2 < 1e-10) break;
    }
    if (t >= t_final) break;
    t = std::min(t * 20.0, t_final);
  }
  return b;
}

/// Newton's method on the face spanned by the clearly positive coordinates of
/// x0 (lifted, slack last). The barrier centers equalize objective values but
/// leave the active edges unequal at the level of the barrier parameter; a few
/// unconstrained steps on the face fix that. Returns nullopt when the face is
/// wrong, i.e. a step would leave it.
std::optional<Vector> polish(const Matrix& theta, const Vector& x0, double lambda) {
  const Eigen::Index T = theta.rows();
  const double cutoff = 1e-6 * x0.maxCoeff();
  std::vector<Eigen::Index> S;
  for (Eigen::Index j = 0; j <= T; ++j)
    if (x0(j) > cutoff) S.push_back(j);
  const auto m = static_cast<Eigen::Index>(S.size());
  Matrix A = Matrix::Zero(m, theta.cols());
  Vector y(m);
  for (Eigen::Index a = 0; a < m; ++a) {
    if (S[a] < T) A.row(a) = theta.row(S[a]);
    y(a) = x0(S[a]);
  }
  y *= lambda / y.sum();

  auto lift = [&](const Vector& v) {
    Vector x = Vector::Zero(T + 1);
    for (Eigen::Index a = 0; a < m; ++a) x(S[a]) = v(a);
    return x;
  };
  if (m == 1) return lift(y);

  Matrix K = Matrix::Zero(m + 1, m + 1);
  K.block(0, m, m, 1).setOnes();
  K.block(m, 0, 1, m).setOnes();
  for (int it = 0; it < 50; ++it) {
    const Eigen::ArrayXd z = -(A.transpose() * y).array();
    const double mx = z.maxCoeff();
    const Eigen::ArrayXd e = (z - mx).exp();
    const double F = mx + std::log(e.sum());
    const Vector p = (e / e.sum()).matrix();
    const Vector Ap = A * p;
    const Matrix Ac = (A.colwise() - Ap) * p.cwiseSqrt().asDiagonal();
    K.topLeftCorner(m, m) = Ac * Ac.transpose();
    Vector rhs = Vector::Zero(m + 1);
    rhs.head(m) = Ap;  // -gradient
    const Vector d = K.completeOrthogonalDecomposition().solve(rhs).head(m);
    const double dec = Ap.dot(d);
    if (!(dec > 1e-15 * std::max(1.0, std::abs(F)))) break;
    double step = 1.0;
    for (Eigen::Index a = 0; a < m; ++a)
      if (d(a) < 0.0) step = std::min(step, -y(a) / d(a));
    if (step < 1.0) return std::nullopt;
    const Eigen::ArrayXd w = -(A.transpose() * d).array();
    auto change = [&](double s) {
      const Eigen::ArrayXd ws = s * w;
      const double wm = ws.maxCoeff();
      return wm + std::log((p.array() * (ws - wm).exp()).sum());
    };
    while (step > 1e-10 && !(change(step) <= -0.25 * step * dec)) step *= 0.5;
    if (step <= 1e-10) break;
    y += step * d;
    y = y.cwiseMax(0.0);
    y *= lambda / y.sum();
  }
  return lift(y);
}

/// Column generation: the barrier method solves the problem restricted to a
/// working set; the most violating coordinates of the full gradient enter
/// until the Frank-Wolfe gap of the full problem falls below tol.
SolveResult solve_active_set(const Matrix& theta, double lambda, const SolverOptions& options) {
  const LiftedObjective obj(theta);
  const Eigen::Index T = theta.rows();
  const Eigen::Index n = obj.size();
  Vector x = Vector::Zero(n);
  x(obj.slack()) = lambda;
  std::vector<Eigen::Index> cols;
  std::vector<bool> in_set(T, false);

  // Restricted barrier solve over `set`, mapped back to lifted coordinates.
  auto restricted = [&](const std::vector<Eigen::Index>& set, const Vector& from, double tol_abs) {
    const auto m = static_cast<Eigen::Index>(set.size());
    Vector start(m + 1);
    for (Eigen::Index a = 0; a < m; ++a) start(a) = from(set[a]) / lambda;
    start(m) = from(obj.slack()) / lambda;
    start = 0.5 * start + Vector::Constant(m + 1, 0.5 / static_cast<double>(m + 1));
    const Vector b = barrier_solve(theta, set, lambda, tol_abs, start);
    Vector out = Vector::Zero(n);
    for (Eigen::Index a = 0; a < m; ++a) out(set[a]) = lambda * b(a);
    out(obj.slack()) = lambda * b(m);
    if (const auto polished = polish(theta, out, lambda);
        polished && obj.value(*polished) <= obj.value(out) + 1e-15 * std::max(1.0, std::abs(obj.value(out))))
      return *polished;
    return out;
  };

  // Interior solutions keep a little mass on every working-set column.
  // Re-solve on the clearly positive ones and keep that point if it is still
  // within tolerance.
  auto purify = [&](const Vector& x0, double gap0, int it) {
    const double cutoff = 1e-3 * x0.head(T).maxCoeff();
    std::vector<Eigen::Index> keep;
    for (Eigen::Index j : cols)
      if (x0(j) >= cutoff && x0(j) > 0.0) keep.push_back(j);
    if (keep.size() < cols.size() && !keep.empty()) {
      Vector pp, gg;
      const Vector x1 = restricted(keep, x0, 0.1 * options.tol * std::max(1.0, std::abs(obj.value(x0))));
      const double F1 = obj.evaluate(x1, pp, gg);
      const double gap1 = fw_gap(gg, x1, lambda);
      if (gap1 <= std::max(gap0, options.tol * std::max(1.0, std::abs(F1))))
        return finish(theta, x1, gap1, it, options);
    }
    return finish(theta, x0, gap0, it, options);
  };

  Vector p, g;
  double gap = std::numeric_limits<double>::infinity();
  for (int it = 0; it < options.max_iter; ++it) {
    const double F = obj.evaluate(x, p, g);
    gap = fw_gap(g, x, lambda);
    const double tol_abs = options.tol * std::max(1.0, std::abs(F));
    if (gap <= tol_abs) return cols.empty() ? finish(theta, x, gap, it, options) : purify(x, gap, it);

    // Candidates that improve on the current point, best first.
    const double level = g.dot(x) / lambda;
    std::vector<Eigen::Index> cand;
    for (Eigen::Index j = 0; j < T; ++j)
      if (!in_set[j] && g(j) < level) cand.push_back(j);
    std::sort(cand.begin(), cand.end(), [&](Eigen::Index a, Eigen::Index b) {
      return g(a) < g(b) || (g(a) == g(b) && a < b);
    });
    if (cand.size() > 10) cand.resize(10);
    const bool stalled = cand.empty();
    for (Eigen::Index j : cand) {
      in_set[j] = true;
      cols.push_back(j);
    }

    const Vector next = restricted(cols, x, stalled ? 0.1 * tol_abs : tol_abs);
    // With a complete working set and no further decrease, the remaining gap
    // is at the precision limit of the certificate (large lambda).
    if (stalled && obj.value(next) >= F - 1e-14 * std::max(1.0, std::abs(F)))
      return purify(x, gap, it);
    x = next;
  }
  throw ConvergenceError("solve_ore: no convergence within max_iter (gap " + std::to_string(gap) + ")",
                         gap);
}

SolveResult solve_mirror_descent(const Matrix& theta, double lambda, const SolverOptions& options) {
  const LiftedObjective obj(theta);
  const Eigen::Index n = obj.size();
  Vector p, g;
  // The origin is optimal when no column has a positive edge there; the
  // interior iterates would never reach it exactly.
  Vector origin = Vector::Zero(n);
  origin(obj.slack()) = lambda;
  obj.evaluate(origin, p, g);
  if (fw_gap(g, origin, lambda) == 0.0) return finish(theta, origin, 0.0, 0, options);

  Vector x = Vector::Constant(n, lambda / static_cast<double>(n));
  double eta = 1.0 / std::max(lambda, 1e-12);
  double gap = std::numeric_limits<double>::infinity();
  for (int it = 0; it < options.max_iter; ++it) {
    const double F = obj.evaluate(x, p, g);
    gap = fw_gap(g, x, lambda);
    if (gap <= options.tol * std::max(1.0, std::abs(F))) return finish(theta, x, gap, it, options);
    const Vector shifted = g.array() - g.minCoeff();
    for (int tries = 0; tries < 200; ++tries) {
      Vector y = (x.array() * (-eta * shifted.array()).exp()).matrix();
      y *= lambda / y.sum();
      double kl = 0.0;
      for (Eigen::Index j = 0; j < n; ++j)
        if (y(j) > 0.0 && x(j) > 0.0) kl += y(j) * std::log(y(j) / x(j));
      if (obj.value(y) <= F + g.dot(y - x) + kl / eta + 1e-15 * std::abs(F)) {
        x = y;
        break;
      }
      eta *= 0.5;
    }
    eta *= 1.5;
  }
  throw ConvergenceError("solve_ore: no convergence within max_iter (gap " + std::to_string(gap) + ")",
                         gap);
}

}  // namespace

double log_exp_loss(const Matrix& theta, const Vector& alpha) {
  if (alpha.size() != theta.rows()) throw DimensionError("alpha length must equal T");
  const Eigen::ArrayXd a = -(theta.transpose() * alpha).array();
  const double m = a.maxCoeff();
  return m + std::log((a - m).exp().sum());
}

double exp_loss(const Matrix& theta, const Vector& alpha) {
  const double lf = log_exp_loss(theta, alpha);
  if (lf >= std::log(std::numeric_limits<double>::max())) return std::numeric_limits<double>::max();
  return std::exp(lf);
}

double exp_loss(const MarginMatrix& mm, const Vector& alpha) { return exp_loss(mm.theta, alpha); }

SolveResult solve_ore(const Matrix& theta, double lambda, const SolverOptions& options) {
  if (!(lambda > 0.0)) throw std::invalid_argument("solve_ore: lambda must be positive");
  if (theta.rows() < 1 || theta.cols() < 1) throw DimensionError("solve_ore: empty margin matrix");
  if (!theta.allFinite()) throw NumericError("solve_ore: non-finite margin");
  switch (options.kind) {
    case SolverKind::kMirrorDescent:
      return solve_mirror_descent(theta, lambda, options);
    case SolverKind::kActiveSetBarrier:
    default:
      return solve_active_set(theta, lambda, options);
  }
}

SolveResult solve_ore(const MarginMatrix& mm, double lambda, const SolverOptions& options) {
  return solve_ore(mm.theta, lambda, options);
}

DualCertificate dual_certificate(const Matrix& theta, const Vector& alpha, double lambda) {
  if (alpha.size() != theta.rows()) throw DimensionError("alpha length must equal T");
  DualCertificate c;
  const Vector z = theta.transpose() * alpha;
  c.u = (-z.array()).exp().matrix();
  c.edges = theta * c.u;
  c.r = std::max(0.0, c.edges.size() ? c.edges.maxCoeff() : 0.0);
  c.primal = c.u.sum();
  c.dual = c.u.dot(z) + c.u.sum() - lambda * c.r;
  c.gap = lambda * c.r - alpha.dot(c.edges);
  return c;
}

std::vector<double> default_inverse_lambda_grid() {
  return {10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
}

ModelSelection model_select(const MarginMatrix& mm, const std::vector<double>& lambda_grid,
                            const SolverOptions& options) {
  if (lambda_grid.empty()) throw std::invalid_argument("model_select: empty lambda grid");
  ModelSelection sel;
  double best_err = std::numeric_limits<double>::infinity();
  for (double lambda : lambda_grid) {
    SolveResult res = solve_ore(mm, lambda, options);
    const double err = training_error(res.alpha, mm);
    sel.lambdas.push_back(lambda);
    sel.training_errors.push_back(err);
    sel.objectives.push_back(res.objective);
    if (err < best_err || (err == best_err && lambda < sel.lambda)) {
      best_err = err;
      sel.lambda = lambda;
      sel.alpha = std::move(res.alpha);
    }
  }
  return sel;
}

std::vector<int> selected_patches(const Vector& alpha) {
  std::vector<int> out;
  const double l1 = alpha.cwiseAbs().sum();
  for (Eigen::Index t = 0; t < alpha.size(); ++t)
    if (alpha(t) > 1e-6 * l1) out.push_back(static_cast<int>(t));
  return out;
}

}  // namespace ore
