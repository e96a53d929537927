#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "ore/learn.hpp"
#include "ore/loo.hpp"
#include "ore/synth.hpp"
#include "test_util.hpp"

using namespace ore;

namespace {

Matrix uniform_theta(int T, int N, double lo, double hi, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(T, N);
  for (int j = 0; j < N; ++j)
    for (int i = 0; i < T; ++i) m(i, j) = u(rng);
  return m;
}

double oracle_loss(const Matrix& theta, const Vector& alpha) {
  double s = 0.0;
  for (int i = 0; i < theta.cols(); ++i) {
    double z = 0.0;
    for (int t = 0; t < theta.rows(); ++t) z += alpha(t) * theta(t, i);
    s += std::exp(-z);
  }
  return s;
}

/// Minimum of the loss over alpha = lambda * b, b >= 0, sum b <= 1, on a grid of
/// the given step restricted to the box [lo, hi]^3.
double grid_min(const Matrix& theta, double lambda, double step, Eigen::Vector3d lo, Eigen::Vector3d hi,
                Eigen::Vector3d* arg) {
  double best = std::numeric_limits<double>::infinity();
  const auto idx = [&](double v) { return static_cast<long>(std::llround(v / step)); };
  for (long a = std::max(0L, idx(lo(0))); a <= idx(hi(0)); ++a)
    for (long b = std::max(0L, idx(lo(1))); b <= idx(hi(1)); ++b)
      for (long c = std::max(0L, idx(lo(2))); c <= idx(hi(2)); ++c) {
        if ((a + b + c) * step > 1.0 + 1e-12) continue;
        const Eigen::Vector3d x(a * step, b * step, c * step);
        const double f = oracle_loss(theta, lambda * Vector(x));
        if (f < best) {
          best = f;
          *arg = x;
        }
      }
  return best;
}

MarginMatrix synthetic_margins(int K, std::uint64_t seed) {
  SyntheticSpec s;
  s.K = K;
  s.M = 6;
  s.Phi = 3;
  s.Q = 2;
  s.width = 20;
  s.height = 20;
  s.noise_sigma = 0.3;
  s.seed = seed;
  const auto data = synth_dataset(s);
  const auto specs = sample_patches(20, 20, 30, 25, std::vector<int>{5}, seed + 1);
  return loo_margin_matrix(data.train.images, specs, 12);
}

}  // namespace

TEST_CASE("exp_loss") {
  const Matrix theta = uniform_theta(4, 9, -0.5, 0.9, 1);
  CHECK(exp_loss(theta, Vector::Zero(4)) == doctest::Approx(9.0).epsilon(1e-15));
  Matrix one(1, 1);
  one << 0.5;
  CHECK(exp_loss(one, Vector::Constant(1, 2.0)) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  const Vector alpha = testutil::random_vector(4, 3).cwiseAbs();
  CHECK(exp_loss(theta, alpha) == doctest::Approx(oracle_loss(theta, alpha)).epsilon(1e-13));
  CHECK(log_exp_loss(theta, alpha) == doctest::Approx(std::log(oracle_loss(theta, alpha))).epsilon(1e-13));
  Matrix big(1, 1);
  big << -1.0;
  CHECK(exp_loss(big, Vector::Constant(1, 1e4)) == std::numeric_limits<double>::max());
  CHECK(log_exp_loss(big, Vector::Constant(1, 1e4)) == doctest::Approx(1e4));
}

TEST_CASE("single positive patch takes the whole budget") {
  const Matrix theta = uniform_theta(1, 10, 0.05, 0.6, 2);
  for (double lambda : {0.1, 2.0, 50.0}) {
    const SolveResult r = solve_ore(theta, lambda);
    CHECK(r.alpha(0) == doctest::Approx(lambda).epsilon(1e-9));
    // the 1-D objective is strictly decreasing on [0, lambda]
    for (double a = 0.0; a < lambda; a += lambda / 50)
      CHECK(oracle_loss(theta, Vector::Constant(1, a)) > r.objective);
  }
}

TEST_CASE("flat objective keeps alpha at zero") {
  for (auto kind : {SolverKind::kActiveSetBarrier, SolverKind::kMirrorDescent}) {
    SolverOptions o;
    o.kind = kind;
    const SolveResult r = solve_ore(Matrix::Zero(4, 7), 3.0, o);
    CHECK(r.alpha.isZero(0.0));
    CHECK(r.objective == doctest::Approx(7.0));
  }
}

TEST_CASE("matches a grid search over the scaled simplex") {
  const double lambda = 2.0;
  for (std::uint64_t seed : {11, 12, 13}) {
    const Matrix theta = uniform_theta(3, 8, -0.3, 0.7, seed);
    Eigen::Vector3d coarse;
    grid_min(theta, lambda, 1e-2, Eigen::Vector3d::Zero(), Eigen::Vector3d::Ones(), &coarse);
    Eigen::Vector3d fine;
    const double best = grid_min(theta, lambda, 1e-3, coarse.array() - 0.03, coarse.array() + 0.03, &fine);
    const SolveResult r = solve_ore(theta, lambda);
    CHECK(r.objective <= best + 1e-6);
    CHECK(r.objective >= best - 1e-3 * best);
    CHECK(r.alpha.minCoeff() >= 0.0);
    CHECK(r.alpha.sum() <= lambda * (1 + 1e-9));
  }
}

TEST_CASE("barrier and mirror descent agree") {
  for (std::uint64_t seed : {21, 22, 23}) {
    const Matrix theta = uniform_theta(15, 40, -0.2, 0.6, seed);
    for (double lambda : {0.5, 5.0, 50.0}) {
      SolverOptions md;
      md.kind = SolverKind::kMirrorDescent;
      md.tol = 1e-5;
      md.max_iter = 200000;
      const SolveResult a = solve_ore(theta, lambda);
      const SolveResult b = solve_ore(theta, lambda, md);
      // the mirror-descent gap bounds its own distance to the optimum
      const double diff = std::log(b.objective) - std::log(a.objective);
      CHECK(diff >= -1e-9);
      CHECK(diff <= b.gap + 1e-12);
    }
  }
}

TEST_CASE("property: feasibility, descent and the optimality certificate") {
  std::mt19937_64 rng(99);
  for (int s = 0; s < 40; ++s) {
    const int T = 2 + static_cast<int>(rng() % 30);
    const int N = 5 + static_cast<int>(rng() % 60);
    const Matrix theta = uniform_theta(T, N, -0.3, 0.7, rng());
    const double lambda = std::pow(10.0, -1.0 + 4.0 * (rng() % 1000) / 1000.0);
    const SolveResult r = solve_ore(theta, lambda);
    CHECK(r.alpha.minCoeff() >= 0.0);
    CHECK(r.alpha.sum() <= lambda * (1 + 1e-9));
    CHECK(r.objective <= N * (1 + 1e-12));
    CHECK(r.objective == doctest::Approx(oracle_loss(theta, r.alpha)).epsilon(1e-10));

    // Frank-Wolfe certificate on log f, recomputed from the dual weights:
    // lambda * max(0, top edge) - sum_t alpha_t edge_t, relative to f
    const DualCertificate c = dual_certificate(theta, r.alpha, lambda);
    const double f = c.u.sum();
    const double top = c.edges.maxCoeff();
    const double bound = 1e-6 * std::max(1.0, std::abs(std::log(f))) * f;
    CHECK(lambda * std::max(0.0, top) - r.alpha.dot(c.edges) <= bound);
    // every active coordinate is priced at the top edge
    for (int t = 0; t < T; ++t)
      if (r.alpha(t) > 0.0) CHECK(r.alpha(t) * (top - c.edges(t)) <= bound);
    CHECK(c.gap >= -1e-9 * f);
  }
}

TEST_CASE("property: optimum is non-increasing in lambda") {
  const Matrix theta = uniform_theta(20, 50, -0.3, 0.6, 5);
  double prev = std::numeric_limits<double>::infinity();
  for (double lambda : {0.01, 0.1, 0.5, 1.0, 5.0, 20.0, 100.0, 1000.0}) {
    const double f = solve_ore(theta, lambda).objective;
    CHECK(f <= prev * (1 + 1e-9));
    prev = f;
  }
}

TEST_CASE("large budgets") {
  const Matrix theta = uniform_theta(40, 60, -0.3, 0.6, 8);
  const SolveResult r = solve_ore(theta, kDefaultLambda);
  CHECK(r.alpha.sum() <= kDefaultLambda * (1 + 1e-9));
  CHECK(r.objective <= solve_ore(theta, 1000.0).objective * (1 + 1e-9));
}

TEST_CASE("selected patches") {
  Vector a(4);
  a << 1.0, 1e-8, 0.0, 2.0;
  CHECK(selected_patches(a) == std::vector<int>{0, 3});
  CHECK(selected_patches(Vector::Zero(3)).empty());
}

TEST_CASE("model selection tie rule and singleton grid") {
  MarginMatrix mm;
  mm.num_classes = 2;
  mm.labels = {0, 1, 0, 1};
  mm.theta = Matrix::Constant(2, 4, 0.4);
  Matrix p(2, 4);
  p << 0.9, 0.1, 0.9, 0.1, 0.1, 0.9, 0.1, 0.9;
  mm.loo_posteriors = {p, p};
  const ModelSelection sel = model_select(mm, {0.5, 0.1, 0.01, 0.05});
  CHECK(sel.lambda == 0.01);
  for (double e : sel.training_errors) CHECK(e == 0.0);
  CHECK(model_select(mm, {0.3}).lambda == 0.3);
}

TEST_CASE("model selection picks the lowest training error") {
  const MarginMatrix mm = synthetic_margins(5, 300);
  const auto grid = default_inverse_lambda_grid();
  std::vector<double> lambdas;
  for (double g : grid) lambdas.push_back(1.0 / g);
  const ModelSelection sel = model_select(mm, lambdas);
  const double chosen = training_error(sel.alpha, mm);
  for (double lambda : lambdas) {
    const double e = training_error(solve_ore(mm, lambda).alpha, mm);
    CHECK(chosen <= e);
  }
  CHECK(grid.front() == 10.0);
  CHECK(grid.back() == 100.0);
}
