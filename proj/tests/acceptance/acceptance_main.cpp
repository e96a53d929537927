// Acceptance suite: one line per criterion, exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ore/boost.hpp"
#include "ore/bpr.hpp"
#include "ore/experiment.hpp"
#include "ore/inference.hpp"
#include "ore/learn.hpp"
#include "ore/loo.hpp"
#include "ore/numerics.hpp"
#include "ore/synth.hpp"

using namespace ore;

namespace {

// Pinned tolerances and budgets.
constexpr double kSimplexTol = 1e-10;
constexpr double kSimplexSeconds = 1.0;
constexpr double kWeightInvarianceTol = 1e-8;
constexpr double kWeightInvarianceSeconds = 5.0;
constexpr double kBoostRelTol = 1e-4;
constexpr double kBoostSeconds = 30.0;
constexpr double kKktTol = 1e-6;
constexpr double kStabilityTol = 1e-8;
constexpr int kLooMaxDisagreements = 1;
constexpr double kPerfectAccuracy = 100.0;
constexpr double kHeadlineTol = 1.0;  // percentage points
constexpr double kPredictBudgetMs = 50.0;
constexpr double kBoostVsThetaRatio = 5.0;

enum class Status { kPass, kFail, kSkipped };

struct Outcome {
  Status status;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Shared instance for criteria 3, 4 and 11.
struct BoostInstance {
  SyntheticData data;
  std::vector<PatchSpec> specs;
};

BoostInstance boost_instance(std::uint64_t seed) {
  SyntheticSpec s;
  s.K = 4;
  s.M = 10;
  s.Phi = 3;
  s.Q = 2;
  s.noise_sigma = 0.3;
  s.seed = seed;
  BoostInstance b{synth_dataset(s), {}};
  b.specs = sample_patches(s.width, s.height, 25, kDefaultPatchArea, kDefaultPatchWidths, mix_seed(seed, 7));
  return b;
}

constexpr int kBoostD = 20;
constexpr double kBoostLambda = 2.0;

Outcome simplex_normalization() {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> mag(-6.0, 1.0);
  const int Ks[] = {2, 10, 38};
  double worst = 0.0;
  bool nonneg = true;
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < 10000; ++i) {
    const int K = Ks[i % 3];
    Vector r(K);
    for (int k = 0; k < K; ++k) r(k) = std::pow(10.0, mag(rng));
    const Vector b = bpr_posterior(r);
    worst = std::max(worst, std::abs(b.sum() - 1.0));
    nonneg = nonneg && (b.array() >= 0.0).all();
  }
  const double secs = seconds_since(t0);
  const bool ok = worst <= kSimplexTol && nonneg && secs < kSimplexSeconds;
  return {ok ? Status::kPass : Status::kFail,
          fmt("max |sum b - 1| = %.2e, nonnegative = %s, %.3f s", worst, nonneg ? "yes" : "no", secs)};
}

Outcome weight_invariance() {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> w(0.05, 20.0);
  std::uniform_int_distribution<int> dims(5, 60);
  double worst = 0.0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < 1000; ++i) {
    const int d = dims(rng);
    const int M = std::uniform_int_distribution<int>(1, d - 1)(rng);
    Matrix X(d, M);
    for (int c = 0; c < M; ++c)
      for (int r = 0; r < d; ++r) X(r, c) = g(rng);
    Vector y(d);
    for (int r = 0; r < d; ++r) y(r) = g(rng);
    Vector u(M);
    for (int c = 0; c < M; ++c) u(c) = w(rng);
    const double a = HatOperator(X).residual(y);
    const double b = HatOperator(X * u.asDiagonal()).residual(y);
    worst = std::max(worst, std::abs(a - b) / std::max(a, 1e-300));
  }
  const double secs = seconds_since(t0);
  const bool ok = worst <= kWeightInvarianceTol && secs < kWeightInvarianceSeconds;
  return {ok ? Status::kPass : Status::kFail, fmt("max relative change %.2e, %.3f s", worst, secs)};
}

struct BoostRun {
  double rel_diff = 0.0;
  double worst_stationarity = 0.0;
  double worst_gap = 0.0;
  int master_solves = 0;
};

Outcome boosting_equivalence(std::vector<BoostRun>& runs) {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const BoostInstance inst = boost_instance(seed);
    const MarginMatrix mm = loo_margin_matrix(inst.data.train.images, inst.specs, kBoostD);
    const SolveResult direct = solve_ore(mm, kBoostLambda, SolverOptions{SolverKind::kActiveSetBarrier, 1e-12});
    BoostOptions bo;
    bo.lambda = kBoostLambda;
    const BoostResult br = boost(mm, bo);
    BoostRun run;
    run.rel_diff = std::abs(br.objective - direct.objective) / direct.objective;
    for (const auto& it : br.log) {
      run.worst_stationarity = std::max(run.worst_stationarity, it.stationarity);
      run.worst_gap = std::max(run.worst_gap, std::abs(it.duality_gap));
      ++run.master_solves;
    }
    worst = std::max(worst, run.rel_diff);
    runs.push_back(run);
  }
  const double secs = seconds_since(t0);
  const bool ok = worst <= kBoostRelTol && secs < kBoostSeconds;
  return {ok ? Status::kPass : Status::kFail,
          fmt("max relative objective difference %.2e over 5 seeds, %.2f s", worst, secs)};
}

Outcome master_kkt(const std::vector<BoostRun>& runs) {
  double stat = 0.0, gap = 0.0;
  int solves = 0;
  for (const auto& r : runs) {
    stat = std::max(stat, r.worst_stationarity);
    gap = std::max(gap, r.worst_gap);
    solves += r.master_solves;
  }
  const bool ok = solves > 0 && stat <= kKktTol && gap <= kKktTol;
  return {ok ? Status::kPass : Status::kFail,
          fmt("%d master solves, max |u - exp(-z)| = %.2e, max duality gap = %.2e", solves, stat, gap)};
}

Outcome lemma_stability() {
  std::mt19937_64 rng(15);
  std::normal_distribution<double> g;
  double worst = 0.0;
  int cases = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const int d = 40, Phi = 2 + rep % 5, M = 2 * Phi;
    Matrix B(d, Phi), C(Phi, M);
    for (auto* A : {&B, &C})
      for (Eigen::Index c = 0; c < A->cols(); ++c)
        for (Eigen::Index r = 0; r < A->rows(); ++r) (*A)(r, c) = g(rng);
    Matrix X = B * C;
    for (int c = 0; c < M; ++c) X.col(c).normalize();
    const HatOperator full(X);
    // Probes: the other gallery columns plus off-span vectors.
    Matrix probes(d, M + 5);
    probes.leftCols(M) = X;
    for (int c = M; c < M + 5; ++c)
      for (int r = 0; r < d; ++r) probes(r, c) = g(rng);
    const Vector base = full.residuals(probes);
    for (int j = 0; j < M; ++j) {
      Matrix Xj(d, M - 1);
      for (int c = 0, o = 0; c < M; ++c)
        if (c != j) Xj.col(o++) = X.col(c);
      const Vector after = HatOperator(Xj).residuals(probes);
      for (int c = 0; c < M + 5; ++c) {
        if (c == j) continue;
        worst = std::max(worst, std::abs(after(c) - base(c)));
        ++cases;
      }
    }
  }
  const bool ok = worst <= kStabilityTol;
  return {ok ? Status::kPass : Status::kFail, fmt("max residual change %.2e over %d probe/deletion pairs", worst, cases)};
}

/// Prediction for `probe` by a model retrained on `train` (selection included).
int retrained_prediction(const std::vector<FaceImage>& train, const std::vector<PatchSpec>& specs, int d,
                         int K, const FaceImage& probe) {
  GalleryOptions go;
  go.require_balanced = false;
  go.build_pooled = false;
  const MarginMatrix mm = loo_margin_matrix(train, specs, d, LooOptions{}, go);
  std::vector<double> lambdas;
  for (double g : default_inverse_lambda_grid()) lambdas.push_back(1.0 / g);
  const ModelSelection sel = model_select(mm, lambdas);
  EnsembleModel model;
  model.d = d;
  model.image_width = probe.width;
  model.image_height = probe.height;
  model.specs = specs;
  model.alpha = sel.alpha;
  std::vector<PatchGallery> galleries;
  for (int t : model.selected()) galleries.push_back(build_gallery(train, specs[t], d, K, go));
  return predict(model, galleries, probe).label;
}

struct DeskCheck {
  int worst = 0;
  int explicit_errors = 0;
  int estimated_errors = 0;
  std::string per_seed;
};

DeskCheck desk_check(double noise) {
  constexpr int d = 20, T = 40;
  DeskCheck out;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SyntheticSpec s;
    s.K = 4;
    s.M = 10;
    s.Phi = 3;
    s.Q = 2;
    s.noise_sigma = noise;
    s.test_per_class = 0;
    s.seed = mix_seed(seed, 600);
    const auto train = synth_dataset(s).train.images;
    const auto specs = sample_patches(s.width, s.height, T, kDefaultPatchArea, kDefaultPatchWidths, seed);
    const MarginMatrix mm = loo_margin_matrix(train, specs, d);
    std::vector<double> lambdas;
    for (double g : default_inverse_lambda_grid()) lambdas.push_back(1.0 / g);
    const ModelSelection sel = model_select(mm, lambdas);
    const Matrix xi = loo_ensemble_outputs(sel.alpha, mm);

    int disagree = 0;
    for (std::size_t i = 0; i < train.size(); ++i) {
      std::vector<FaceImage> rest;
      for (std::size_t j = 0; j < train.size(); ++j)
        if (j != i) rest.push_back(train[j]);
      for (std::size_t j = 0; j < rest.size(); ++j) rest[j].sample_index = static_cast<int>(j);
      const int explicit_label = retrained_prediction(rest, specs, d, s.K, train[i]);
      const int estimated = argmax_lowest(xi.col(static_cast<Eigen::Index>(i)));
      const bool e1 = explicit_label != train[i].label;
      const bool e2 = estimated != train[i].label;
      disagree += e1 != e2 ? 1 : 0;
      out.explicit_errors += e1 ? 1 : 0;
      out.estimated_errors += e2 ? 1 : 0;
    }
    out.worst = std::max(out.worst, disagree);
    out.per_seed += (out.per_seed.empty() ? "" : ",") + std::to_string(disagree);
  }
  return out;
}

Outcome theorem_desk_check() {
  // Gate: low-noise data satisfying the subspace assumption (Phi * Q < M).
  const DeskCheck gate = desk_check(0.05);
  // Reported only: noisier data where the assumption is strained.
  const DeskCheck stress = desk_check(0.1);
  const bool ok = gate.worst <= kLooMaxDisagreements;
  return {ok ? Status::kPass : Status::kFail,
          fmt("noise 0.05: disagreements per seed [%s] of 40, errors %d estimated / %d explicit of 200; "
              "noise 0.1 (not gated): [%s], errors %d / %d",
              gate.per_seed.c_str(), gate.estimated_errors, gate.explicit_errors, stress.per_seed.c_str(),
              stress.estimated_errors, stress.explicit_errors)};
}

ExperimentConfig synthetic_config(const std::string& method, SyntheticSpec spec, int d, int T) {
  ExperimentConfig c;
  c.method = method;
  c.d = {d};
  c.T = T;
  c.synthetic = spec;
  c.repetitions = 1;
  c.seeds = {spec.seed};
  return c;
}

Outcome noiseless_recognition() {
  SyntheticSpec s;
  s.K = 10;
  s.M = 12;
  s.Phi = 5;
  s.Q = 1;
  s.noise_sigma = 0.0;
  s.test_per_class = 5;
  s.seed = 700;
  std::string detail;
  bool ok = true;
  for (const char* m : {"ore", "ore-boost", "lrc"}) {
    const auto rep = run_experiment(synthetic_config(m, s, 50, 100));
    const double acc = rep.summary.front().mean_accuracy;
    ok = ok && acc >= kPerfectAccuracy;
    detail += fmt("%s%s %.1f%%", detail.empty() ? "" : ", ", m, acc);
  }
  return {ok ? Status::kPass : Status::kFail, detail};
}

Outcome occlusion_trend() {
  SyntheticSpec s;
  s.K = 10;
  s.M = 12;
  s.Phi = 3;
  s.Q = 2;
  s.width = 48;
  s.height = 48;
  s.noise_sigma = 0.1;
  s.test_per_class = 6;
  s.seed = 800;
  constexpr int kBlock = 12;  // 6 blocks of 12x12 on 48x48: 37.5% nominal coverage
  auto run = [&](const std::string& method) {
    ExperimentConfig c = synthetic_config(method, s, 100, 200);
    c.repetitions = 5;
    c.seeds = {1, 2, 3, 4, 5};
    c.occlusion_sizes = {kBlock};
    c.inverse_lambda_grid.clear();
    return run_experiment(c).summary.front();
  };
  const SummaryRow ore = run("ore");
  const SummaryRow robust = run("ore-robust");
  const bool ok = robust.mean_accuracy >= ore.mean_accuracy;
  return {ok ? Status::kPass : Status::kFail,
          fmt("robust %.1f +- %.1f%% vs plain %.1f +- %.1f%% (%d blocks of %dx%d, %.1f selected patches)",
              robust.mean_accuracy, robust.sd_accuracy, ore.mean_accuracy, ore.sd_accuracy,
              occlusion_block_count(s.width, s.height, kBlock), kBlock, kBlock, ore.mean_selected)};
}

Outcome headline_numbers() {
  const char* yale = std::getenv("ORE_YALEB_DIR");
  const char* ar = std::getenv("ORE_AR_DIR");
  if (!yale && !ar) return {Status::kSkipped, "set ORE_YALEB_DIR and/or ORE_AR_DIR to run the full protocol"};
  bool ok = true;
  std::string detail;
  auto run = [&](const char* root, const char* method, int train_per_class, int test_per_class, double expected,
                 const char* name) {
    ExperimentConfig c;
    c.method = method;
    c.d = {225};
    c.T = 500;
    c.dataset = root;
    c.train_per_class = train_per_class;
    c.test_per_class = test_per_class;
    c.repetitions = 5;
    c.seeds = {1, 2, 3, 4, 5};
    const SummaryRow r = run_experiment(c).summary.front();
    ok = ok && std::abs(r.mean_accuracy - expected) <= kHeadlineTol;
    detail += fmt("%s%s %.2f +- %.2f%% (expected %.1f)", detail.empty() ? "" : ", ", name, r.mean_accuracy,
                  r.sd_accuracy, expected);
  };
  if (yale) run(yale, "ore", 30, 30, 99.9, "Yale-B");
  if (ar) run(ar, "ore-robust", 13, 13, 99.5, "AR");
  return {ok ? Status::kPass : Status::kFail, detail};
}

Outcome efficiency() {
  BenchConfig bc;
  bc.seed = 1000;
  const BenchResult r = run_bench(bc);
  const bool ok = r.selected <= 64 && r.ms_per_probe <= kPredictBudgetMs;
  return {ok ? Status::kPass : Status::kFail,
          fmt("%.2f ms per probe (robust %.2f ms) with %d patches at d=%d, %dx%d, K=%d", r.ms_per_probe,
              r.ms_per_probe_robust, r.selected, bc.d, bc.width, bc.height, bc.K)};
}

Outcome weight_free_training() {
  const BoostInstance inst = boost_instance(1);
  // Warm-up so both timings see the same cache state.
  (void)loo_margin_matrix(inst.data.train.images, inst.specs, kBoostD);
  auto t0 = std::chrono::steady_clock::now();
  const MarginMatrix mm = loo_margin_matrix(inst.data.train.images, inst.specs, kBoostD);
  const double theta_secs = seconds_since(t0);

  reset_residual_evaluations();
  BoostOptions bo;
  bo.lambda = kBoostLambda;
  bo.max_iterations = 100;
  t0 = std::chrono::steady_clock::now();
  const BoostResult br = boost(mm, bo);
  const double boost_secs = seconds_since(t0);
  const auto evaluations = residual_evaluations();
  const bool ok = evaluations == 0 && boost_secs < kBoostVsThetaRatio * theta_secs;
  return {ok ? Status::kPass : Status::kFail,
          fmt("%llu residual evaluations during boosting (%zu iterations); boost %.2f ms vs margin matrix %.2f ms",
              static_cast<unsigned long long>(evaluations), br.log.size(), 1e3 * boost_secs, 1e3 * theta_secs)};
}

}  // namespace

int main() {
  std::vector<BoostRun> boost_runs;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"simplex normalization", simplex_normalization},
      {"weight-independent residuals", weight_invariance},
      {"boosting matches direct solve", [&] { return boosting_equivalence(boost_runs); }},
      {"restricted master KKT", [&] { return master_kkt(boost_runs); }},
      {"column-deletion stability", lemma_stability},
      {"training error equals leave-one-out error", theorem_desk_check},
      {"noiseless synthetic recognition", noiseless_recognition},
      {"robust aggregation under occlusion", occlusion_trend},
      {"published accuracy on Yale-B / AR", headline_numbers},
      {"predict latency", efficiency},
      {"boosting reuses oracle vectors", weight_free_training},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {Status::kFail, std::string("exception: ") + e.what()};
    }
    const char* tag = o.status == Status::kPass ? "PASS" : o.status == Status::kFail ? "FAIL" : "SKIPPED";
    failed += o.status == Status::kFail ? 1 : 0;
    std::printf("[%s] %2zu %s: %s\n", tag, i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
