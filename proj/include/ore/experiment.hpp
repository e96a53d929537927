#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ore/baselines.hpp"
#include "ore/boost.hpp"
#include "ore/learn.hpp"
#include "ore/model.hpp"
#include "ore/synth.hpp"

namespace ore {

enum class Method { kNN, kLRC, kDEF, kORE, kORERobust, kOREBoost };

Method parse_method(const std::string& name);
std::string method_name(Method m);

struct ExperimentConfig {
  std::string method = "ore";
  std::vector<int> d{25, 50, 100, 225};
  int T = 500;
  int area = kDefaultPatchArea;
  std::vector<int> widths = kDefaultPatchWidths;
  /// Candidates for 1/lambda; empty means lambda = 1e5 without selection.
  std::vector<double> inverse_lambda_grid = default_inverse_lambda_grid();
  double q = 0.2;
  double epsilon = 1e-5;
  int S = 100;
  /// One seed per repetition, or a single seed from which the rest derive.
  std::vector<std::uint64_t> seeds{0};
  int repetitions = 5;
  /// Image folder; when empty, `synthetic` is used.
  std::string dataset;
  std::optional<SyntheticSpec> synthetic;
  /// Per-class split sizes for image folders.
  int train_per_class = 30;
  int test_per_class = 30;
  std::vector<int> occlusion_sizes;
  std::string output_dir;

  void validate() const;
  std::uint64_t repetition_seed(int rep) const;
};

std::string config_to_json(const ExperimentConfig& config);
/// Unknown keys are rejected; missing keys keep their defaults.
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

struct ResultRow {
  std::string method;
  int d = 0;
  int rep = 0;
  double accuracy = 0.0;  // percent
  double ms_per_probe = 0.0;
  int n_selected = 0;
  int occlusion = 0;  // block size, 0 for clean probes
};

struct CurveRow {
  int rep = 0;
  int d = 0;
  BoostIteration it;
};

struct SummaryRow {
  std::string method;
  int d = 0;
  int occlusion = 0;
  double mean_accuracy = 0.0;
  double sd_accuracy = 0.0;
  double mean_ms_per_probe = 0.0;
  double mean_selected = 0.0;
};

struct ExperimentReport {
  std::vector<ResultRow> rows;
  std::vector<CurveRow> curve;
  std::vector<SummaryRow> summary;
};

ExperimentReport run_experiment(const ExperimentConfig& config);

void write_results_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows);
void write_curve_csv(const std::filesystem::path& path, const std::vector<CurveRow>& rows);

/// Training of one ORE-family model on a given training set.
struct TrainOptions {
  Method method = Method::kORE;
  int d = 100;
  int T = 500;
  int area = kDefaultPatchArea;
  std::vector<int> widths = kDefaultPatchWidths;
  std::vector<double> inverse_lambda_grid = default_inverse_lambda_grid();
  double q = 0.2;
  double epsilon = 1e-5;
  int S = 100;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> margin_cache;
};

struct TrainResult {
  EnsembleModel model;
  double training_error = 0.0;
  std::vector<BoostIteration> curve;
};

TrainResult train_model(const Dataset& train, const TrainOptions& options);

struct BenchConfig {
  int K = 38;
  int M = 30;
  int width = 168;
  int height = 192;
  int selected = 64;
  int d = 100;
  int probes = 50;
  double q = 0.2;
  std::uint64_t seed = 0;
};

struct BenchResult {
  double ms_per_probe = 0.0;
  double ms_per_probe_robust = 0.0;
  int selected = 0;
};

/// Times predict / predict_robust on a synthetic gallery with uniformly
/// weighted patches.
BenchResult run_bench(const BenchConfig& config);

}  // namespace ore
