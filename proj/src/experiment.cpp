#include "ore/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ore/dataset_io.hpp"
#include "ore/errors.hpp"
#include "ore/inference.hpp"
#include "ore/loo.hpp"

namespace ore {

using nlohmann::json;

Method parse_method(const std::string& name) {
  if (name == "nn") return Method::kNN;
  if (name == "lrc") return Method::kLRC;
  if (name == "def") return Method::kDEF;
  if (name == "ore") return Method::kORE;
  if (name == "ore-robust") return Method::kORERobust;
  if (name == "ore-boost") return Method::kOREBoost;
  throw ConfigError("unknown method '" + name + "' (nn, lrc, def, ore, ore-robust, ore-boost)");
}

std::string method_name(Method m) {
  switch (m) {
    case Method::kNN: return "nn";
    case Method::kLRC: return "lrc";
    case Method::kDEF: return "def";
    case Method::kORE: return "ore";
    case Method::kORERobust: return "ore-robust";
    case Method::kOREBoost: return "ore-boost";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// config

void ExperimentConfig::validate() const {
  parse_method(method);
  if (d.empty()) throw ConfigError("config: d must list at least one dimension");
  for (int v : d)
    if (v < 1) throw ConfigError("config: dimensions must be positive");
  if (T < 1) throw ConfigError("config: T must be >= 1");
  if (area < 1 || widths.empty()) throw ConfigError("config: invalid patch geometry");
  for (double g : inverse_lambda_grid)
    if (!(g > 0.0)) throw ConfigError("config: inverse lambda candidates must be positive");
  if (q < 0.0 || q > 1.0) throw ConfigError("config: q must lie in [0,1]");
  if (!(epsilon > 0.0)) throw ConfigError("config: epsilon must be positive");
  if (S < 1) throw ConfigError("config: S must be >= 1");
  if (repetitions < 1) throw ConfigError("config: repetitions must be >= 1");
  if (seeds.empty()) throw ConfigError("config: seeds must not be empty");
  if (seeds.size() != 1 && static_cast<int>(seeds.size()) != repetitions)
    throw ConfigError("config: give one seed or one per repetition");
  if (dataset.empty() == !synthetic.has_value())
    throw ConfigError("config: set exactly one of dataset and synthetic");
  if (synthetic) synthetic->validate();
  if (!dataset.empty() && (train_per_class < 2 || test_per_class < 1))
    throw ConfigError("config: invalid split sizes");
  for (int s : occlusion_sizes)
    if (s < 0) throw ConfigError("config: occlusion sizes must be >= 0");
}

std::uint64_t ExperimentConfig::repetition_seed(int rep) const {
  if (static_cast<int>(seeds.size()) == repetitions) return seeds[rep];
  return mix_seed(seeds.front(), static_cast<std::uint64_t>(rep));
}

namespace {

const std::set<std::string> kConfigFields{
    "method",  "d",          "T",          "area",     "widths",          "inverse_lambda_grid",
    "q",       "epsilon",    "S",          "seeds",    "repetitions",     "dataset",
    "synthetic", "train_per_class", "test_per_class", "occlusion_sizes", "output_dir"};
const std::set<std::string> kSynthFields{"K",      "M",          "Phi",            "Q",   "width",
                                         "height", "test_per_class", "noise_sigma", "seed"};

void reject_unknown(const json& j, const std::set<std::string>& fields, const char* what) {
  if (!j.is_object()) throw ConfigError(std::string(what) + ": expected an object");
  for (const auto& [key, _] : j.items())
    if (!fields.count(key)) throw ConfigError(std::string(what) + ": unknown key '" + key + "'");
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["method"] = c.method;
  j["d"] = c.d;
  j["T"] = c.T;
  j["area"] = c.area;
  j["widths"] = c.widths;
  j["inverse_lambda_grid"] = c.inverse_lambda_grid;
  j["q"] = c.q;
  j["epsilon"] = c.epsilon;
  j["S"] = c.S;
  j["seeds"] = c.seeds;
  j["repetitions"] = c.repetitions;
  j["dataset"] = c.dataset;
  if (c.synthetic) {
    const auto& s = *c.synthetic;
    j["synthetic"] = {{"K", s.K},           {"M", s.M},
                      {"Phi", s.Phi},       {"Q", s.Q},
                      {"width", s.width},   {"height", s.height},
                      {"test_per_class", s.test_per_class},
                      {"noise_sigma", s.noise_sigma},
                      {"seed", s.seed}};
  } else {
    j["synthetic"] = nullptr;
  }
  j["train_per_class"] = c.train_per_class;
  j["test_per_class"] = c.test_per_class;
  j["occlusion_sizes"] = c.occlusion_sizes;
  j["output_dir"] = c.output_dir;
  return j.dump(2);
}

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  reject_unknown(j, kConfigFields, "config");
  ExperimentConfig c;
  try {
    read(j, "method", c.method);
    read(j, "d", c.d);
    read(j, "T", c.T);
    read(j, "area", c.area);
    read(j, "widths", c.widths);
    read(j, "inverse_lambda_grid", c.inverse_lambda_grid);
    read(j, "q", c.q);
    read(j, "epsilon", c.epsilon);
    read(j, "S", c.S);
    read(j, "seeds", c.seeds);
    read(j, "repetitions", c.repetitions);
    read(j, "dataset", c.dataset);
    if (j.contains("synthetic") && !j["synthetic"].is_null()) {
      const json& s = j["synthetic"];
      reject_unknown(s, kSynthFields, "config.synthetic");
      SyntheticSpec spec;
      read(s, "K", spec.K);
      read(s, "M", spec.M);
      read(s, "Phi", spec.Phi);
      read(s, "Q", spec.Q);
      read(s, "width", spec.width);
      read(s, "height", spec.height);
      read(s, "test_per_class", spec.test_per_class);
      read(s, "noise_sigma", spec.noise_sigma);
      read(s, "seed", spec.seed);
      c.synthetic = spec;
    }
    read(j, "train_per_class", c.train_per_class);
    read(j, "test_per_class", c.test_per_class);
    read(j, "occlusion_sizes", c.occlusion_sizes);
    read(j, "output_dir", c.output_dir);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return config_from_json(ss.str());
}

// ---------------------------------------------------------------------------
// training

TrainResult train_model(const Dataset& train, const TrainOptions& options) {
  if (train.images.empty()) throw std::invalid_argument("train_model: empty training set");
  if (options.method != Method::kORE && options.method != Method::kORERobust &&
      options.method != Method::kOREBoost)
    throw ConfigError("train_model: not an ORE method");
  const int W = train.images.front().width;
  const int H = train.images.front().height;
  const auto specs = sample_patches(W, H, options.T, options.area, options.widths, options.seed);

  const std::string digest = dataset_digest(train.images);
  const MarginCacheKey key{digest, options.seed, options.d, options.T};
  std::optional<MarginMatrix> cached;
  if (options.margin_cache) cached = load_margin_cache(*options.margin_cache, key);
  MarginMatrix mm = cached ? std::move(*cached) : loo_margin_matrix(train.images, specs, options.d);
  if (options.margin_cache && !cached) save_margin_cache(*options.margin_cache, key, mm);

  std::vector<double> lambdas;
  for (double g : options.inverse_lambda_grid) lambdas.push_back(1.0 / g);
  if (lambdas.empty()) lambdas.push_back(kDefaultLambda);

  TrainResult out;
  EnsembleModel& m = out.model;
  m.method = options.method == Method::kOREBoost ? "ore-boost" : "ore";
  m.d = options.d;
  m.area = options.area;
  m.image_width = W;
  m.image_height = H;
  m.q = options.q;
  m.seed = options.seed;
  m.specs = specs;
  m.class_ids = train.class_names;
  m.training_digest = digest;

  if (options.method == Method::kOREBoost) {
    double best_err = std::numeric_limits<double>::infinity();
    for (double lambda : lambdas) {
      BoostOptions bo;
      bo.lambda = lambda;
      bo.epsilon = options.epsilon;
      bo.max_iterations = options.S;
      BoostResult res = boost(mm, bo);
      const double err = training_error(res.alpha, mm);
      if (err < best_err || (err == best_err && lambda < m.lambda)) {
        best_err = err;
        m.lambda = lambda;
        m.alpha = res.alpha;
        out.curve = res.log;
      }
    }
    out.training_error = best_err;
  } else {
    ModelSelection sel = model_select(mm, lambdas);
    m.lambda = sel.lambda;
    m.alpha = sel.alpha;
    out.training_error = training_error(m.alpha, mm);
  }
  return out;
}

// ---------------------------------------------------------------------------
// experiment

namespace {

struct Split {
  Dataset train;
  Dataset test;
};

Split split_dataset(const Dataset& data, int train_per_class, int test_per_class, std::uint64_t seed) {
  Split s;
  s.train.class_names = data.class_names;
  s.test.class_names = data.class_names;
  std::vector<std::vector<int>> by_class(data.num_classes());
  for (std::size_t i = 0; i < data.images.size(); ++i) by_class[data.images[i].label].push_back(static_cast<int>(i));
  std::mt19937_64 rng(seed);
  for (auto& idx : by_class) {
    if (static_cast<int>(idx.size()) < train_per_class + test_per_class)
      throw ConfigError("dataset: a class has fewer images than train_per_class + test_per_class");
    std::shuffle(idx.begin(), idx.end(), rng);
    // Sort the training part so gallery column order is stable.
    std::sort(idx.begin(), idx.begin() + train_per_class);
    for (int j = 0; j < train_per_class + test_per_class; ++j) {
      FaceImage img = data.images[idx[j]];
      Dataset& dst = j < train_per_class ? s.train : s.test;
      img.sample_index = static_cast<int>(dst.images.size());
      dst.images.push_back(std::move(img));
    }
  }
  return s;
}

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  const Method method = parse_method(config.method);
  std::optional<Dataset> folder;
  if (!config.dataset.empty()) folder = load_dataset(config.dataset, LoadOptions{true});

  std::vector<int> occlusions = config.occlusion_sizes;
  if (occlusions.empty()) occlusions.push_back(0);

  ExperimentReport report;
  for (int rep = 0; rep < config.repetitions; ++rep) {
    const std::uint64_t seed = config.repetition_seed(rep);
    Split data;
    if (folder) {
      data = split_dataset(*folder, config.train_per_class, config.test_per_class, seed);
    } else {
      SyntheticSpec spec = *config.synthetic;
      spec.seed = mix_seed(spec.seed, seed);
      SyntheticData sd = synth_dataset(spec);
      data.train = std::move(sd.train);
      data.test = std::move(sd.test);
    }
    const int W = data.train.images.front().width;
    const int H = data.train.images.front().height;

    for (int d : config.d) {
      // One classifier per (rep, d); probes vary with the occlusion size.
      std::function<int(const FaceImage&)> classify;
      int n_selected = 0;
      EnsembleModel model;
      std::vector<PatchGallery> galleries;
      FeatureSet features;
      std::vector<HatOperator> ops;
      std::optional<ImageFeatures> extractor;
      std::optional<DefClassifier> def;

      switch (method) {
        case Method::kNN:
        case Method::kLRC:
          extractor.emplace(W, H, d, mix_seed(seed, 2));
          features = (*extractor)(data.train.images);
          if (method == Method::kNN) {
            classify = [&](const FaceImage& img) { return nn_classify(features, (*extractor)(img)); };
          } else {
            ops = class_operators(features);
            classify = [&](const FaceImage& img) { return lrc_classify(ops, (*extractor)(img)); };
          }
          break;
        case Method::kDEF:
          def.emplace(BlockPartition{}, data.train.images);
          classify = [&](const FaceImage& img) { return def->classify(img); };
          break;
        case Method::kORE:
        case Method::kORERobust:
        case Method::kOREBoost: {
          TrainOptions to;
          to.method = method;
          to.d = d;
          to.T = config.T;
          to.area = config.area;
          to.widths = config.widths;
          to.inverse_lambda_grid = config.inverse_lambda_grid;
          to.q = config.q;
          to.epsilon = config.epsilon;
          to.S = config.S;
          to.seed = mix_seed(seed, 1);
          TrainResult tr = train_model(data.train, to);
          for (const auto& it : tr.curve) report.curve.push_back({rep, d, it});
          model = std::move(tr.model);
          galleries = build_model_galleries(model, data.train.images);
          n_selected = static_cast<int>(galleries.size());
          if (method == Method::kORERobust) {
            classify = [&](const FaceImage& img) { return predict_robust(model, galleries, img, config.q).label; };
          } else {
            classify = [&](const FaceImage& img) { return predict(model, galleries, img).label; };
          }
          break;
        }
      }

      for (int s : occlusions) {
        int correct = 0;
        double ms = 0.0;
        for (std::size_t i = 0; i < data.test.images.size(); ++i) {
          const FaceImage& clean = data.test.images[i];
          const FaceImage probe =
              s > 0 ? occlude(clean, s, mix_seed(mix_seed(seed, 1000 + static_cast<std::uint64_t>(s)), i))
                    : clean;
          const auto t0 = std::chrono::steady_clock::now();
          const int label = classify(probe);
          ms += elapsed_ms(t0);
          correct += label == clean.label ? 1 : 0;
        }
        const auto n = static_cast<double>(data.test.images.size());
        report.rows.push_back({config.method, d, rep, 100.0 * correct / n, ms / n, n_selected, s});
      }
    }
  }

  std::map<std::pair<int, int>, std::vector<const ResultRow*>> groups;
  for (const auto& r : report.rows) groups[{r.d, r.occlusion}].push_back(&r);
  for (const auto& [key, rows] : groups) {
    SummaryRow s;
    s.method = config.method;
    s.d = key.first;
    s.occlusion = key.second;
    const double n = static_cast<double>(rows.size());
    for (const auto* r : rows) {
      s.mean_accuracy += r->accuracy / n;
      s.mean_ms_per_probe += r->ms_per_probe / n;
      s.mean_selected += r->n_selected / n;
    }
    double ss = 0.0;
    for (const auto* r : rows) ss += (r->accuracy - s.mean_accuracy) * (r->accuracy - s.mean_accuracy);
    s.sd_accuracy = rows.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    report.summary.push_back(s);
  }

  if (!config.output_dir.empty()) {
    std::filesystem::create_directories(config.output_dir);
    write_results_csv(std::filesystem::path(config.output_dir) / "results.csv", report.rows);
    write_curve_csv(std::filesystem::path(config.output_dir) / "boost_curve.csv", report.curve);
  }
  return report;
}

void write_results_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot write " + path.string());
  os << "method,d,rep,accuracy,ms_per_probe,n_selected,occlusion\n";
  os.precision(10);
  for (const auto& r : rows)
    os << r.method << ',' << r.d << ',' << r.rep << ',' << r.accuracy << ',' << r.ms_per_probe << ','
       << r.n_selected << ',' << r.occlusion << '\n';
}

void write_curve_csv(const std::filesystem::path& path, const std::vector<CurveRow>& rows) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot write " + path.string());
  os << "rep,d,iter,t_selected,edge,r,objective,train_err\n";
  os.precision(12);
  for (const auto& c : rows)
    os << c.rep << ',' << c.d << ',' << c.it.iteration << ',' << c.it.t_selected << ',' << c.it.edge << ','
       << c.it.r << ',' << c.it.objective << ',' << c.it.training_error << '\n';
}

// ---------------------------------------------------------------------------
// bench

BenchResult run_bench(const BenchConfig& config) {
  SyntheticSpec spec;
  spec.K = config.K;
  spec.M = config.M;
  spec.Phi = 5;
  spec.Q = 2;
  spec.width = config.width;
  spec.height = config.height;
  spec.test_per_class = std::max(1, (config.probes + config.K - 1) / config.K);
  spec.noise_sigma = 0.02;
  spec.seed = config.seed;
  const SyntheticData data = synth_dataset(spec);

  EnsembleModel model;
  model.d = config.d;
  model.image_width = config.width;
  model.image_height = config.height;
  model.q = config.q;
  model.specs = sample_patches(config.width, config.height, config.selected, kDefaultPatchArea,
                               kDefaultPatchWidths, mix_seed(config.seed, 1));
  model.alpha = Vector::Ones(config.selected);
  const auto galleries = build_model_galleries(model, data.train.images);

  const int n = std::min<int>(config.probes, static_cast<int>(data.test.images.size()));
  BenchResult out;
  out.selected = static_cast<int>(galleries.size());
  int sink = 0;
  auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < n; ++i) sink += predict(model, galleries, data.test.images[i]).label;
  out.ms_per_probe = elapsed_ms(t0) / n;
  t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < n; ++i) sink += predict_robust(model, galleries, data.test.images[i], config.q).label;
  out.ms_per_probe_robust = elapsed_ms(t0) / n;
  if (sink < 0) out.selected = -1;  // keeps the loops observable
  return out;
}

}  // namespace ore
