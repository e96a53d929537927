#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ore/dataset_io.hpp"
#include "ore/errors.hpp"
#include "ore/experiment.hpp"
#include "ore/inference.hpp"
#include "ore/model.hpp"
#include "ore/synth.hpp"

namespace fs = std::filesystem;
using namespace ore;

namespace {

struct SynthArgs {
  SyntheticSpec spec;
  std::string out;
  bool seeded = false;
};

struct OccludeArgs {
  std::string in, out;
  int size = 20;
  std::uint64_t seed = 0;
};

struct TrainArgs {
  TrainOptions opts;
  std::string train, out, method = "ore", cache, curve;
  bool no_select = false;
};

struct PredictArgs {
  std::string model, train, probes;
  bool robust = false;
  std::optional<double> q;
};

struct EvalArgs {
  std::string config, output_dir;
};

/// Probes from a class-folder tree or a flat folder of images.
std::vector<FaceImage> load_probes(const fs::path& root, std::vector<std::string>* class_names) {
  bool nested = false;
  for (const auto& e : fs::directory_iterator(root)) nested = nested || e.is_directory();
  if (nested) {
    Dataset d = load_dataset(root, LoadOptions{true});
    *class_names = d.class_names;
    return d.images;
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<FaceImage> out;
  for (const auto& f : files) {
    const std::string ext = f.extension().string();
    if (ext != ".pgm" && ext != ".png" && ext != ".PGM" && ext != ".PNG") continue;
    FaceImage img = read_image(f);
    img.id = f.filename().string();
    img.label = -1;
    out.push_back(std::move(img));
  }
  return out;
}

int run_train(const TrainArgs& a, bool boosting) {
  TrainOptions o = a.opts;
  o.method = boosting ? Method::kOREBoost : parse_method(a.method);
  if (a.no_select) o.inverse_lambda_grid.clear();
  if (!a.cache.empty()) o.margin_cache = a.cache;
  const Dataset train = load_dataset(a.train);
  TrainResult r = train_model(train, o);
  save_model(a.out, r.model);
  std::cout << "lambda " << r.model.lambda << "  training_error " << r.training_error << "  selected "
            << r.model.selected().size() << "/" << r.model.specs.size() << "\n";
  if (boosting && !a.curve.empty()) {
    std::vector<CurveRow> rows;
    for (const auto& it : r.curve) rows.push_back({0, o.d, it});
    write_curve_csv(a.curve, rows);
  }
  return 0;
}

int run_predict(const PredictArgs& a) {
  const EnsembleModel model = load_model(a.model);
  const Dataset train = load_dataset(a.train);
  if (!model.training_digest.empty() && dataset_digest(train.images) != model.training_digest)
    throw ProtocolError("training set does not match the one the model was trained on");
  const auto galleries = build_model_galleries(model, train.images);
  std::vector<std::string> probe_classes;
  const auto probes = load_probes(a.probes, &probe_classes);
  const double q = a.q.value_or(model.q);

  int correct = 0, labelled = 0;
  for (const auto& p : probes) {
    const Prediction pr = a.robust ? predict_robust(model, galleries, p, q) : predict(model, galleries, p);
    std::vector<int> order(pr.xi.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int i, int j) { return pr.xi(i) > pr.xi(j); });
    std::cout << p.id << '\t' << model.class_ids.at(pr.label);
    for (std::size_t k = 0; k < std::min<std::size_t>(3, order.size()); ++k)
      std::cout << '\t' << model.class_ids[order[k]] << ':' << pr.xi(order[k]);
    std::cout << '\t' << pr.mean_gfc << '\n';
    if (p.label >= 0) {
      ++labelled;
      correct += probe_classes.at(p.label) == model.class_ids[pr.label] ? 1 : 0;
    }
  }
  if (labelled > 0)
    std::cerr << "accuracy " << 100.0 * correct / labelled << "% (" << correct << "/" << labelled << ")\n";
  return 0;
}

int run_eval(const EvalArgs& a) {
  ExperimentConfig c = load_config(a.config);
  if (!a.output_dir.empty()) c.output_dir = a.output_dir;
  const ExperimentReport rep = run_experiment(c);
  std::printf("%-10s %5s %5s %10s %8s %12s %10s\n", "method", "d", "occl", "accuracy", "sd", "ms/probe",
              "selected");
  for (const auto& s : rep.summary)
    std::printf("%-10s %5d %5d %10.2f %8.2f %12.3f %10.1f\n", s.method.c_str(), s.d, s.occlusion,
                s.mean_accuracy, s.sd_accuracy, s.mean_ms_per_probe, s.mean_selected);
  return 0;
}

void add_train_flags(CLI::App* cmd, TrainArgs& a) {
  cmd->add_option("--train", a.train, "training set folder")->required()->check(CLI::ExistingDirectory);
  cmd->add_option("--out", a.out, "model file (JSON)")->required();
  cmd->add_option("--seed", a.opts.seed, "patch sampling seed")->required();
  cmd->add_option("--d", a.opts.d, "projected patch dimension");
  cmd->add_option("--T", a.opts.T, "number of sampled patches");
  cmd->add_option("--area", a.opts.area, "patch area in pixels");
  cmd->add_option("--widths", a.opts.widths, "candidate patch widths");
  cmd->add_option("--inverse-lambda", a.opts.inverse_lambda_grid, "candidate values of 1/lambda");
  cmd->add_flag("--no-select", a.no_select, "skip model selection and use lambda = 1e5");
  cmd->add_option("--q", a.opts.q, "weight fading exponent stored in the model");
  cmd->add_option("--margin-cache", a.cache, "margin matrix cache file");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal representation ensemble face recognition"};
  app.require_subcommand(1);

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "generate a synthetic union-of-subspaces dataset");
  synth->add_option("--out", sa.out, "output folder (train/ and test/ are created)")->required();
  synth->add_option("--seed", sa.spec.seed)->required();
  synth->add_option("--K", sa.spec.K, "classes");
  synth->add_option("--M", sa.spec.M, "training images per class");
  synth->add_option("--phi", sa.spec.Phi, "basis images per surface");
  synth->add_option("--surfaces", sa.spec.Q, "surfaces per class");
  synth->add_option("--width", sa.spec.width);
  synth->add_option("--height", sa.spec.height);
  synth->add_option("--test-per-class", sa.spec.test_per_class);
  synth->add_option("--noise", sa.spec.noise_sigma, "Gaussian noise sd");

  OccludeArgs oa;
  auto* occ = app.add_subcommand("occlude", "add square noise blocks to every image of a folder tree");
  occ->add_option("--in", oa.in)->required()->check(CLI::ExistingDirectory);
  occ->add_option("--out", oa.out)->required();
  occ->add_option("--size", oa.size, "block side in pixels");
  occ->add_option("--seed", oa.seed)->required();

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "learn patch weights on leave-one-out margins");
  add_train_flags(train, ta);
  train->add_option("--method", ta.method, "ore or ore-robust");

  TrainArgs ba;
  auto* boost_cmd = app.add_subcommand("boost", "learn patch weights by column generation");
  add_train_flags(boost_cmd, ba);
  boost_cmd->add_option("--epsilon", ba.opts.epsilon, "stopping tolerance on the edge");
  boost_cmd->add_option("--S", ba.opts.S, "maximum boosting iterations");
  boost_cmd->add_option("--curve", ba.curve, "write the per-iteration log as CSV");

  PredictArgs pa;
  auto* pred = app.add_subcommand("predict", "classify probe images");
  pred->add_option("--model", pa.model)->required()->check(CLI::ExistingFile);
  pred->add_option("--train", pa.train, "training set the model was learned on")
      ->required()
      ->check(CLI::ExistingDirectory);
  pred->add_option("--probes", pa.probes)->required()->check(CLI::ExistingDirectory);
  pred->add_flag("--robust", pa.robust, "confidence-weighted aggregation");
  pred->add_option("--q", pa.q, "weight fading exponent (default: the model's)");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "run an experiment described by a JSON config");
  eval->add_option("--config", ea.config)->required()->check(CLI::ExistingFile);
  eval->add_option("--output-dir", ea.output_dir, "overrides output_dir of the config");

  BenchConfig bc;
  auto* bench = app.add_subcommand("bench", "time predict on a synthetic gallery");
  bench->add_option("--seed", bc.seed)->required();
  bench->add_option("--K", bc.K);
  bench->add_option("--M", bc.M);
  bench->add_option("--width", bc.width);
  bench->add_option("--height", bc.height);
  bench->add_option("--selected", bc.selected, "number of selected patches");
  bench->add_option("--d", bc.d);
  bench->add_option("--probes", bc.probes);
  bench->add_option("--q", bc.q);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      const SyntheticData data = synth_dataset(sa.spec);
      save_dataset(fs::path(sa.out) / "train", data.train);
      save_dataset(fs::path(sa.out) / "test", data.test);
      std::cout << data.train.images.size() << " training and " << data.test.images.size()
                << " test images written to " << sa.out << "\n";
    } else if (*occ) {
      Dataset d = load_dataset(oa.in, LoadOptions{true});
      for (auto& img : d.images) img = occlude(img, oa.size, mix_seed(oa.seed, img.sample_index));
      save_dataset(oa.out, d);
      std::cout << d.images.size() << " images occluded with "
                << occlusion_block_count(d.images.front().width, d.images.front().height, oa.size)
                << " blocks each\n";
    } else if (*train) {
      return run_train(ta, false);
    } else if (*boost_cmd) {
      return run_train(ba, true);
    } else if (*pred) {
      return run_predict(pa);
    } else if (*eval) {
      return run_eval(ea);
    } else if (*bench) {
      const BenchResult r = run_bench(bc);
      std::printf("selected %d  d %d  predict %.3f ms/probe  predict_robust %.3f ms/probe\n", r.selected, bc.d,
                  r.ms_per_probe, r.ms_per_probe_robust);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
