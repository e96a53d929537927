#include "ore/inference.hpp"

#include <cmath>
#include <numeric>

#include "ore/errors.hpp"
#include "ore/parallel.hpp"

namespace ore {

std::vector<PatchGallery> build_model_galleries(const EnsembleModel& model,
                                                const std::vector<FaceImage>& train) {
  std::vector<PatchSpec> specs;
  for (int t : model.selected()) specs.push_back(model.specs[t]);
  if (specs.empty()) throw std::invalid_argument("model has no selected patches");
  return build_galleries(train, specs, model.d);
}

BprOutput evaluate_patch(const PatchGallery& gallery, const FaceImage& probe, bool with_generic) {
  const NormalizedVector y = crop_vectorize(probe, gallery.spec, gallery.projection);
  BprOutput out;
  out.t = gallery.spec.id;
  if (y.degenerate) {
    out.residuals = Vector::Ones(gallery.num_classes());
    if (with_generic) out.generic_residual = 1.0;
  } else {
    out.residuals = patch_residuals(gallery, y.v);
    if (with_generic) out.generic_residual = generic_residual(gallery, y.v);
  }
  out.posterior = bpr_posterior(out.residuals);
  return out;
}

namespace {

void check_inputs(const EnsembleModel& model, const std::vector<PatchGallery>& galleries,
                  const FaceImage& probe, const std::vector<int>& selected) {
  if (selected.empty()) throw std::invalid_argument("predict: model has no selected patches");
  if (probe.width != model.image_width || probe.height != model.image_height)
    throw DimensionError("predict: probe size differs from the training grid");
  if (galleries.size() != selected.size())
    throw DimensionError("predict: one gallery per selected patch required");
  for (std::size_t j = 0; j < selected.size(); ++j)
    if (!(galleries[j].spec == model.specs[selected[j]]))
      throw DimensionError("predict: gallery order does not match the selected patches");
}

Prediction aggregate(const EnsembleModel& model, const std::vector<PatchGallery>& galleries,
                     const FaceImage& probe, bool robust, double q) {
  const auto selected = model.selected();
  check_inputs(model, galleries, probe, selected);
  std::vector<BprOutput> evidence(selected.size());
  for (std::size_t j = 0; j < selected.size(); ++j)
    evidence[j] = evaluate_patch(galleries[j], probe, robust);

  std::vector<double> conf(selected.size(), 1.0);
  if (robust) {
    std::vector<double> generic;
    generic.reserve(evidence.size());
    for (const auto& e : evidence) generic.push_back(*e.generic_residual);
    conf = gfc(generic);
  }

  Prediction p;
  p.xi = Vector::Zero(galleries.front().num_classes());
  for (std::size_t j = 0; j < selected.size(); ++j) {
    const double a = model.alpha(selected[j]);
    const double w = robust ? (a > 0.0 ? std::pow(a, q) : 0.0) * conf[j] : a;
    p.xi += w * evidence[j].posterior;
    p.per_patch.push_back({selected[j], evidence[j].posterior, conf[j]});
  }
  p.label = argmax_lowest(p.xi);
  p.mean_gfc = std::accumulate(conf.begin(), conf.end(), 0.0) / static_cast<double>(conf.size());
  return p;
}

}  // namespace

Prediction predict(const EnsembleModel& model, const std::vector<PatchGallery>& galleries,
                   const FaceImage& probe) {
  return aggregate(model, galleries, probe, false, 1.0);
}

Prediction predict_robust(const EnsembleModel& model, const std::vector<PatchGallery>& galleries,
                          const FaceImage& probe, double q) {
  if (q < 0.0 || q > 1.0) throw std::invalid_argument("predict_robust: q must lie in [0,1]");
  return aggregate(model, galleries, probe, true, q);
}

}  // namespace ore
