#pragma once

#include <vector>

#include "ore/bpr.hpp"
#include "ore/model.hpp"
#include "ore/patch.hpp"

namespace ore {

struct PatchEvidence {
  int t = 0;
  Vector posterior;
  double gfc = 1.0;
};

struct Prediction {
  int label = 0;
  Vector xi;
  std::vector<PatchEvidence> per_patch;
  double mean_gfc = 1.0;
};

/// Galleries for the model's selected patches, in model.selected() order.
std::vector<PatchGallery> build_model_galleries(const EnsembleModel& model,
                                                const std::vector<FaceImage>& train);

/// Evidence of one probe patch. Degenerate (zero-norm) patches are treated as
/// maximally non-represented: every residual, including the generic one, is 1.
BprOutput evaluate_patch(const PatchGallery& gallery, const FaceImage& probe, bool with_generic);

/// xi = sum_t alpha_t b_t over the selected patches; label = argmax xi.
Prediction predict(const EnsembleModel& model, const std::vector<PatchGallery>& galleries,
                   const FaceImage& probe);

/// xi = sum_t alpha_t^q GFC_t b_t, GFC computed from the selected patches of
/// this probe.
Prediction predict_robust(const EnsembleModel& model, const std::vector<PatchGallery>& galleries,
                          const FaceImage& probe, double q);

}  // namespace ore
