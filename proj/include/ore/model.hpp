#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ore/numerics.hpp"
#include "ore/patch.hpp"

namespace ore {

/// A trained ensemble: patch weights plus everything needed to rebuild the
/// galleries from the training set.
struct EnsembleModel {
  static constexpr int kVersion = 1;

  std::string method = "ore";  // "ore" or "ore-boost"
  int d = 0;
  int area = kDefaultPatchArea;
  int image_width = 0;
  int image_height = 0;
  double lambda = 0.0;
  double q = 0.2;
  std::uint64_t seed = 0;
  Vector alpha;
  std::vector<PatchSpec> specs;
  std::vector<std::string> class_ids;
  std::string training_digest;

  std::vector<int> selected() const;
};

std::string model_to_json(const EnsembleModel& model);
/// Rejects unknown or missing fields and unsupported versions.
EnsembleModel model_from_json(const std::string& text);

void save_model(const std::filesystem::path& path, const EnsembleModel& model);
EnsembleModel load_model(const std::filesystem::path& path);

}  // namespace ore
