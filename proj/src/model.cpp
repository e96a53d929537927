#include "ore/model.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ore/errors.hpp"
#include "ore/learn.hpp"

namespace ore {

using nlohmann::json;

std::vector<int> EnsembleModel::selected() const { return selected_patches(alpha); }

namespace {

const std::set<std::string> kModelFields{
    "version", "method", "d",     "area",  "image_width", "image_height",   "lambda",
    "q",       "seed",   "alpha", "specs", "class_ids",   "training_digest"};
const std::set<std::string> kSpecFields{"id", "x0", "y0", "w", "h", "projection_seed"};

void check_fields(const json& j, const std::set<std::string>& fields, const char* what) {
  if (!j.is_object()) throw FormatError(std::string(what) + ": expected an object");
  for (const auto& [key, _] : j.items())
    if (!fields.count(key)) throw FormatError(std::string(what) + ": unknown field '" + key + "'");
  for (const auto& f : fields)
    if (!j.contains(f)) throw FormatError(std::string(what) + ": missing field '" + f + "'");
}

}  // namespace

std::string model_to_json(const EnsembleModel& m) {
  json j;
  j["version"] = EnsembleModel::kVersion;
  j["method"] = m.method;
  j["d"] = m.d;
  j["area"] = m.area;
  j["image_width"] = m.image_width;
  j["image_height"] = m.image_height;
  j["lambda"] = m.lambda;
  j["q"] = m.q;
  j["seed"] = m.seed;
  j["alpha"] = std::vector<double>(m.alpha.data(), m.alpha.data() + m.alpha.size());
  json specs = json::array();
  for (const auto& s : m.specs) {
    specs.push_back({{"id", s.id},
                     {"x0", s.x0},
                     {"y0", s.y0},
                     {"w", s.w},
                     {"h", s.h},
                     {"projection_seed", s.projection_seed}});
  }
  j["specs"] = std::move(specs);
  j["class_ids"] = m.class_ids;
  j["training_digest"] = m.training_digest;
  return j.dump(2);
}

EnsembleModel model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("model: ") + e.what());
  }
  check_fields(j, kModelFields, "model");
  if (j["version"].get<int>() != EnsembleModel::kVersion)
    throw FormatError("model: unsupported version " + j["version"].dump());
  try {
    EnsembleModel m;
    m.method = j["method"].get<std::string>();
    m.d = j["d"].get<int>();
    m.area = j["area"].get<int>();
    m.image_width = j["image_width"].get<int>();
    m.image_height = j["image_height"].get<int>();
    m.lambda = j["lambda"].get<double>();
    m.q = j["q"].get<double>();
    m.seed = j["seed"].get<std::uint64_t>();
    const auto alpha = j["alpha"].get<std::vector<double>>();
    m.alpha = Eigen::Map<const Vector>(alpha.data(), static_cast<Eigen::Index>(alpha.size()));
    for (const auto& s : j["specs"]) {
      check_fields(s, kSpecFields, "patch spec");
      PatchSpec p;
      p.id = s["id"].get<int>();
      p.x0 = s["x0"].get<int>();
      p.y0 = s["y0"].get<int>();
      p.w = s["w"].get<int>();
      p.h = s["h"].get<int>();
      p.projection_seed = s["projection_seed"].get<std::uint64_t>();
      m.specs.push_back(p);
    }
    m.class_ids = j["class_ids"].get<std::vector<std::string>>();
    m.training_digest = j["training_digest"].get<std::string>();
    if (static_cast<std::size_t>(m.alpha.size()) != m.specs.size())
      throw FormatError("model: alpha and specs differ in length");
    return m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("model: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const EnsembleModel& model) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot write model " + path.string());
  os << model_to_json(model) << '\n';
}

EnsembleModel load_model(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot read model " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace ore
