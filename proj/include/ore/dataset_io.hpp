#pragma once

#include <filesystem>

#include "ore/image.hpp"

namespace ore {

struct LoadOptions {
  /// Truncate every class to the smallest class size instead of rejecting
  /// unequal counts.
  bool truncate_to_min = false;
};

/// Reads `<root>/<class_id>/<file>.pgm|.png`. Classes and files are ordered
/// lexicographically; pixels are scaled to [0,1].
Dataset load_dataset(const std::filesystem::path& root, const LoadOptions& options = {});

FaceImage read_image(const std::filesystem::path& path);
FaceImage read_pgm(const std::filesystem::path& path);
FaceImage read_png(const std::filesystem::path& path);

/// Binary PGM with maxval 255 or 65535.
void write_pgm(const std::filesystem::path& path, const FaceImage& img, int bits = 8);

/// Writes every image to `<root>/<class_name>/<id>.pgm`.
void save_dataset(const std::filesystem::path& root, const Dataset& data, int bits = 8);

}  // namespace ore
