#include "ore/dataset_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>

#include "ore/errors.hpp"

namespace fs = std::filesystem;

namespace ore {

namespace {

std::string lower_ext(const fs::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return e;
}

/// Next whitespace-delimited header token, skipping '#' comments.
std::string pgm_token(std::istream& is) {
  std::string tok;
  int c;
  while ((c = is.get()) != EOF) {
    if (c == '#') {
      while ((c = is.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

int pgm_int(std::istream& is, const fs::path& path) {
  const std::string tok = pgm_token(is);
  try {
    return std::stoi(tok);
  } catch (const std::exception&) {
    throw FormatError("bad PGM header in " + path.string());
  }
}

}  // namespace

FaceImage read_pgm(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  const std::string magic = pgm_token(is);
  if (magic != "P5" && magic != "P2") throw FormatError("not a PGM file: " + path.string());
  FaceImage img;
  img.width = pgm_int(is, path);
  img.height = pgm_int(is, path);
  const int maxval = pgm_int(is, path);
  if (img.width <= 0 || img.height <= 0 || maxval <= 0 || maxval > 65535)
    throw FormatError("bad PGM header in " + path.string());
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  img.pixels.resize(n);
  if (magic == "P2") {
    for (auto& p : img.pixels) p = static_cast<double>(pgm_int(is, path)) / maxval;
  } else if (maxval < 256) {
    std::vector<unsigned char> raw(n);
    is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n));
    if (!is) throw FormatError("truncated PGM " + path.string());
    for (std::size_t i = 0; i < n; ++i) img.pixels[i] = static_cast<double>(raw[i]) / maxval;
  } else {
    std::vector<unsigned char> raw(2 * n);
    is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(2 * n));
    if (!is) throw FormatError("truncated PGM " + path.string());
    for (std::size_t i = 0; i < n; ++i)
      img.pixels[i] = static_cast<double>((raw[2 * i] << 8) | raw[2 * i + 1]) / maxval;
  }
  for (double p : img.pixels)
    if (p > 1.0) throw FormatError("PGM sample exceeds maxval in " + path.string());
  return img;
}

FaceImage read_png(const fs::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str()))
    throw FormatError("cannot read PNG " + path.string() + ": " + image.message);
  image.format = PNG_FORMAT_GRAY;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    throw FormatError("cannot decode PNG " + path.string() + ": " + image.message);
  }
  FaceImage img;
  img.width = static_cast<int>(image.width);
  img.height = static_cast<int>(image.height);
  img.pixels.resize(buffer.size());
  for (std::size_t i = 0; i < buffer.size(); ++i) img.pixels[i] = buffer[i] / 255.0;
  return img;
}

FaceImage read_image(const fs::path& path) {
  const std::string ext = lower_ext(path);
  if (ext == ".pgm") return read_pgm(path);
  if (ext == ".png") return read_png(path);
  throw FormatError("unsupported image type: " + path.string());
}

void write_pgm(const fs::path& path, const FaceImage& img, int bits) {
  if (bits != 8 && bits != 16) throw std::invalid_argument("write_pgm: bits must be 8 or 16");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot write " + path.string());
  const int maxval = bits == 8 ? 255 : 65535;
  os << "P5\n" << img.width << ' ' << img.height << '\n' << maxval << '\n';
  for (double p : img.pixels) {
    const auto v = static_cast<unsigned>(std::lround(std::clamp(p, 0.0, 1.0) * maxval));
    if (bits == 16) os.put(static_cast<char>(v >> 8));
    os.put(static_cast<char>(v & 0xff));
  }
}

Dataset load_dataset(const fs::path& root, const LoadOptions& options) {
  if (!fs::is_directory(root)) throw FormatError("dataset root is not a directory: " + root.string());
  std::vector<fs::path> class_dirs;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory()) class_dirs.push_back(e.path());
  std::sort(class_dirs.begin(), class_dirs.end());
  if (class_dirs.empty()) throw FormatError("no class folders under " + root.string());

  Dataset data;
  std::vector<std::vector<FaceImage>> per_class;
  for (const auto& dir : class_dirs) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
      const std::string ext = lower_ext(e.path());
      if (e.is_regular_file() && (ext == ".pgm" || ext == ".png")) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw FormatError("class folder has no images: " + dir.string());
    const int label = static_cast<int>(data.class_names.size());
    data.class_names.push_back(dir.filename().string());
    std::vector<FaceImage> imgs;
    for (const auto& f : files) {
      FaceImage img = read_image(f);
      img.label = label;
      img.id = dir.filename().string() + "/" + f.filename().string();
      imgs.push_back(std::move(img));
    }
    per_class.push_back(std::move(imgs));
  }

  std::size_t min_count = per_class.front().size();
  bool equal = true;
  for (const auto& c : per_class) {
    equal = equal && c.size() == per_class.front().size();
    min_count = std::min(min_count, c.size());
  }
  if (!equal && !options.truncate_to_min)
    throw FormatError("classes have unequal image counts (use truncation to the minimum)");

  const int width = per_class.front().front().width;
  const int height = per_class.front().front().height;
  for (auto& c : per_class) {
    c.resize(min_count);
    for (auto& img : c) {
      if (img.width != width || img.height != height)
        throw FormatError("mixed image dimensions at " + img.id);
      img.sample_index = static_cast<int>(data.images.size());
      data.images.push_back(std::move(img));
    }
  }
  return data;
}

void save_dataset(const fs::path& root, const Dataset& data, int bits) {
  for (const auto& img : data.images) {
    const fs::path dir = root / data.class_names.at(img.label);
    fs::create_directories(dir);
    const std::string name =
        img.id.empty() ? std::to_string(img.sample_index) : fs::path(img.id).stem().string();
    write_pgm(dir / (name + ".pgm"), img, bits);
  }
}

}  // namespace ore
