#include "plantscan/dataset.hpp"

#include "plantscan/image.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <numbers>

namespace plantscan {

namespace fs = std::filesystem;

std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "unknown";
}

Split parse_split(const std::string& text) {
  if (text == "train") return Split::train;
  if (text == "val" || text == "validation") return Split::val;
  if (text == "test") return Split::test;
  throw std::invalid_argument("unknown split '" + text + "' (expected train, val or test)");
}

std::size_t LabeledDataset::count(Split s) const {
  return static_cast<std::size_t>(
      std::count_if(samples.begin(), samples.end(), [s](const auto& x) { return x.split == s; }));
}

Tensor resize_bilinear(const Tensor& pixels, std::size_t out_h, std::size_t out_w) {
  detail::require_rank(pixels, 3, "resize_bilinear");
  if (out_h == 0 || out_w == 0) throw std::invalid_argument("resize_bilinear: empty target");
  const std::size_t in_h = pixels.dim(0), in_w = pixels.dim(1), ch = pixels.dim(2);
  if (in_h == out_h && in_w == out_w) return pixels;
  auto scale = [](std::size_t in, std::size_t out) {
    return out > 1 ? static_cast<double>(in - 1) / static_cast<double>(out - 1) : 0.0;
  };
  const double sy = scale(in_h, out_h), sx = scale(in_w, out_w);
  Tensor out({out_h, out_w, ch});
  for (std::size_t r = 0; r < out_h; ++r) {
    const double y = static_cast<double>(r) * sy;
    const auto y0 = std::min(static_cast<std::size_t>(y), in_h - 1);
    const std::size_t y1 = std::min(y0 + 1, in_h - 1);
    const double fy = y - static_cast<double>(y0);
    for (std::size_t c = 0; c < out_w; ++c) {
      const double x = static_cast<double>(c) * sx;
      const auto x0 = std::min(static_cast<std::size_t>(x), in_w - 1);
      const std::size_t x1 = std::min(x0 + 1, in_w - 1);
      const double fx = x - static_cast<double>(x0);
      for (std::size_t k = 0; k < ch; ++k) {
        const double v00 = pixels(y0, x0, k), v01 = pixels(y0, x1, k);
        const double v10 = pixels(y1, x0, k), v11 = pixels(y1, x1, k);
        const double top = v00 + (v01 - v00) * fx;
        const double bottom = v10 + (v11 - v10) * fx;
        out(r, c, k) = static_cast<float>(top + (bottom - top) * fy);
      }
    }
  }
  return out;
}

GeoTile load_tile(const fs::path& image, std::size_t height, std::size_t width,
                  const std::optional<fs::path>& mask_geojson,
                  const std::optional<fs::path>& world_file) {
  const auto raw = read_image(image);
  GeoTile tile;
  tile.source = image;
  tile.pixels = resize_bilinear(to_tensor(raw), height, width);

  auto wld = world_file;
  if (!wld) {
    auto sidecar = fs::path(image).replace_extension(".wld");
    if (fs::exists(sidecar)) wld = sidecar;
  }
  if (wld) tile.georef = read_world_file(*wld);

  auto geojson = mask_geojson;
  if (!geojson) {
    auto sidecar = fs::path(image).replace_extension(".geojson");
    if (fs::exists(sidecar)) geojson = sidecar;
  }
  if (geojson) {
    const auto polygons = read_geojson_polygons(*geojson);
    const auto g = tile.georef.value_or(pixel_space_georef());
    auto mask = rasterize_mask(polygons, g, raw.height, raw.width);
    mask = resize_bilinear(mask, height, width);
    for (auto& v : mask.values()) v = v >= 0.5f ? 1.0f : 0.0f;
    tile.mask = std::move(mask);
  }
  if (tile.georef) {
    tile.georef = resampled_georef(*tile.georef, raw.height, raw.width, height, width);
  }
  return tile;
}

LabeledDataset load_dataset(const fs::path& root, const SplitFractions& fractions,
                            std::uint64_t seed, const LoadOptions& options) {
  if (!fs::is_directory(root)) throw DatasetError("dataset root " + root.string() + " is not a directory");
  const double total = fractions.train + fractions.val + fractions.test;
  if (fractions.train < 0 || fractions.val < 0 || fractions.test < 0 ||
      std::abs(total - 1.0) > 1e-6) {
    throw DatasetError("split fractions must be non-negative and sum to 1");
  }

  LabeledDataset data;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) data.class_names.push_back(entry.path().filename().string());
  }
  std::sort(data.class_names.begin(), data.class_names.end());
  if (data.class_names.empty()) throw DatasetError(root.string() + " contains no class directories");

  for (std::size_t label = 0; label < data.class_names.size(); ++label) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(root / data.class_names[label])) {
      if (entry.is_regular_file() && is_supported_image(entry.path())) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      try {
        data.samples.push_back({load_tile(file, options.height, options.width), label, Split::train});
      } catch (const std::exception& e) {
        ++data.skipped;
        data.warnings.push_back("skipped " + file.string() + ": " + e.what());
      }
    }
  }

  const std::size_t n = data.samples.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  const auto n_train = static_cast<std::size_t>(std::llround(fractions.train * static_cast<double>(n)));
  const auto n_val = std::min(
      n - n_train, static_cast<std::size_t>(std::llround(fractions.val * static_cast<double>(n))));
  for (std::size_t i = 0; i < n; ++i) {
    data.samples[order[i]].split = i < n_train ? Split::train
                                   : i < n_train + n_val ? Split::val
                                                         : Split::test;
  }
  return data;
}

Tensor model_input(const GeoTile& tile, const ModelSpec& spec) {
  Tensor pixels = tile.pixels;
  if (pixels.dim(0) != spec.height || pixels.dim(1) != spec.width) {
    pixels = resize_bilinear(pixels, spec.height, spec.width);
  }
  if (!spec.mask_channel) return pixels;
  if (!tile.mask) {
    throw MissingMaskError("model expects a mask channel but " +
                           (tile.source.empty() ? std::string("the tile") : tile.source.string()) +
                           " has no mask");
  }
  Tensor mask = *tile.mask;
  if (mask.dim(0) != spec.height || mask.dim(1) != spec.width) {
    mask = resize_bilinear(mask, spec.height, spec.width);
    for (auto& v : mask.values()) v = v >= 0.5f ? 1.0f : 0.0f;
  }
  const std::size_t c = pixels.dim(2);
  Tensor out({spec.height, spec.width, c + 1});
  for (std::size_t p = 0; p < spec.height * spec.width; ++p) {
    std::copy(pixels.data() + p * c, pixels.data() + (p + 1) * c, out.data() + p * (c + 1));
    out[p * (c + 1) + c] = mask[p];
  }
  return out;
}

std::vector<Example> examples(const LabeledDataset& data, Split split, const ModelSpec& spec) {
  std::vector<Example> out;
  for (const auto& s : data.samples) {
    if (s.split == split) out.push_back({model_input(s.tile, spec), s.label});
  }
  return out;
}

namespace {

struct Color {
  double r, g, b;
};

// Textured region, in pixel units.
struct Region {
  double x0, y0, x1, y1;
  bool contains(double x, double y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
};

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// Returns intensity in [0, 1] of the class texture at (x, y) inside `region`.
struct Texture {
  std::size_t kind;
  double period, phase, angle;
  std::vector<std::array<double, 3>> blobs;  // cx, cy, radius

  double at(double x, double y, const Region& region) const {
    const double u = x - region.x0, v = y - region.y0;
    switch (kind) {
      case 0:  // stripes
        return 0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * v / period + phase);
      case 1: {  // blobs
        for (const auto& b : blobs) {
          const double dx = x - b[0], dy = y - b[1];
          if (dx * dx + dy * dy <= b[2] * b[2]) return 1.0;
        }
        return 0.15;
      }
      case 2: {  // grid
        const double fu = std::fmod(u + phase, period), fv = std::fmod(v + phase, period);
        return (fu < 1.5 || fv < 1.5) ? 1.0 : 0.1;
      }
      default: {  // gradient
        const double w = region.x1 - region.x0, h = region.y1 - region.y0;
        const double t = (u / w) * std::cos(angle) + (v / h) * std::sin(angle);
        return clamp01(0.5 + 0.5 * t);
      }
    }
  }
};

const Color kClassTint[4] = {{0.35, 0.25, 0.15}, {0.2, 0.4, 0.8}, {0.75, 0.7, 0.3}, {0.3, 0.3, 0.45}};

void write_mask_geojson(const fs::path& path, const Region& region, const AffineGeoref& g) {
  nlohmann::json ring = nlohmann::json::array();
  // Region edges are pixel edges; pixel centers sit at integer coordinates.
  const double corners[5][2] = {{region.x0, region.y0}, {region.x0, region.y1},
                                {region.x1, region.y1}, {region.x1, region.y0},
                                {region.x0, region.y0}};
  for (const auto& c : corners) {
    const auto p = pixel_to_map(c[0] - 0.5, c[1] - 0.5, g);
    ring.push_back({p.x(), p.y()});
  }
  nlohmann::json doc = {
      {"type", "FeatureCollection"},
      {"features",
       {{{"type", "Feature"},
         {"properties", {{"role", "plant_footprint"}}},
         {"geometry", {{"type", "Polygon"}, {"coordinates", {ring}}}}}}}};
  std::ofstream out(path);
  out << doc.dump(2) << '\n';
}

}  // namespace

void make_synthetic(const fs::path& out_dir, std::uint64_t seed, const SyntheticOptions& options) {
  if (options.size < 8) throw DatasetError("synthetic tiles must be at least 8 pixels");
  const std::size_t s = options.size;
  Rng rng(seed);
  for (std::size_t k = 0; k < options.class_names.size(); ++k) {
    const auto dir = out_dir / options.class_names[k];
    fs::create_directories(dir);
    for (std::size_t i = 0; i < options.per_class; ++i) {
      const double size = static_cast<double>(s);
      const double w = size * rng.uniform(0.5, 0.85), h = size * rng.uniform(0.5, 0.85);
      Region region;
      region.x0 = std::floor(rng.uniform(0.0, size - w));
      region.y0 = std::floor(rng.uniform(0.0, size - h));
      region.x1 = region.x0 + std::round(w);
      region.y1 = region.y0 + std::round(h);

      Texture tex{k % 4, rng.uniform(4.0, 8.0), rng.uniform(0.0, 2.0 * std::numbers::pi),
                  rng.uniform(0.0, 2.0 * std::numbers::pi), {}};
      if (tex.kind == 1) {
        const auto count = 3 + rng.below(4);
        for (std::size_t b = 0; b < count; ++b) {
          tex.blobs.push_back({rng.uniform(region.x0, region.x1), rng.uniform(region.y0, region.y1),
                               rng.uniform(0.07, 0.15) * size});
        }
      }
      const Color tint = kClassTint[k % 4];
      const double jitter = rng.uniform(-0.08, 0.08);
      const Color bg{rng.uniform(0.3, 0.6), rng.uniform(0.3, 0.6), rng.uniform(0.3, 0.6)};

      RgbImage img{s, s, std::vector<std::uint8_t>(s * s * 3)};
      for (std::size_t y = 0; y < s; ++y) {
        for (std::size_t x = 0; x < s; ++x) {
          const double px = static_cast<double>(x) + 0.5, py = static_cast<double>(y) + 0.5;
          const double noise = rng.uniform(-0.05, 0.05);
          Color c = bg;
          if (region.contains(px, py)) {
            const double t = tex.at(px, py, region);
            c = {tint.r * (0.4 + 0.8 * t), tint.g * (0.4 + 0.8 * t), tint.b * (0.4 + 0.8 * t)};
          }
          const double rgb[3] = {c.r + jitter + noise, c.g + jitter + noise, c.b + jitter + noise};
          for (std::size_t ch = 0; ch < 3; ++ch) {
            img.pixels[(y * s + x) * 3 + ch] =
                static_cast<std::uint8_t>(std::lround(clamp01(rgb[ch]) * 255.0));
          }
        }
      }

      // Half-metre pixels somewhere in a projected grid.
      const AffineGeoref g{0.5, 0.0, 0.0, -0.5,
                           500000.0 + 100.0 * static_cast<double>(i) + 0.25,
                           4500000.0 - 100.0 * static_cast<double>(k) - 0.25};
      char stem[32];
      std::snprintf(stem, sizeof stem, "tile_%04zu", i);
      write_png(dir / (std::string(stem) + ".png"), img);
      write_world_file(dir / (std::string(stem) + ".wld"), g);
      write_mask_geojson(dir / (std::string(stem) + ".geojson"), region, g);
    }
  }
}

}  // namespace plantscan
