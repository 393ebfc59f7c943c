#include "plantscan/scan.hpp"

#include "plantscan/dataset.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <thread>

namespace plantscan {

Ring tile_footprint(std::size_t col, std::size_t row, std::size_t tile_size,
                    const AffineGeoref& g) {
  const double c0 = static_cast<double>(col) - 0.5, r0 = static_cast<double>(row) - 0.5;
  const double c1 = c0 + static_cast<double>(tile_size), r1 = r0 + static_cast<double>(tile_size);
  Ring ring{pixel_to_map(c0, r0, g), pixel_to_map(c1, r0, g), pixel_to_map(c1, r1, g),
            pixel_to_map(c0, r1, g)};
  double twice = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& a = ring[i];
    const auto& b = ring[(i + 1) % 4];
    twice += a.x() * b.y() - b.x() * a.y();
  }
  if (twice < 0) std::reverse(ring.begin() + 1, ring.end());
  ring.push_back(ring.front());
  return ring;
}

std::size_t threads_from_env() {
  if (const char* v = std::getenv("PLANTSCAN_THREADS")) {
    char* end = nullptr;
    const auto n = std::strtoull(v, &end, 10);
    if (end != v) return static_cast<std::size_t>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

Tensor crop(const Tensor& image, std::size_t row, std::size_t col, std::size_t size) {
  const std::size_t w = image.dim(1), c = image.dim(2);
  Tensor out({size, size, c});
  for (std::size_t r = 0; r < size; ++r) {
    const float* src = image.data() + ((row + r) * w + col) * c;
    std::copy(src, src + size * c, out.data() + r * size * c);
  }
  return out;
}

}  // namespace

ScanResult scan_raster(const Model& model, const Tensor& raster,
                       const std::optional<AffineGeoref>& georef,
                       const std::optional<Tensor>& mask, const ScanOptions& options) {
  detail::require_rank(raster, 3, "scan_raster");
  const std::size_t h = raster.dim(0), w = raster.dim(1), ts = options.tile_size;
  if (ts == 0 || options.stride == 0) throw std::invalid_argument("scan: tile size and stride must be positive");
  if (h < ts || w < ts) {
    throw std::invalid_argument("scan: raster " + shape_string(raster.shape()) +
                                " is smaller than the tile size " + std::to_string(ts));
  }
  const auto& spec = model.spec();
  if (spec.mask_channel && !mask) throw MissingMaskError("model expects a mask channel; supply a mask");
  if (mask && (mask->dim(0) != h || mask->dim(1) != w)) {
    throw ShapeError("scan: mask " + shape_string(mask->shape()) + " does not cover raster " +
                     shape_string(raster.shape()));
  }
  if (georef) georef->validate();

  struct Job {
    std::size_t row, col;
  };
  std::vector<Job> jobs;
  for (std::size_t r = 0; r + ts <= h; r += options.stride) {
    for (std::size_t c = 0; c + ts <= w; c += options.stride) jobs.push_back({r, c});
  }

  std::vector<std::vector<double>> probs(jobs.size());
  auto classify = [&](std::size_t i) {
    GeoTile tile;
    tile.pixels = crop(raster, jobs[i].row, jobs[i].col, ts);
    if (mask) tile.mask = crop(*mask, jobs[i].row, jobs[i].col, ts);
    const auto p = model.forward(model_input(tile, spec));
    probs[i].assign(p.values().begin(), p.values().end());
  };
  const std::size_t workers = std::min(options.threads, jobs.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) classify(i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < jobs.size(); i += workers) classify(i);
      });
    }
    for (auto& th : pool) th.join();
  }

  ScanResult result;
  result.candidates = jobs.size();
  result.georeferenced = georef.has_value();
  const auto g = georef.value_or(pixel_space_georef());
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto best = static_cast<std::size_t>(
        std::max_element(probs[i].begin(), probs[i].end()) - probs[i].begin());
    if (probs[i][best] < options.threshold) continue;
    result.detections.push_back({jobs[i].col, jobs[i].row, best, spec.class_names[best], probs[i],
                                 tile_footprint(jobs[i].col, jobs[i].row, ts, g)});
  }
  return result;
}

nlohmann::json to_geojson(const ScanResult& result, const ScanOptions& options) {
  using nlohmann::json;
  json features = json::array();
  for (const auto& d : result.detections) {
    json ring = json::array();
    for (const auto& p : d.footprint) ring.push_back({p.x(), p.y()});
    json props = {{"class", d.class_name},
                  {"class_index", d.class_index},
                  {"score", d.probabilities[d.class_index]},
                  {"probabilities", d.probabilities},
                  {"tile_col", d.col},
                  {"tile_row", d.row},
                  {"tile_size", options.tile_size},
                  {"georeferenced", result.georeferenced}};
    if (!result.georeferenced) props["warning"] = "no world file; coordinates are raster pixels";
    features.push_back({{"type", "Feature"},
                        {"geometry", {{"type", "Polygon"}, {"coordinates", {ring}}}},
                        {"properties", props}});
  }
  return {{"type", "FeatureCollection"},
          {"features", features},
          {"properties",
           {{"candidates", result.candidates},
            {"threshold", options.threshold},
            {"stride", options.stride},
            {"georeferenced", result.georeferenced}}}};
}

}  // namespace plantscan
