// Sliding-window classification of a large raster into GeoJSON detections.
#pragma once

#include "plantscan/geo.hpp"
#include "plantscan/network.hpp"

#include <nlohmann/json_fwd.hpp>

#include <optional>

namespace plantscan {

struct ScanOptions {
  std::size_t tile_size = 256;
  std::size_t stride = 256;
  double threshold = 0.5;
  std::size_t threads = 0;  // 0 = serial
};

struct Detection {
  std::size_t col = 0;  // tile origin in raster pixels
  std::size_t row = 0;
  std::size_t class_index = 0;
  std::string class_name;
  std::vector<double> probabilities;
  Ring footprint;  // closed, counter-clockwise
};

struct ScanResult {
  std::size_t candidates = 0;  // tiles evaluated
  std::vector<Detection> detections;
  bool georeferenced = false;
};

/// Footprint of the tile whose top-left pixel is (col, row): pixel corners
/// (center -/+ half a pixel) mapped through `g`, closed and CCW.
Ring tile_footprint(std::size_t col, std::size_t row, std::size_t tile_size,
                    const AffineGeoref& g);

/// Thread count from PLANTSCAN_THREADS; hardware concurrency when unset.
std::size_t threads_from_env();

/// Raster is H x W x 3 in [0, 1]; `mask` (H x W x 1) is required when the
/// model has a mask channel. Without a georef, footprints are in pixel
/// units. Detections come out in row-major tile order.
ScanResult scan_raster(const Model& model, const Tensor& raster,
                       const std::optional<AffineGeoref>& georef,
                       const std::optional<Tensor>& mask, const ScanOptions& options);

nlohmann::json to_geojson(const ScanResult& result, const ScanOptions& options);

}  // namespace plantscan
