// World-file georeferencing and vector-to-raster mask generation.
#pragma once

#include "plantscan/tensor.hpp"

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include <filesystem>
#include <stdexcept>
#include <vector>

namespace plantscan {

class GeoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// ESRI world-file affine transform. (c, f) is the map position of the
/// CENTER of pixel (0, 0):
///   x = a*col + b*row + c
///   y = d*col + e*row + f
struct AffineGeoref {
  double a = 1.0, d = 0.0, b = 0.0, e = 1.0, c = 0.0, f = 0.0;

  double determinant() const { return a * e - b * d; }
  Eigen::Matrix2d linear() const {
    Eigen::Matrix2d m;
    m << a, b, d, e;
    return m;
  }
  /// Throws GeoError when the linear part is singular.
  void validate() const;

  friend bool operator==(const AffineGeoref&, const AffineGeoref&) = default;
};

/// Unit pixels with edges on integers: pixel (col, row) covers
/// [col, col+1] x [row, row+1]. Used whenever no world file is present.
inline AffineGeoref pixel_space_georef() { return {1.0, 0.0, 0.0, 1.0, 0.5, 0.5}; }

Eigen::Vector2d pixel_to_map(double col, double row, const AffineGeoref& g);
Eigen::Vector2d map_to_pixel(double x, double y, const AffineGeoref& g);

/// Six lines: A, D, B, E, C, F.
AffineGeoref read_world_file(const std::filesystem::path& path);
void write_world_file(const std::filesystem::path& path, const AffineGeoref& g);

/// Georef of the same footprint after resampling to a new grid with corner
/// pixel centers kept aligned (the bilinear resize convention).
AffineGeoref resampled_georef(const AffineGeoref& g, std::size_t in_h, std::size_t in_w,
                              std::size_t out_h, std::size_t out_w);

using Ring = std::vector<Eigen::Vector2d>;

/// First ring is the outer boundary, the rest are holes.
struct Polygon {
  std::vector<Ring> rings;
};

/// Accepts a FeatureCollection, Feature, Polygon, MultiPolygon or
/// GeometryCollection; other geometry types are ignored. Rings with fewer
/// than three distinct points are rejected.
std::vector<Polygon> parse_geojson_polygons(const nlohmann::json& doc);
std::vector<Polygon> read_geojson_polygons(const std::filesystem::path& path);

/// Even-odd test against all rings of one polygon.
bool contains(const Polygon& polygon, const Eigen::Vector2d& p);

/// H x W x 1 mask: 1 where the pixel center, mapped through `g`, lies
/// inside any polygon.
Tensor rasterize_mask(const std::vector<Polygon>& polygons, const AffineGeoref& g,
                      std::size_t height, std::size_t width);

/// Shoelace area of a closed or open ring.
double ring_area(const Ring& ring);

}  // namespace plantscan
