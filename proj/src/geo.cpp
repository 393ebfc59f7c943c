#include "plantscan/geo.hpp"

#include <Eigen/LU>
#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

namespace plantscan {

void AffineGeoref::validate() const {
  const double det = determinant();
  if (!std::isfinite(det) || det == 0.0) {
    throw GeoError("georeference is singular (A*E - B*D = 0)");
  }
}

Eigen::Vector2d pixel_to_map(double col, double row, const AffineGeoref& g) {
  return {g.a * col + g.b * row + g.c, g.d * col + g.e * row + g.f};
}

Eigen::Vector2d map_to_pixel(double x, double y, const AffineGeoref& g) {
  g.validate();
  return g.linear().inverse() * Eigen::Vector2d(x - g.c, y - g.f);
}

AffineGeoref read_world_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw GeoError("cannot open world file " + path.string());
  double v[6];
  for (double& x : v) {
    if (!(in >> x)) throw GeoError(path.string() + ": world file needs six numbers");
  }
  AffineGeoref g{v[0], v[1], v[2], v[3], v[4], v[5]};
  g.validate();
  return g;
}

void write_world_file(const std::filesystem::path& path, const AffineGeoref& g) {
  std::ofstream out(path);
  if (!out) throw GeoError("cannot write world file " + path.string());
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (double x : {g.a, g.d, g.b, g.e, g.c, g.f}) out << x << '\n';
}

AffineGeoref resampled_georef(const AffineGeoref& g, std::size_t in_h, std::size_t in_w,
                              std::size_t out_h, std::size_t out_w) {
  auto ratio = [](std::size_t in, std::size_t out) {
    return out > 1 ? static_cast<double>(in - 1) / static_cast<double>(out - 1) : 0.0;
  };
  const double sx = ratio(in_w, out_w), sy = ratio(in_h, out_h);
  return {g.a * sx, g.d * sx, g.b * sy, g.e * sy, g.c, g.f};
}

namespace {

Ring parse_ring(const nlohmann::json& coords) {
  if (!coords.is_array()) throw GeoError("GeoJSON ring must be an array of positions");
  Ring ring;
  for (const auto& pos : coords) {
    if (!pos.is_array() || pos.size() < 2 || !pos[0].is_number() || !pos[1].is_number()) {
      throw GeoError("GeoJSON position must be [x, y]");
    }
    ring.emplace_back(pos[0].get<double>(), pos[1].get<double>());
  }
  if (ring.size() > 1 && ring.front() == ring.back()) ring.pop_back();
  if (ring.size() < 3) throw GeoError("degenerate polygon ring with fewer than 3 points");
  return ring;
}

Polygon parse_polygon(const nlohmann::json& coords) {
  if (!coords.is_array() || coords.empty()) throw GeoError("GeoJSON polygon needs rings");
  Polygon poly;
  for (const auto& r : coords) poly.rings.push_back(parse_ring(r));
  return poly;
}

void collect(const nlohmann::json& node, std::vector<Polygon>& out) {
  if (node.is_null()) return;
  if (!node.is_object() || !node.contains("type")) throw GeoError("GeoJSON object without type");
  const auto type = node.at("type").get<std::string>();
  if (type == "FeatureCollection") {
    for (const auto& f : node.at("features")) collect(f, out);
  } else if (type == "Feature") {
    collect(node.value("geometry", nlohmann::json()), out);
  } else if (type == "GeometryCollection") {
    for (const auto& g : node.at("geometries")) collect(g, out);
  } else if (type == "Polygon") {
    out.push_back(parse_polygon(node.at("coordinates")));
  } else if (type == "MultiPolygon") {
    for (const auto& p : node.at("coordinates")) out.push_back(parse_polygon(p));
  }
}

}  // namespace

std::vector<Polygon> parse_geojson_polygons(const nlohmann::json& doc) {
  std::vector<Polygon> out;
  try {
    collect(doc, out);
  } catch (const nlohmann::json::exception& e) {
    throw GeoError(std::string("malformed GeoJSON: ") + e.what());
  }
  return out;
}

std::vector<Polygon> read_geojson_polygons(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw GeoError("cannot open " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw GeoError(path.string() + ": " + e.what());
  }
  return parse_geojson_polygons(doc);
}

bool contains(const Polygon& polygon, const Eigen::Vector2d& p) {
  bool inside = false;
  for (const auto& ring : polygon.rings) {
    const std::size_t n = ring.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const auto& a = ring[i];
      const auto& b = ring[j];
      if ((a.y() > p.y()) != (b.y() > p.y()) &&
          p.x() < (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x()) {
        inside = !inside;
      }
    }
  }
  return inside;
}

Tensor rasterize_mask(const std::vector<Polygon>& polygons, const AffineGeoref& g,
                      std::size_t height, std::size_t width) {
  Tensor mask({height, width, 1});
  if (polygons.empty()) return mask;
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      const auto p = pixel_to_map(static_cast<double>(c), static_cast<double>(r), g);
      for (const auto& poly : polygons) {
        if (contains(poly, p)) {
          mask[r * width + c] = 1.0f;
          break;
        }
      }
    }
  }
  return mask;
}

double ring_area(const Ring& ring) {
  if (ring.empty()) return 0.0;
  // Relative to the first vertex so large map coordinates do not cancel.
  const Eigen::Vector2d o = ring.front();
  double twice = 0.0;
  for (std::size_t i = 0, n = ring.size(); i < n; ++i) {
    const Eigen::Vector2d a = ring[i] - o, b = ring[(i + 1) % n] - o;
    twice += a.x() * b.y() - b.x() * a.y();
  }
  return std::abs(twice) / 2.0;
}

}  // namespace plantscan
