// Directory-per-class image datasets, preprocessing, and the procedural
// synthetic dataset used for end-to-end checks.
#pragma once

#include "plantscan/geo.hpp"
#include "plantscan/model_spec.hpp"
#include "plantscan/training.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace plantscan {

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a model expects a mask channel and the tile has none.
class MissingMaskError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GeoTile {
  Tensor pixels;               // H x W x 3 in [0, 1]
  std::optional<Tensor> mask;  // H x W x 1 in {0, 1}
  std::optional<AffineGeoref> georef;
  std::filesystem::path source;
};

enum class Split { train, val, test };
std::string to_string(Split s);
Split parse_split(const std::string& text);

struct SplitFractions {
  double train = 0.7;
  double val = 0.15;
  double test = 0.15;
};

struct LabeledSample {
  GeoTile tile;
  std::size_t label = 0;
  Split split = Split::train;
};

struct LabeledDataset {
  std::vector<std::string> class_names;
  std::vector<LabeledSample> samples;
  std::vector<std::string> warnings;  // one per skipped file
  std::size_t skipped = 0;

  std::size_t count(Split s) const;
};

struct LoadOptions {
  std::size_t height = 256;
  std::size_t width = 256;
};

/// Reads `root/<class>/<image>.{png,ppm}` with optional `<image>.wld` and
/// `<image>.geojson` sidecars. Class index is the lexicographic rank of the
/// directory name. Pixels are resized to the requested size and divided by
/// 255; masks are rasterized at source resolution, resized, and thresholded
/// at 0.5. Split membership comes from one seeded shuffle of all samples.
LabeledDataset load_dataset(const std::filesystem::path& root, const SplitFractions& fractions,
                            std::uint64_t seed, const LoadOptions& options = {});

/// Reads one tile (image plus optional sidecars) and resizes it.
GeoTile load_tile(const std::filesystem::path& image, std::size_t height, std::size_t width,
                  const std::optional<std::filesystem::path>& mask_geojson = std::nullopt,
                  const std::optional<std::filesystem::path>& world_file = std::nullopt);

/// Bilinear resampling with corner pixel centers aligned: output pixel i
/// samples input coordinate i * (in - 1) / (out - 1) (0 when out == 1).
Tensor resize_bilinear(const Tensor& pixels, std::size_t out_h, std::size_t out_w);

/// Pixels plus, when the spec asks for it, the mask as an extra channel.
Tensor model_input(const GeoTile& tile, const ModelSpec& spec);

std::vector<Example> examples(const LabeledDataset& data, Split split, const ModelSpec& spec);

struct SyntheticOptions {
  std::size_t per_class = 40;
  std::size_t size = 64;
  std::vector<std::string> class_names{"BIT", "Hydro", "Natural_Gas", "Solar"};
};

/// Writes four procedural texture classes (stripes, blobs, grid, gradient)
/// as PNG tiles, each with a world file and a GeoJSON polygon outlining the
/// textured region. Same seed, same bytes.
void make_synthetic(const std::filesystem::path& out_dir, std::uint64_t seed,
                    const SyntheticOptions& options = {});

}  // namespace plantscan
