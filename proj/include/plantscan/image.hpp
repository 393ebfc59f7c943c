// 8-bit RGB raster I/O (PNG via libpng, binary PPM) and conversion to
// normalized float tensors.
#pragma once

#include "plantscan/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

namespace plantscan {

class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RgbImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // row-major RGB triples
};

RgbImage read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const RgbImage& image);
RgbImage read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const RgbImage& image);

/// Dispatches on the extension (.png or .ppm, case-insensitive).
RgbImage read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const RgbImage& image);
bool is_supported_image(const std::filesystem::path& path);

/// H x W x 3 tensor with values in [0, 1] (byte / 255).
Tensor to_tensor(const RgbImage& image);
/// Inverse of to_tensor for the first three channels, rounding and clamping.
RgbImage from_tensor(const Tensor& pixels);

}  // namespace plantscan
