#include "plantscan/image.hpp"

#include <png.h>

#include <csetjmp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>

namespace plantscan {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw ImageError("cannot open " + path.string());
  return f;
}

// libpng errors longjmp back to the setjmp in the calling function; all
// objects with destructors are constructed before that setjmp.
[[noreturn]] void png_error_handler(png_structp png, png_const_charp msg) {
  auto* message = static_cast<std::string*>(png_get_error_ptr(png));
  if (message) *message = msg;
  png_longjmp(png, 1);
}

void png_warning_handler(png_structp, png_const_charp) {}

std::string lower_extension(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return ext;
}

}  // namespace

RgbImage read_png(const std::filesystem::path& path) {
  auto file = open_file(path, "rb");
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw ImageError(path.string() + ": not a PNG file");
  }
  std::string message;
  RgbImage img;
  std::vector<png_bytep> rows;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, png_error_handler,
                                           png_warning_handler);
  if (!png) throw ImageError("libpng: out of memory");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw ImageError("libpng: out of memory");
  }
  volatile bool layout_ok = true;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ImageError(path.string() + ": " + message);
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const auto color = png_get_color_type(png, info);
  const auto depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  if ((color & PNG_COLOR_MASK_ALPHA) || png_get_valid(png, info, PNG_INFO_tRNS)) {
    png_set_strip_alpha(png);
  }
  png_read_update_info(png, info);
  img.width = png_get_image_width(png, info);
  img.height = png_get_image_height(png, info);
  if (png_get_rowbytes(png, info) == img.width * 3) {
    img.pixels.resize(img.width * img.height * 3);
    rows.resize(img.height);
    for (std::size_t r = 0; r < img.height; ++r) rows[r] = img.pixels.data() + r * img.width * 3;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
  } else {
    layout_ok = false;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  if (!layout_ok) throw ImageError(path.string() + ": unsupported PNG pixel layout");
  return img;
}

void write_png(const std::filesystem::path& path, const RgbImage& img) {
  if (img.pixels.size() != img.width * img.height * 3 || img.width == 0 || img.height == 0) {
    throw ImageError("write_png: inconsistent image buffer");
  }
  auto file = open_file(path, "wb");
  std::string message;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, png_error_handler,
                                            png_warning_handler);
  if (!png) throw ImageError("libpng: out of memory");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw ImageError("libpng: out of memory");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw ImageError(path.string() + ": " + message);
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height),
               8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t r = 0; r < img.height; ++r) {
    png_write_row(png, const_cast<png_bytep>(img.pixels.data() + r * img.width * 3));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

namespace {

// Skips whitespace and '#' comments between PPM header tokens.
std::size_t read_ppm_number(std::istream& in, const std::string& name) {
  int ch = in.peek();
  while (ch != EOF) {
    if (ch == '#') {
      std::string ignored;
      std::getline(in, ignored);
    } else if (std::isspace(ch)) {
      in.get();
    } else {
      break;
    }
    ch = in.peek();
  }
  std::size_t value = 0;
  if (!(in >> value)) throw ImageError(name + ": malformed PPM header");
  return value;
}

}  // namespace

RgbImage read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageError("cannot open " + path.string());
  char magic[2] = {};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '6') {
    throw ImageError(path.string() + ": not a binary PPM (P6) file");
  }
  RgbImage img;
  img.width = read_ppm_number(in, path.string());
  img.height = read_ppm_number(in, path.string());
  const std::size_t maxval = read_ppm_number(in, path.string());
  if (img.width == 0 || img.height == 0 || maxval == 0 || maxval > 255) {
    throw ImageError(path.string() + ": unsupported PPM dimensions or maxval");
  }
  in.get();  // single whitespace byte before the raster
  img.pixels.resize(img.width * img.height * 3);
  in.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
    throw ImageError(path.string() + ": truncated PPM raster");
  }
  if (maxval != 255) {
    for (auto& v : img.pixels) {
      v = static_cast<std::uint8_t>(std::lround(255.0 * std::min<double>(v, maxval) / maxval));
    }
  }
  return img;
}

void write_ppm(const std::filesystem::path& path, const RgbImage& img) {
  if (img.pixels.size() != img.width * img.height * 3) {
    throw ImageError("write_ppm: inconsistent image buffer");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ImageError("cannot open " + path.string());
  out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
}

bool is_supported_image(const std::filesystem::path& path) {
  const auto ext = lower_extension(path);
  return ext == ".png" || ext == ".ppm";
}

RgbImage read_image(const std::filesystem::path& path) {
  const auto ext = lower_extension(path);
  if (ext == ".png") return read_png(path);
  if (ext == ".ppm") return read_ppm(path);
  throw ImageError(path.string() + ": unsupported image format (expected .png or .ppm)");
}

void write_image(const std::filesystem::path& path, const RgbImage& image) {
  const auto ext = lower_extension(path);
  if (ext == ".png") return write_png(path, image);
  if (ext == ".ppm") return write_ppm(path, image);
  throw ImageError(path.string() + ": unsupported image format (expected .png or .ppm)");
}

Tensor to_tensor(const RgbImage& image) {
  Tensor t({image.height, image.width, 3});
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    t[i] = static_cast<float>(image.pixels[i]) / 255.0f;
  }
  return t;
}

RgbImage from_tensor(const Tensor& pixels) {
  detail::require_rank(pixels, 3, "from_tensor");
  RgbImage img{pixels.dim(1), pixels.dim(0), {}};
  img.pixels.resize(img.width * img.height * 3);
  const std::size_t c = pixels.dim(2);
  for (std::size_t p = 0; p < img.width * img.height; ++p) {
    for (std::size_t k = 0; k < 3; ++k) {
      const float v = pixels[p * c + std::min(k, c - 1)];
      img.pixels[p * 3 + k] =
          static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
    }
  }
  return img;
}

}  // namespace plantscan
