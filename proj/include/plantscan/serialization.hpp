// PPDM model files:
//   "PPDM" | u32 LE version (1) | u64 LE header length | UTF-8 JSON header |
//   each tensor as little-endian float32, in header order, no padding.
// The header holds the model spec, class names, the ordered tensor list
// ({name, shape}) and the total parameter count.
#pragma once

#include "plantscan/network.hpp"

#include <filesystem>
#include <iosfwd>
#include <stdexcept>

namespace plantscan {

inline constexpr char kModelMagic[4] = {'P', 'P', 'D', 'M'};
inline constexpr std::uint32_t kModelFormatVersion = 1;

class ModelFileError : public std::runtime_error {
 public:
  enum class Kind { io, bad_magic, version_mismatch, malformed_header, truncated, count_mismatch };

  ModelFileError(Kind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

std::string to_string(ModelFileError::Kind kind);

void save_model(const Model& model, std::ostream& out);
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(std::istream& in);
Model load_model(const std::filesystem::path& path);

}  // namespace plantscan
