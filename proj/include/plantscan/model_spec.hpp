// Declarative description of a classifier architecture.
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace plantscan {

enum class ModelKind { cnn, vit, hybrid };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& text);

struct CnnOptions {
  std::vector<std::size_t> filters{16, 32, 64};  // one conv + 2x2 pool stage each
  std::size_t kernel_size = 3;
  std::size_t dense_units = 256;
};

struct VitOptions {
  std::size_t patch_size = 16;
  std::size_t embed_dim = 64;
  std::size_t heads = 4;
  std::size_t depth = 4;
  std::size_t mlp_hidden = 128;
};

/// The power-plant classes of the reference dataset, in index order.
std::vector<std::string> default_class_names();

struct ModelSpec {
  ModelKind kind = ModelKind::cnn;
  std::size_t height = 256;
  std::size_t width = 256;
  std::size_t channels = 3;
  std::vector<std::string> class_names = default_class_names();
  bool mask_channel = false;
  CnnOptions cnn;
  VitOptions vit;

  std::size_t num_classes() const { return class_names.size(); }
  /// Image channels plus one when a GIS mask channel is appended.
  std::size_t input_channels() const { return channels + (mask_channel ? 1 : 0); }

  /// Throws std::invalid_argument when the architecture cannot be built.
  void validate() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

inline bool operator==(const CnnOptions& a, const CnnOptions& b) {
  return a.filters == b.filters && a.kernel_size == b.kernel_size &&
         a.dense_units == b.dense_units;
}
inline bool operator==(const VitOptions& a, const VitOptions& b) {
  return a.patch_size == b.patch_size && a.embed_dim == b.embed_dim && a.heads == b.heads &&
         a.depth == b.depth && a.mlp_hidden == b.mlp_hidden;
}

/// Sorts names lexicographically; class index is the position in the result.
std::vector<std::string> sorted_class_names(std::vector<std::string> names);

void to_json(nlohmann::json& j, const ModelSpec& spec);
/// Strict: unknown keys are rejected, missing keys keep their defaults.
void from_json(const nlohmann::json& j, ModelSpec& spec);

}  // namespace plantscan
