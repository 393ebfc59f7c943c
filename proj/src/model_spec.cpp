#include "plantscan/model_spec.hpp"

#include "plantscan/json_util.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>
#include <set>

namespace plantscan {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::cnn: return "cnn";
    case ModelKind::vit: return "vit";
    case ModelKind::hybrid: return "hybrid";
  }
  return "unknown";
}

ModelKind parse_model_kind(const std::string& text) {
  if (text == "cnn") return ModelKind::cnn;
  if (text == "vit") return ModelKind::vit;
  if (text == "hybrid") return ModelKind::hybrid;
  throw std::invalid_argument("unknown model kind '" + text + "' (expected cnn, vit or hybrid)");
}

std::vector<std::string> default_class_names() {
  return {"BIT", "Hydro", "Natural Gas", "Solar"};
}

std::vector<std::string> sorted_class_names(std::vector<std::string> names) {
  std::sort(names.begin(), names.end());
  return names;
}

void ModelSpec::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("model spec: " + msg); };
  if (height == 0 || width == 0 || channels == 0) fail("input dimensions must be positive");
  if (class_names.empty()) fail("at least one class is required");
  if (std::set<std::string>(class_names.begin(), class_names.end()).size() != class_names.size()) {
    fail("class names must be unique");
  }
  if (kind != ModelKind::vit) {
    if (cnn.filters.empty()) fail("cnn needs at least one convolution stage");
    if (cnn.kernel_size % 2 == 0) fail("cnn kernel size must be odd");
    if (cnn.dense_units == 0) fail("cnn dense_units must be positive");
    const std::size_t factor = std::size_t{1} << cnn.filters.size();
    if (height % factor != 0 || width % factor != 0) {
      fail("input " + std::to_string(height) + "x" + std::to_string(width) +
           " is not divisible by " + std::to_string(factor) + " for " +
           std::to_string(cnn.filters.size()) + " pooling stages");
    }
    for (auto f : cnn.filters) {
      if (f == 0) fail("cnn filter counts must be positive");
    }
  }
  if (kind != ModelKind::cnn) {
    if (vit.patch_size == 0 || height % vit.patch_size != 0 || width % vit.patch_size != 0) {
      fail("input " + std::to_string(height) + "x" + std::to_string(width) +
           " is not divisible into " + std::to_string(vit.patch_size) + "-pixel patches");
    }
    if (vit.heads == 0 || vit.embed_dim % vit.heads != 0) {
      fail("vit embed_dim must be divisible by heads");
    }
    if (vit.mlp_hidden == 0) fail("vit mlp_hidden must be positive");
  }
}

void to_json(nlohmann::json& j, const ModelSpec& spec) {
  j = nlohmann::json{
      {"kind", to_string(spec.kind)},
      {"input", {{"height", spec.height}, {"width", spec.width}, {"channels", spec.channels}}},
      {"class_names", spec.class_names},
      {"mask_channel", spec.mask_channel},
      {"cnn",
       {{"filters", spec.cnn.filters},
        {"kernel_size", spec.cnn.kernel_size},
        {"dense_units", spec.cnn.dense_units}}},
      {"vit",
       {{"patch_size", spec.vit.patch_size},
        {"embed_dim", spec.vit.embed_dim},
        {"heads", spec.vit.heads},
        {"depth", spec.vit.depth},
        {"mlp_hidden", spec.vit.mlp_hidden}}},
  };
}

void from_json(const nlohmann::json& j, ModelSpec& spec) {
  json_util::ObjectReader root(j, "model");
  if (auto v = root.optional("kind")) spec.kind = parse_model_kind(json_util::as_string(*v, "model.kind"));
  if (auto v = root.optional("input")) {
    json_util::ObjectReader in(*v, "model.input");
    in.read("height", spec.height);
    in.read("width", spec.width);
    in.read("channels", spec.channels);
    in.finish();
  }
  root.read("class_names", spec.class_names);
  root.read("mask_channel", spec.mask_channel);
  if (auto v = root.optional("cnn")) {
    json_util::ObjectReader c(*v, "model.cnn");
    c.read("filters", spec.cnn.filters);
    c.read("kernel_size", spec.cnn.kernel_size);
    c.read("dense_units", spec.cnn.dense_units);
    c.finish();
  }
  if (auto v = root.optional("vit")) {
    json_util::ObjectReader c(*v, "model.vit");
    c.read("patch_size", spec.vit.patch_size);
    c.read("embed_dim", spec.vit.embed_dim);
    c.read("heads", spec.vit.heads);
    c.read("depth", spec.vit.depth);
    c.read("mlp_hidden", spec.vit.mlp_hidden);
    c.finish();
  }
  root.finish();
}

}  // namespace plantscan
