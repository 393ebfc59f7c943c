#include "plantscan/serialization.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace plantscan {

std::string to_string(ModelFileError::Kind kind) {
  using K = ModelFileError::Kind;
  switch (kind) {
    case K::io: return "io error";
    case K::bad_magic: return "bad magic";
    case K::version_mismatch: return "version mismatch";
    case K::malformed_header: return "malformed header";
    case K::truncated: return "truncated tensor data";
    case K::count_mismatch: return "parameter count mismatch";
  }
  return "unknown";
}

namespace {

using Kind = ModelFileError::Kind;

template <typename T>
T byteswap(T value) {
  auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
  std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

[[noreturn]] void fail(Kind kind, const std::string& detail) {
  throw ModelFileError(kind, to_string(kind) + ": " + detail);
}

template <typename T>
void write_le(std::ostream& out, T value) {
  if constexpr (std::endian::native == std::endian::big) value = byteswap(value);
  out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <typename T>
T read_le(std::istream& in, const char* what) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof value);
  if (in.gcount() != sizeof value) fail(Kind::truncated, std::string("file ends inside ") + what);
  if constexpr (std::endian::native == std::endian::big) value = byteswap(value);
  return value;
}

void write_floats(std::ostream& out, const Tensor& t) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(t.data()),
              static_cast<std::streamsize>(t.size() * sizeof(float)));
  } else {
    for (float v : t.values()) write_le(out, std::bit_cast<std::uint32_t>(v));
  }
}

}  // namespace

void save_model(const Model& model, std::ostream& out) {
  nlohmann::json tensors = nlohmann::json::array();
  std::size_t count = 0;
  for (const auto* p : model.parameters()) {
    tensors.push_back({{"name", p->name}, {"shape", p->value.shape()}});
    count += p->value.size();
  }
  const nlohmann::json header = {{"spec", model.spec()},
                                 {"class_names", model.spec().class_names},
                                 {"tensors", tensors},
                                 {"parameter_count", count}};
  const std::string text = header.dump();
  out.write(kModelMagic, 4);
  write_le<std::uint32_t>(out, kModelFormatVersion);
  write_le<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto* p : model.parameters()) write_floats(out, p->value);
  if (!out) fail(Kind::io, "write failed");
}

void save_model(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Kind::io, "cannot open " + path.string() + " for writing");
  save_model(model, out);
}

Model load_model(std::istream& in) {
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, kModelMagic, 4) != 0) {
    fail(Kind::bad_magic, "not a PPDM model file");
  }
  const auto version = read_le<std::uint32_t>(in, "version");
  if (version != kModelFormatVersion) {
    fail(Kind::version_mismatch, "file version " + std::to_string(version) + ", reader supports " +
                                     std::to_string(kModelFormatVersion));
  }
  const auto length = read_le<std::uint64_t>(in, "header length");
  if (length > (std::uint64_t{1} << 32)) fail(Kind::malformed_header, "implausible header length");
  std::string text(length, '\0');
  in.read(text.data(), static_cast<std::streamsize>(length));
  if (static_cast<std::uint64_t>(in.gcount()) != length) fail(Kind::truncated, "file ends inside header");

  nlohmann::json header;
  ModelSpec spec;
  std::size_t declared = 0;
  std::vector<std::pair<std::string, Shape>> listed;
  try {
    header = nlohmann::json::parse(text);
    spec = header.at("spec").get<ModelSpec>();
    if (header.at("class_names").get<std::vector<std::string>>() != spec.class_names) {
      fail(Kind::malformed_header, "class_names disagree with the model spec");
    }
    declared = header.at("parameter_count").get<std::size_t>();
    for (const auto& t : header.at("tensors")) {
      listed.emplace_back(t.at("name").get<std::string>(), t.at("shape").get<Shape>());
    }
  } catch (const ModelFileError&) {
    throw;
  } catch (const std::exception& e) {
    fail(Kind::malformed_header, e.what());
  }

  Model model = [&] {
    try {
      return build_model(spec, 0);
    } catch (const std::exception& e) {
      fail(Kind::malformed_header, e.what());
    }
  }();
  auto params = model.parameters();
  std::size_t listed_count = 0;
  for (const auto& t : listed) listed_count += shape_size(t.second);
  if (listed.size() != params.size() || listed_count != declared ||
      declared != count_scalars(params)) {
    fail(Kind::count_mismatch, "header declares " + std::to_string(declared) + " parameters in " +
                                   std::to_string(listed.size()) + " tensors; the spec builds " +
                                   std::to_string(count_scalars(params)) + " in " +
                                   std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = *params[i];
    const auto& [name, shape] = listed[i];
    if (name != p.name || shape != p.value.shape()) {
      fail(Kind::count_mismatch, "tensor " + std::to_string(i) + " is '" + name + "' " +
                                     shape_string(shape) + ", expected '" + p.name + "' " +
                                     shape_string(p.value.shape()));
    }
    const auto bytes = static_cast<std::streamsize>(p.value.size() * sizeof(float));
    in.read(reinterpret_cast<char*>(p.value.data()), bytes);
    if (in.gcount() != bytes) fail(Kind::truncated, "tensor '" + name + "' is incomplete");
    if constexpr (std::endian::native == std::endian::big) {
      for (auto& v : p.value.values()) {
        v = std::bit_cast<float>(byteswap(std::bit_cast<std::uint32_t>(v)));
      }
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    fail(Kind::count_mismatch, "trailing bytes after the last tensor");
  }
  return model;
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Kind::io, "cannot open " + path.string());
  return load_model(in);
}

}  // namespace plantscan
