#include "plantscan/network.hpp"

#include <iomanip>
#include <sstream>

namespace plantscan {

std::string group_thousands(std::size_t n) {
  auto digits = std::to_string(n);
  for (auto i = static_cast<std::ptrdiff_t>(digits.size()) - 3; i > 0; i -= 3) {
    digits.insert(static_cast<std::size_t>(i), ",");
  }
  return digits;
}

namespace {

std::string batch_shape(const Shape& shape) {
  std::string s = "(None";
  for (auto d : shape) s += ", " + std::to_string(d);
  return s + ")";
}

}  // namespace

std::string summarize(std::span<const LayerInfo> layers) {
  constexpr int kName = 40, kShape = 26;
  const std::string rule(80, '_'), double_rule(80, '=');
  std::ostringstream os;
  os << rule << '\n'
     << ' ' << std::left << std::setw(kName) << "Layer (type)" << std::setw(kShape)
     << "Output Shape" << "Param #" << '\n'
     << double_rule << '\n';
  std::size_t total = 0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    os << ' ' << std::setw(kName) << (l.name + " (" + l.type + ")") << std::setw(kShape)
       << batch_shape(l.output_shape) << group_thousands(l.param_count) << '\n';
    os << (i + 1 == layers.size() ? double_rule : rule) << '\n';
    total += l.param_count;
  }
  if (layers.empty()) os << double_rule << '\n';
  os << "Total params: " << group_thousands(total) << '\n'
     << "Trainable params: " << group_thousands(total) << '\n'
     << "Non-trainable params: 0\n"
     << rule << '\n';
  return os.str();
}

}  // namespace plantscan
