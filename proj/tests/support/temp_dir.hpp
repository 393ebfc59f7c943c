#pragma once

#include <filesystem>
#include <string>

namespace plantscan::testing {

/// A fresh, empty directory under the build tree.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::path(PLANTSCAN_TEST_TMP) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace plantscan::testing
