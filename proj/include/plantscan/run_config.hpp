// The JSON document that drives a training/evaluation run.
#pragma once

#include "plantscan/dataset.hpp"
#include "plantscan/model_spec.hpp"
#include "plantscan/training.hpp"

#include <nlohmann/json_fwd.hpp>

#include <filesystem>

namespace plantscan {

struct RunConfig {
  std::uint64_t seed = 42;
  ModelSpec model;
  bool class_names_given = false;  // otherwise taken from the dataset directories
  TrainConfig train;
  std::filesystem::path data_root = "data";
  SplitFractions split;
  std::filesystem::path model_file = "model.ppdm";
  std::filesystem::path history_file = "history.jsonl";
  std::filesystem::path metrics_file = "metrics.json";
};

/// Every field is optional; unknown fields throw ConfigError. `train.seed`
/// is not accepted, the top-level seed drives everything.
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& config);

}  // namespace plantscan
