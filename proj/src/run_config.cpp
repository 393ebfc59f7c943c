#include "plantscan/run_config.hpp"

#include "plantscan/json_util.hpp"

#include <nlohmann/json.hpp>

#include <fstream>

namespace plantscan {

RunConfig parse_run_config(const nlohmann::json& doc) {
  RunConfig cfg;
  try {
    json_util::ObjectReader root(doc, "config");
    root.read("seed", cfg.seed);
    if (auto m = root.optional("model")) {
      cfg.class_names_given = m->is_object() && m->contains("class_names");
      from_json(*m, cfg.model);
    }
    if (auto t = root.optional("train")) {
      if (t->is_object() && t->contains("seed")) {
        throw ConfigError("train.seed: use the top-level seed field");
      }
      from_json(*t, cfg.train);
    }
    if (auto d = root.optional("data")) {
      json_util::ObjectReader data(*d, "data");
      std::string root_dir = cfg.data_root.string();
      data.read("root", root_dir);
      cfg.data_root = root_dir;
      if (auto s = data.optional("split")) {
        json_util::ObjectReader split(*s, "data.split");
        split.read("train", cfg.split.train);
        split.read("val", cfg.split.val);
        split.read("test", cfg.split.test);
        split.finish();
      }
      data.finish();
    }
    if (auto o = root.optional("output")) {
      json_util::ObjectReader out(*o, "output");
      std::string model = cfg.model_file.string(), history = cfg.history_file.string(),
                  metrics = cfg.metrics_file.string();
      out.read("model", model);
      out.read("history", history);
      out.read("metrics", metrics);
      out.finish();
      cfg.model_file = model;
      cfg.history_file = history;
      cfg.metrics_file = metrics;
    }
    root.finish();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  cfg.train.seed = cfg.seed;
  cfg.train.validate();
  try {
    cfg.model.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const double total = cfg.split.train + cfg.split.val + cfg.split.test;
  if (cfg.split.train < 0 || cfg.split.val < 0 || cfg.split.test < 0 || std::abs(total - 1.0) > 1e-6) {
    throw ConfigError("data.split fractions must be non-negative and sum to 1");
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_run_config(doc);
}

nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json train = c.train;
  train.erase("seed");
  return {{"seed", c.seed},
          {"model", c.model},
          {"train", train},
          {"data",
           {{"root", c.data_root.string()},
            {"split", {{"train", c.split.train}, {"val", c.split.val}, {"test", c.split.test}}}}},
          {"output",
           {{"model", c.model_file.string()},
            {"history", c.history_file.string()},
            {"metrics", c.metrics_file.string()}}}};
}

}  // namespace plantscan
