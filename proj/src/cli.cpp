#include "plantscan/cli.hpp"

#include "plantscan/dataset.hpp"
#include "plantscan/image.hpp"
#include "plantscan/json_util.hpp"
#include "plantscan/run_config.hpp"
#include "plantscan/scan.hpp"
#include "plantscan/serialization.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace plantscan::cli {

namespace fs = std::filesystem;

namespace {

// Carries an exit code out of a subcommand.
struct Exit {
  int code;
  std::string message;
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Exit{kFailure, "cannot write " + path.string()};
  out << text;
}

void emit(const nlohmann::json& doc, const std::string& out_path, std::ostream& out) {
  const auto text = doc.dump(2) + "\n";
  if (out_path.empty()) {
    out << text;
  } else {
    write_text(out_path, text);
  }
}

Model load_model_or_exit(const fs::path& path) {
  try {
    return load_model(path);
  } catch (const ModelFileError& e) {
    throw Exit{kCorruptModel, path.string() + ": " + e.what()};
  }
}

RunConfig load_config_or_exit(const std::string& path, std::optional<std::uint64_t> seed) {
  try {
    auto cfg = path.empty() ? parse_run_config(nlohmann::json::object()) : load_run_config(path);
    if (seed) cfg.seed = cfg.train.seed = *seed;
    return cfg;
  } catch (const std::invalid_argument& e) {
    throw Exit{kInvalidConfig, std::string("invalid config: ") + e.what()};
  }
}

LabeledDataset load_data_or_exit(const RunConfig& cfg, std::ostream& err) {
  try {
    auto data = load_dataset(cfg.data_root, cfg.split, cfg.seed,
                             {cfg.model.height, cfg.model.width});
    for (const auto& w : data.warnings) err << "warning: " << w << '\n';
    return data;
  } catch (const std::exception& e) {
    throw Exit{kDataError, std::string("data error: ") + e.what()};
  }
}

std::vector<Example> examples_or_exit(const LabeledDataset& data, Split split,
                                      const ModelSpec& spec) {
  try {
    return examples(data, split, spec);
  } catch (const std::exception& e) {
    throw Exit{kDataError, std::string("data error: ") + e.what()};
  }
}

void check_classes(const LabeledDataset& data, RunConfig& cfg) {
  if (!cfg.class_names_given) {
    cfg.model.class_names = data.class_names;
  } else if (cfg.model.class_names != data.class_names) {
    throw Exit{kDataError, "data error: configured class_names do not match the dataset directories"};
  }
}

int cmd_train(const std::string& config_path, std::optional<std::uint64_t> seed,
              const std::string& out_dir, std::ostream& out, std::ostream& err) {
  auto cfg = load_config_or_exit(config_path, seed);
  const auto data = load_data_or_exit(cfg, err);
  check_classes(data, cfg);
  const auto train_split = examples_or_exit(data, Split::train, cfg.model);
  const auto val_split = examples_or_exit(data, Split::val, cfg.model);
  const auto test_split = examples_or_exit(data, Split::test, cfg.model);
  if (train_split.empty() || val_split.empty()) {
    throw Exit{kDataError, "data error: train and validation splits must be non-empty"};
  }

  auto model = build_model(cfg.model, cfg.seed);
  const auto result = train(model, train_split, val_split, cfg.train,
                            [&](EpochRecord& r, const Model&) {
                              err << "epoch " << r.epoch << ": train_acc=" << r.train_accuracy
                                  << " train_loss=" << r.train_loss << " val_acc=" << r.val_accuracy
                                  << " val_loss=" << r.val_loss << '\n';
                            });
  const fs::path base = out_dir.empty() ? fs::path(".") : fs::path(out_dir);
  fs::create_directories(base);
  save_model(model, base / cfg.model_file);
  std::ostringstream history;
  write_history_jsonl(history, result.history);
  write_text(base / cfg.history_file, history.str());

  const auto& final_split = test_split.empty() ? val_split : test_split;
  auto metrics = to_json(evaluate(model, final_split).metrics);
  metrics["split"] = test_split.empty() ? "val" : "test";
  metrics["best_epoch"] = result.best_epoch;
  metrics["epochs_run"] = result.history.size();
  write_text(base / cfg.metrics_file, metrics.dump(2) + "\n");
  out << "trained " << to_string(cfg.model.kind) << " for " << result.history.size()
      << " epochs (best " << result.best_epoch << "); model written to "
      << (base / cfg.model_file).string() << '\n';
  return kOk;
}

int cmd_eval(const std::string& config_path, std::optional<std::uint64_t> seed,
             const std::string& model_path, const std::string& split_name,
             const std::string& out_path, std::ostream& out, std::ostream& err) {
  auto cfg = load_config_or_exit(config_path, seed);
  Split split;
  try {
    split = parse_split(split_name);
  } catch (const std::invalid_argument& e) {
    throw Exit{kInvalidConfig, e.what()};
  }
  const auto model = load_model_or_exit(model_path);
  cfg.model.height = model.spec().height;
  cfg.model.width = model.spec().width;
  const auto data = load_data_or_exit(cfg, err);
  if (data.class_names != model.spec().class_names) {
    throw Exit{kDataError, "data error: dataset classes do not match the model's classes"};
  }
  const auto samples = examples_or_exit(data, split, model.spec());
  if (samples.empty()) throw Exit{kDataError, "data error: split '" + split_name + "' is empty"};
  auto metrics = to_json(evaluate(model, samples).metrics);
  metrics["split"] = to_string(split);
  emit(metrics, out_path, out);
  return kOk;
}

int cmd_predict(const std::string& model_path, const std::string& image,
                const std::string& mask_path, const std::string& world_path,
                const std::string& out_path, std::ostream& out) {
  const auto model = load_model_or_exit(model_path);
  const auto& spec = model.spec();
  GeoTile tile;
  try {
    tile = load_tile(image, spec.height, spec.width,
                     mask_path.empty() ? std::nullopt : std::optional<fs::path>(mask_path),
                     world_path.empty() ? std::nullopt : std::optional<fs::path>(world_path));
  } catch (const std::exception& e) {
    throw Exit{kDataError, std::string("data error: ") + e.what()};
  }
  Tensor input;
  try {
    input = model_input(tile, spec);
  } catch (const MissingMaskError& e) {
    throw Exit{kMissingMask, e.what()};
  }
  const auto probs = model.forward(input);
  const auto best = argmax(probs.values());
  nlohmann::json doc = {{"image", image},
                        {"class", spec.class_names[best]},
                        {"class_index", best},
                        {"class_names", spec.class_names},
                        {"probabilities", std::vector<double>(probs.values().begin(),
                                                              probs.values().end())}};
  emit(doc, out_path, out);
  return kOk;
}

int cmd_scan(const std::string& model_path, const std::string& raster_path,
             const std::string& world_path, const std::string& mask_path, ScanOptions options,
             const std::string& out_path, std::ostream& out, std::ostream& err) {
  const auto model = load_model_or_exit(model_path);
  Tensor raster;
  std::optional<AffineGeoref> georef;
  std::optional<Tensor> mask;
  try {
    raster = to_tensor(read_image(raster_path));
    fs::path wld = world_path;
    if (wld.empty()) {
      auto sidecar = fs::path(raster_path).replace_extension(".wld");
      if (fs::exists(sidecar)) wld = sidecar;
    }
    if (!wld.empty()) {
      georef = read_world_file(wld);
    } else {
      err << "warning: no world file for " << raster_path << "; footprints are in pixel units\n";
    }
    if (!mask_path.empty()) {
      mask = rasterize_mask(read_geojson_polygons(mask_path), georef.value_or(pixel_space_georef()),
                            raster.dim(0), raster.dim(1));
    }
  } catch (const std::exception& e) {
    throw Exit{kDataError, std::string("data error: ") + e.what()};
  }
  if (model.spec().mask_channel && !mask) {
    throw Exit{kMissingMask, "model expects a mask channel; pass --mask <geojson>"};
  }
  ScanResult result;
  try {
    result = scan_raster(model, raster, georef, mask, options);
  } catch (const std::invalid_argument& e) {
    throw Exit{kDataError, std::string("data error: ") + e.what()};
  }
  emit(to_geojson(result, options), out_path, out);
  return kOk;
}

int cmd_inspect(const std::string& model_path, const std::string& kind, std::ostream& out) {
  if (!model_path.empty()) {
    out << summarize(load_model_or_exit(model_path));
    return kOk;
  }
  ModelSpec spec;
  try {
    spec.kind = parse_model_kind(kind);
  } catch (const std::invalid_argument& e) {
    throw Exit{kInvalidConfig, e.what()};
  }
  out << summarize(build_model(spec));
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Power-plant tile classification: CNN, ViT and hybrid models", "plantscan"};
  app.require_subcommand(1);

  std::string config, out_path, model_path, image, mask, world, split = "test", kind = "cnn";
  std::optional<std::uint64_t> seed;
  ScanOptions scan;
  scan.threads = threads_from_env();
  SyntheticOptions synth;

  auto add_common = [&](CLI::App* sub, bool with_config) {
    if (with_config) sub->add_option("--config", config, "Run configuration (JSON)");
    sub->add_option("--seed", seed, "Override the configured seed");
    sub->add_option("--out", out_path, "Output path");
  };

  auto* train_cmd = app.add_subcommand("train", "Train a model from a run configuration");
  add_common(train_cmd, true);

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a model on a dataset split");
  add_common(eval_cmd, true);
  eval_cmd->add_option("--model", model_path, "PPDM model file")->required();
  eval_cmd->add_option("--split", split, "train, val or test");

  auto* predict_cmd = app.add_subcommand("predict", "Classify a single tile");
  add_common(predict_cmd, false);
  predict_cmd->add_option("--model", model_path, "PPDM model file")->required();
  predict_cmd->add_option("--image", image, "PNG or PPM tile")->required();
  predict_cmd->add_option("--mask", mask, "GeoJSON polygons for the mask channel");
  predict_cmd->add_option("--world", world, "World file for the tile");

  auto* scan_cmd = app.add_subcommand("scan", "Slide over a raster and export GeoJSON detections");
  add_common(scan_cmd, false);
  scan_cmd->add_option("--model", model_path, "PPDM model file")->required();
  scan_cmd->add_option("--raster", image, "PNG or PPM raster")->required();
  scan_cmd->add_option("--world", world, "World file (default: raster sidecar .wld)");
  scan_cmd->add_option("--mask", mask, "GeoJSON polygons for the mask channel");
  scan_cmd->add_option("--tile", scan.tile_size, "Tile size in pixels");
  scan_cmd->add_option("--stride", scan.stride, "Stride in pixels");
  scan_cmd->add_option("--threshold", scan.threshold, "Minimum top-class probability");

  auto* inspect_cmd = app.add_subcommand("inspect", "Print a model summary");
  add_common(inspect_cmd, false);
  inspect_cmd->add_option("--model", model_path, "PPDM model file");
  inspect_cmd->add_option("--kind", kind, "Summarize a freshly built default cnn, vit or hybrid");

  auto* synth_cmd = app.add_subcommand("make-synthetic", "Write the procedural 4-class dataset");
  add_common(synth_cmd, false);
  synth_cmd->add_option("--per-class", synth.per_class, "Images per class");
  synth_cmd->add_option("--size", synth.size, "Tile edge length in pixels");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kInvalidConfig;
  }
  if (scan_cmd->parsed() && !scan_cmd->count("--stride")) scan.stride = scan.tile_size;

  try {
    if (train_cmd->parsed()) {
      if (config.empty()) throw Exit{kInvalidConfig, "train requires --config"};
      return cmd_train(config, seed, out_path, out, err);
    }
    if (eval_cmd->parsed()) return cmd_eval(config, seed, model_path, split, out_path, out, err);
    if (predict_cmd->parsed()) return cmd_predict(model_path, image, mask, world, out_path, out);
    if (scan_cmd->parsed()) return cmd_scan(model_path, image, world, mask, scan, out_path, out, err);
    if (inspect_cmd->parsed()) return cmd_inspect(model_path, kind, out);
    if (synth_cmd->parsed()) {
      if (out_path.empty()) throw Exit{kInvalidConfig, "make-synthetic requires --out"};
      make_synthetic(out_path, seed.value_or(42), synth);
      out << "wrote " << synth.per_class * synth.class_names.size() << " tiles to " << out_path
          << '\n';
      return kOk;
    }
  } catch (const Exit& e) {
    if (!e.message.empty()) err << e.message << '\n';
    return e.code;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}

}  // namespace plantscan::cli
