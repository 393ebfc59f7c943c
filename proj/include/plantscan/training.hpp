// Training protocol: minibatch Adam on sparse cross-entropy with early
// stopping on validation loss and restoration of the best epoch.
#pragma once

#include "plantscan/metrics.hpp"
#include "plantscan/network.hpp"
#include "plantscan/optimizer.hpp"

#include <nlohmann/json_fwd.hpp>

#include <functional>
#include <iosfwd>
#include <span>

namespace plantscan {

struct TrainConfig {
  double learning_rate = 0.001;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 10;
  std::size_t patience = 2;
  std::uint64_t seed = 42;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  bool augment = false;  // random flip/rotation per sample and epoch

  void validate() const;
  AdamOptions adam() const { return {learning_rate, beta1, beta2, epsilon}; }
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

/// One model input with its class index.
struct Example {
  Tensor input;
  std::size_t label = 0;
};

/// Train metrics are running means over the epoch's minibatches (computed
/// before each update); validation metrics use the weights at epoch end.
struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_accuracy = 0.0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
  double val_loss = 0.0;
};

nlohmann::json to_json(const EpochRecord& r);
/// One JSON object per line, in epoch order.
void write_history_jsonl(std::ostream& os, std::span<const EpochRecord> history);

/// Stops after `patience` consecutive epochs without a strict decrease of
/// the monitored loss.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience);

  /// Records `loss` for `epoch`; returns true when training should stop.
  bool update(std::size_t epoch, double loss);
  bool improved() const { return improved_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_loss_; }

 private:
  std::size_t patience_;
  std::size_t wait_ = 0;
  std::size_t best_epoch_ = 0;
  double best_loss_;
  bool improved_ = false;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  bool stopped_early = false;
};

/// Called after each epoch's record is filled in and before the
/// early-stopping decision; the record may be adjusted.
using EpochObserver = std::function<void(EpochRecord&, const Model&)>;

/// Trains `model` in place. On return the model holds the parameters of the
/// epoch with the lowest validation loss.
TrainResult train(Model& model, std::span<const Example> train_split,
                  std::span<const Example> val_split, const TrainConfig& config,
                  const EpochObserver& observer = {});

struct Evaluation {
  MetricsBundle metrics;
  std::vector<std::size_t> predictions;
};

/// Accuracy, mean loss, confusion matrix and precision/recall on `split`.
Evaluation evaluate(const Model& model, std::span<const Example> split);

}  // namespace plantscan
