#include "plantscan/training.hpp"

#include "plantscan/augment.hpp"
#include "plantscan/json_util.hpp"
#include "plantscan/loss.hpp"

#include <limits>
#include <nlohmann/json.hpp>
#include <numeric>
#include <ostream>

namespace plantscan {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate must be positive");
  if (batch_size < 1) throw ConfigError("train.batch_size must be at least 1");
  if (patience < 1) throw ConfigError("train.patience must be at least 1");
  if (max_epochs < 1) throw ConfigError("train.max_epochs must be at least 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("train.beta1 and train.beta2 must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ConfigError("train.epsilon must be positive");
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"learning_rate", c.learning_rate}, {"batch_size", c.batch_size},
       {"max_epochs", c.max_epochs},       {"patience", c.patience},
       {"seed", c.seed},                   {"beta1", c.beta1},
       {"beta2", c.beta2},                 {"epsilon", c.epsilon},
       {"augment", c.augment}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  json_util::ObjectReader r(j, "train");
  r.read("learning_rate", c.learning_rate);
  r.read("batch_size", c.batch_size);
  r.read("max_epochs", c.max_epochs);
  r.read("patience", c.patience);
  r.read("seed", c.seed);
  r.read("beta1", c.beta1);
  r.read("beta2", c.beta2);
  r.read("epsilon", c.epsilon);
  r.read("augment", c.augment);
  r.finish();
}

nlohmann::json to_json(const EpochRecord& r) {
  return {{"epoch", r.epoch},
          {"train_acc", r.train_accuracy},
          {"train_loss", r.train_loss},
          {"val_acc", r.val_accuracy},
          {"val_loss", r.val_loss}};
}

void write_history_jsonl(std::ostream& os, std::span<const EpochRecord> history) {
  for (const auto& r : history) os << to_json(r).dump() << '\n';
}

EarlyStopping::EarlyStopping(std::size_t patience)
    : patience_(patience), best_loss_(std::numeric_limits<double>::infinity()) {
  if (patience == 0) throw std::invalid_argument("early stopping patience must be at least 1");
}

bool EarlyStopping::update(std::size_t epoch, double loss) {
  improved_ = loss < best_loss_;
  if (improved_) {
    best_loss_ = loss;
    best_epoch_ = epoch;
    wait_ = 0;
    return false;
  }
  return ++wait_ >= patience_;
}

namespace {

std::vector<Tensor> snapshot(const Model& model) {
  std::vector<Tensor> out;
  for (const auto* p : model.parameters()) out.push_back(p->value);
  return out;
}

void restore(Model& model, const std::vector<Tensor>& values) {
  auto params = model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

void require_non_empty(std::span<const Example> split, const char* name) {
  if (split.empty()) throw std::invalid_argument(std::string("training: ") + name + " split is empty");
}

}  // namespace

TrainResult train(Model& model, std::span<const Example> train_split,
                  std::span<const Example> val_split, const TrainConfig& config,
                  const EpochObserver& observer) {
  config.validate();
  require_non_empty(train_split, "train");
  require_non_empty(val_split, "validation");

  Rng rng(config.seed);
  auto params = model.parameters();
  AdamState<float> adam;
  EarlyStopping stopper(config.patience);
  std::vector<Tensor> best = snapshot(model);
  std::vector<std::size_t> order(train_split.size());
  TrainResult result;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));
    const std::uint64_t augment_seed = rng.fork();

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const std::size_t batch = stop - start;
      zero_gradients(params);
      for (std::size_t i = start; i < stop; ++i) {
        const Example& ex = train_split[order[i]];
        const std::size_t label[1] = {ex.label};
        Model::Cache cache;
        Tensor probs;
        if (config.augment) {
          Rng sample_rng(augment_seed + i);
          probs = model.forward(augment(ex.input, random_augmentation(sample_rng)), &cache);
        } else {
          probs = model.forward(ex.input, &cache);
        }
        loss_sum += sparse_ce_loss(probs, label);
        correct += argmax(probs.values()) == ex.label;
        model.backward(sparse_ce_softmax_grad(probs, label, batch), cache);
      }
      adam_step(params, adam, config.adam());
    }

    const auto val = evaluate(model, val_split);
    EpochRecord record{epoch, static_cast<double>(correct) / static_cast<double>(order.size()),
                       loss_sum / static_cast<double>(order.size()), val.metrics.accuracy,
                       val.metrics.loss};
    if (observer) observer(record, model);
    result.history.push_back(record);

    const bool stop = stopper.update(epoch, record.val_loss);
    if (stopper.improved()) best = snapshot(model);
    if (stop) {
      result.stopped_early = epoch < config.max_epochs;
      break;
    }
  }
  result.best_epoch = stopper.best_epoch();
  restore(model, best);
  return result;
}

Evaluation evaluate(const Model& model, std::span<const Example> split) {
  const std::size_t classes = model.spec().num_classes();
  Evaluation out;
  std::vector<std::size_t> labels;
  double loss_sum = 0.0;
  for (const auto& ex : split) {
    const auto probs = model.forward(ex.input);
    const std::size_t label[1] = {ex.label};
    loss_sum += sparse_ce_loss(probs, label);
    out.predictions.push_back(argmax(probs.values()));
    labels.push_back(ex.label);
  }
  const auto cm = confusion(labels, out.predictions, classes, model.spec().class_names);
  const double loss = split.empty() ? 0.0 : loss_sum / static_cast<double>(split.size());
  if (split.empty()) {
    out.metrics.confusion = cm;
    return out;
  }
  out.metrics = make_metrics(loss, cm);
  return out;
}

}  // namespace plantscan
