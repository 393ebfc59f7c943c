#include "plantscan/metrics.hpp"

#include <nlohmann/json.hpp>

#include <stdexcept>

namespace plantscan {

ConfusionMatrix::ConfusionMatrix(std::size_t classes, std::vector<std::string> class_names)
    : classes_(classes), names_(std::move(class_names)), counts_(classes * classes, 0) {
  if (names_.empty()) {
    for (std::size_t i = 0; i < classes; ++i) names_.push_back(std::to_string(i));
  }
  if (names_.size() != classes) {
    throw std::invalid_argument("confusion matrix: " + std::to_string(names_.size()) +
                                " names for " + std::to_string(classes) + " classes");
  }
}

std::size_t& ConfusionMatrix::at(std::size_t truth, std::size_t predicted) {
  return counts_.at(truth * classes_ + predicted);
}

std::size_t ConfusionMatrix::at(std::size_t truth, std::size_t predicted) const {
  return counts_.at(truth * classes_ + predicted);
}

std::size_t ConfusionMatrix::total() const {
  std::size_t n = 0;
  for (auto c : counts_) n += c;
  return n;
}

std::size_t ConfusionMatrix::correct() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < classes_; ++i) n += at(i, i);
  return n;
}

double ConfusionMatrix::accuracy() const {
  const auto n = total();
  return n == 0 ? 0.0 : static_cast<double>(correct()) / static_cast<double>(n);
}

ConfusionMatrix confusion(std::span<const std::size_t> labels,
                          std::span<const std::size_t> predictions, std::size_t classes,
                          std::vector<std::string> class_names) {
  if (labels.size() != predictions.size()) {
    throw std::invalid_argument("confusion: " + std::to_string(labels.size()) + " labels but " +
                                std::to_string(predictions.size()) + " predictions");
  }
  ConfusionMatrix cm(classes, std::move(class_names));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= classes || predictions[i] >= classes) {
      throw std::out_of_range("confusion: sample " + std::to_string(i) + " has class outside [0, " +
                              std::to_string(classes) + ")");
    }
    ++cm.at(labels[i], predictions[i]);
  }
  return cm;
}

std::string to_string(Averaging averaging) {
  switch (averaging) {
    case Averaging::macro: return "macro";
    case Averaging::micro: return "micro";
    case Averaging::per_class: return "per_class";
  }
  return "unknown";
}

PrecisionRecall precision_recall(const ConfusionMatrix& cm, Averaging averaging) {
  if (cm.total() == 0) throw std::invalid_argument("precision_recall: confusion matrix is empty");
  const std::size_t c = cm.classes();
  PrecisionRecall out;
  out.averaging = averaging;
  out.per_class.resize(c);
  double p_sum = 0, r_sum = 0;
  std::size_t p_n = 0, r_n = 0;
  for (std::size_t k = 0; k < c; ++k) {
    std::size_t predicted = 0, actual = 0;
    for (std::size_t j = 0; j < c; ++j) {
      predicted += cm.at(j, k);
      actual += cm.at(k, j);
    }
    const auto tp = static_cast<double>(cm.at(k, k));
    auto& s = out.per_class[k];
    s.support = actual;
    if (predicted > 0) {
      s.precision = tp / static_cast<double>(predicted);
      p_sum += *s.precision;
      ++p_n;
    } else {
      out.warnings.push_back("precision undefined for class '" + cm.class_names()[k] +
                             "' (no predictions); excluded from macro average");
    }
    if (actual > 0) {
      s.recall = tp / static_cast<double>(actual);
      r_sum += *s.recall;
      ++r_n;
    } else {
      out.warnings.push_back("recall undefined for class '" + cm.class_names()[k] +
                             "' (no samples); excluded from macro average");
    }
  }
  if (averaging == Averaging::micro) {
    double tp = 0, predicted = 0, actual = 0;
    for (std::size_t k = 0; k < c; ++k) {
      tp += static_cast<double>(cm.at(k, k));
      for (std::size_t j = 0; j < c; ++j) {
        predicted += static_cast<double>(cm.at(j, k));
        actual += static_cast<double>(cm.at(k, j));
      }
    }
    out.precision = tp / predicted;
    out.recall = tp / actual;
  } else {
    out.precision = p_n ? p_sum / static_cast<double>(p_n) : 0.0;
    out.recall = r_n ? r_sum / static_cast<double>(r_n) : 0.0;
  }
  return out;
}

MetricsBundle make_metrics(double loss, const ConfusionMatrix& cm) {
  MetricsBundle m;
  m.accuracy = cm.accuracy();
  m.loss = loss;
  m.confusion = cm;
  m.macro = precision_recall(cm, Averaging::macro);
  m.micro = precision_recall(cm, Averaging::micro);
  return m;
}

nlohmann::json to_json(const MetricsBundle& m) {
  using nlohmann::json;
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json per_class = json::array();
  for (std::size_t k = 0; k < m.confusion.classes(); ++k) {
    const auto& s = m.macro.per_class[k];
    per_class.push_back({{"class", m.confusion.class_names()[k]},
                         {"precision", opt(s.precision)},
                         {"recall", opt(s.recall)},
                         {"support", s.support}});
  }
  json matrix = json::array();
  for (std::size_t i = 0; i < m.confusion.classes(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.confusion.classes(); ++j) row.push_back(m.confusion.at(i, j));
    matrix.push_back(row);
  }
  return {
      {"accuracy", m.accuracy},
      {"loss", m.loss},
      {"samples", m.confusion.total()},
      {"averaging", "macro"},
      {"precision", m.macro.precision},
      {"recall", m.macro.recall},
      {"per_class", per_class},
      {"macro", {{"precision", m.macro.precision}, {"recall", m.macro.recall}}},
      {"micro", {{"precision", m.micro.precision}, {"recall", m.micro.recall}}},
      {"class_names", m.confusion.class_names()},
      {"confusion_matrix", matrix},
      {"warnings", m.macro.warnings},
  };
}

}  // namespace plantscan
