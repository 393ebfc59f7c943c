// Confusion matrices and the precision/recall figures derived from them.
#pragma once

#include <nlohmann/json_fwd.hpp>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace plantscan {

/// Rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes = 0, std::vector<std::string> class_names = {});

  std::size_t classes() const { return classes_; }
  const std::vector<std::string>& class_names() const { return names_; }
  std::size_t& at(std::size_t truth, std::size_t predicted);
  std::size_t at(std::size_t truth, std::size_t predicted) const;
  std::size_t total() const;
  std::size_t correct() const;
  double accuracy() const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t classes_;
  std::vector<std::string> names_;
  std::vector<std::size_t> counts_;
};

ConfusionMatrix confusion(std::span<const std::size_t> labels,
                          std::span<const std::size_t> predictions, std::size_t classes,
                          std::vector<std::string> class_names = {});

enum class Averaging { macro, micro, per_class };

std::string to_string(Averaging averaging);

struct ClassScore {
  std::optional<double> precision;  // empty when nothing was predicted as this class
  std::optional<double> recall;     // empty when the class has no samples
  std::size_t support = 0;
};

struct PrecisionRecall {
  Averaging averaging = Averaging::macro;
  std::vector<ClassScore> per_class;
  double precision = 0.0;  // aggregate under `averaging` (macro for per_class)
  double recall = 0.0;
  std::vector<std::string> warnings;
};

/// Undefined per-class values are left out of the macro mean and reported
/// in `warnings`. Throws std::invalid_argument on an all-zero matrix.
PrecisionRecall precision_recall(const ConfusionMatrix& cm,
                                 Averaging averaging = Averaging::macro);

struct MetricsBundle {
  double accuracy = 0.0;
  double loss = 0.0;
  ConfusionMatrix confusion;
  PrecisionRecall macro;
  PrecisionRecall micro;
};

MetricsBundle make_metrics(double loss, const ConfusionMatrix& cm);

nlohmann::json to_json(const MetricsBundle& metrics);

}  // namespace plantscan
