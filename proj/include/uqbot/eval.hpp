#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace uqbot {

/// Binary confusion counts; the positive class is botnet (label 1).
struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  std::size_t total() const noexcept { return tp + tn + fp + fn; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct MetricsReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
  double f1 = 0.0;
  /// Metrics whose denominator was zero; they are reported as 0.
  std::vector<std::string> degenerate_flags;
};

ConfusionMatrix confusion(std::span<const int> preds, std::span<const int> truth);
MetricsReport metrics(const ConfusionMatrix& cm);

/// Flat object with keys accuracy, precision, recall, fpr, tpr, f1 (and
/// degenerate_flags when non-empty).
nlohmann::json to_json(const MetricsReport& m);
MetricsReport metrics_from_json(const nlohmann::json& j);

}  // namespace uqbot
