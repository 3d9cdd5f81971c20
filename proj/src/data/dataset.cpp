#include <algorithm>
#include <cmath>
#include <numeric>

#include "uqbot/data.hpp"
#include "uqbot/error.hpp"

namespace uqbot {

NormStats NormStats::identity(std::size_t n_features) {
  return NormStats{std::vector<double>(n_features, 0.0), std::vector<double>(n_features, 1.0)};
}

Dataset::Dataset(std::string name, std::vector<std::string> feature_names,
                 std::vector<double> features, std::vector<int> labels,
                 std::vector<std::size_t> row_ids, std::optional<NormStats> norm_stats)
    : name_(std::move(name)),
      feature_names_(std::move(feature_names)),
      features_(std::move(features)),
      labels_(std::move(labels)),
      row_ids_(std::move(row_ids)),
      norm_stats_(std::move(norm_stats)) {
  const std::size_t f = feature_names_.size();
  if (features_.size() != labels_.size() * f) {
    throw Error(ErrorCode::LengthMismatch,
                "feature matrix holds " + std::to_string(features_.size()) + " values, expected " +
                    std::to_string(labels_.size()) + " rows x " + std::to_string(f));
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] != 0 && labels_[i] != 1) {
      throw Error(ErrorCode::NonBinaryLabel, "row " + std::to_string(i));
    }
  }
  for (std::size_t k = 0; k < features_.size(); ++k) {
    if (!std::isfinite(features_[k])) {
      throw Error(ErrorCode::UnparseableValue, "non-finite value at row " +
                                                   std::to_string(f ? k / f : 0) + ", column " +
                                                   std::to_string(f ? k % f : 0));
    }
  }
  if (row_ids_.empty()) {
    row_ids_.resize(labels_.size());
    std::iota(row_ids_.begin(), row_ids_.end(), std::size_t{0});
  } else if (row_ids_.size() != labels_.size()) {
    throw Error(ErrorCode::LengthMismatch, "row_ids length differs from label count");
  }
  if (norm_stats_ && norm_stats_->size() != f) {
    throw Error(ErrorCode::StatsLengthMismatch, "norm stats length differs from feature count");
  }
}

std::size_t Dataset::count_label(int label) const {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), label));
}

Dataset Dataset::subset(std::span<const std::size_t> indices, std::string name) const {
  const std::size_t f = n_features();
  std::vector<double> feats;
  feats.reserve(indices.size() * f);
  std::vector<int> labels;
  labels.reserve(indices.size());
  std::vector<std::size_t> ids;
  ids.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= size()) throw Error(ErrorCode::BadIndex, "row " + std::to_string(i));
    auto r = row(i);
    feats.insert(feats.end(), r.begin(), r.end());
    labels.push_back(labels_[i]);
    ids.push_back(row_ids_[i]);
  }
  return Dataset(std::move(name), feature_names_, std::move(feats), std::move(labels),
                 std::move(ids), norm_stats_);
}

std::pair<Dataset, NormStats> normalize(const Dataset& d, const std::optional<NormStats>& stats) {
  const std::size_t f = d.n_features();
  NormStats s;
  if (stats) {
    if (stats->min.size() != f || stats->max.size() != f) {
      throw Error(ErrorCode::StatsLengthMismatch, "expected " + std::to_string(f) +
                                                      " features, stats hold " +
                                                      std::to_string(stats->min.size()));
    }
    s = *stats;
  } else {
    s.min.assign(f, 0.0);
    s.max.assign(f, 0.0);
    for (std::size_t j = 0; j < f && !d.empty(); ++j) {
      s.min[j] = s.max[j] = d.row(0)[j];
    }
    for (std::size_t i = 1; i < d.size(); ++i) {
      auto r = d.row(i);
      for (std::size_t j = 0; j < f; ++j) {
        s.min[j] = std::min(s.min[j], r[j]);
        s.max[j] = std::max(s.max[j], r[j]);
      }
    }
  }

  std::vector<double> out(d.features().size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    auto r = d.row(i);
    for (std::size_t j = 0; j < f; ++j) {
      const double range = s.max[j] - s.min[j];
      out[i * f + j] = range > 0.0 ? (r[j] - s.min[j]) / range : 0.0;
    }
  }
  Dataset scaled(d.name(), d.feature_names(), std::move(out), d.labels(), d.row_ids(), s);
  return {std::move(scaled), std::move(s)};
}

}  // namespace uqbot
