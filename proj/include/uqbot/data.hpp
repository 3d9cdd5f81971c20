#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace uqbot {

inline constexpr std::size_t kNBaIoTFeatures = 115;
inline constexpr std::size_t kIoT23Features = 10;

/// Per-feature min-max scaling statistics, always computed on a training split.
struct NormStats {
  std::vector<double> min;
  std::vector<double> max;

  std::size_t size() const noexcept { return min.size(); }
  /// Stats that leave every value unchanged, (x - 0) / (1 - 0).
  static NormStats identity(std::size_t n_features);
};

/// Labeled feature matrix: benign = 0, botnet = 1.
///
/// Immutable once constructed. The constructor enforces the invariants (row
/// count matches label count, binary labels, finite features). `row_ids` keeps
/// the index each row had in the originally ingested dataset, so subsets
/// produced by `split` or the defence can be traced back to their source.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::string name, std::vector<std::string> feature_names, std::vector<double> features,
          std::vector<int> labels, std::vector<std::size_t> row_ids = {},
          std::optional<NormStats> norm_stats = std::nullopt);

  const std::string& name() const noexcept { return name_; }
  std::size_t size() const noexcept { return labels_.size(); }
  bool empty() const noexcept { return labels_.empty(); }
  std::size_t n_features() const noexcept { return feature_names_.size(); }

  std::span<const double> row(std::size_t i) const {
    return {features_.data() + i * n_features(), n_features()};
  }
  int label(std::size_t i) const { return labels_[i]; }
  std::size_t row_id(std::size_t i) const { return row_ids_[i]; }

  const std::vector<double>& features() const noexcept { return features_; }
  const std::vector<int>& labels() const noexcept { return labels_; }
  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
  const std::vector<std::size_t>& row_ids() const noexcept { return row_ids_; }
  const std::optional<NormStats>& norm_stats() const noexcept { return norm_stats_; }

  std::size_t count_label(int label) const;

  /// Rows at `indices` (positions in this dataset), in the given order.
  Dataset subset(std::span<const std::size_t> indices, std::string name) const;

 private:
  std::string name_;
  std::vector<std::string> feature_names_;
  std::vector<double> features_;
  std::vector<int> labels_;
  std::vector<std::size_t> row_ids_;
  std::optional<NormStats> norm_stats_;
};

// ---------------------------------------------------------------------------
// CSV

/// Reads a header CSV whose last column is `label`. When `expected_features`
/// is given the feature column count must match it.
Dataset load_csv(const std::filesystem::path& path,
                 std::optional<std::size_t> expected_features = std::nullopt);

/// Writes the canonical CSV; values use shortest round-trip formatting.
void write_csv(const Dataset& d, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Split

struct SplitSpec {
  double train_fraction = 0.70;
  std::uint64_t seed = 0;
  bool stratified = true;
};

struct SplitIndices {
  std::vector<std::size_t> train;  // ascending
  std::vector<std::size_t> test;   // ascending
};

SplitIndices split_indices(const Dataset& d, const SplitSpec& s);
std::pair<Dataset, Dataset> split(const Dataset& d, const SplitSpec& s);

/// Order-sensitive FNV-1a hash of a partition; recorded in reports so that
/// schemes can be shown to share the same split.
std::uint64_t hash_partition(const SplitIndices& idx);

// ---------------------------------------------------------------------------
// Normalization

/// Min-max scaling. Without `stats`, stats are computed from `d` (training
/// split); with `stats`, they are applied as given (held-out split) and values
/// outside [0, 1] are preserved. Constant features map to 0.
std::pair<Dataset, NormStats> normalize(const Dataset& d,
                                        const std::optional<NormStats>& stats = std::nullopt);

// ---------------------------------------------------------------------------
// Synthetic generator

struct SynthSpec {
  std::size_t n_samples = 2000;
  std::size_t n_features = 10;
  double class_separation = 4.0;
  double noise_std = 1.0;
  std::uint64_t seed = 7;
};

/// Two isotropic Gaussian clusters whose means are `class_separation` apart
/// along the all-ones direction. Labels alternate 0, 1, 0, ... so the classes
/// differ in size by at most one.
Dataset synth_generate(const SynthSpec& spec);

}  // namespace uqbot
