#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "uqbot/attack.hpp"
#include "uqbot/data.hpp"
#include "uqbot/defence.hpp"
#include "uqbot/eval.hpp"
#include "uqbot/model.hpp"

namespace uqbot {

// ---------------------------------------------------------------------------
// Configuration

struct DatasetSource {
  enum class Kind { synth, csv } kind = Kind::synth;
  std::filesystem::path path;
  std::optional<std::size_t> expected_features;
  SynthSpec synth;  // synth.seed is derived from the master seed when unset in the file
  bool synth_seed_set = false;
};

struct QuantifierSettings {
  std::vector<Quantifier> kinds{Quantifier::deep_ensemble, Quantifier::swag};
  std::size_t members = 10;      // S
  std::size_t swag_epochs = 10;  // T
  std::size_t swag_draws = 10;   // K
};

struct ExperimentConfig {
  DatasetSource dataset;
  double train_fraction = 0.70;
  bool stratified = true;
  ArchConfig arch;  // n_features is taken from the data
  TrainConfig train;
  std::optional<AttackConfig> attack = AttackConfig{};
  std::optional<DefenceConfig> defence = DefenceConfig{};
  bool sanitize_clean = false;
  QuantifierSettings quantifiers;
  std::vector<double> sweep;
  std::size_t repeats = 1;
  std::filesystem::path output_dir = "uqbot-out";
  std::uint64_t master_seed = 7;

  /// The text the config was parsed from plus any overrides, in order.
  std::string source_text;
  std::vector<std::string> overrides;

  void validate() const;
};

/// Parses `key = value` lines; `#` starts a comment. Unknown keys throw
/// ConfigError.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Applies one `key=value` override and records it.
void apply_override(ExperimentConfig& cfg, std::string_view assignment);

/// The built-in desk-scale setup: synthetic N=2000, F=10, separation 4,
/// noise 1, data seed 7, LSTM, all three schemes, both quantifiers.
std::string default_config_text();

// ---------------------------------------------------------------------------
// Seeds

/// Per-component seeds derived from the master seed by label.
struct SeedPlan {
  std::uint64_t master = 0;
  std::uint64_t data = 0;
  std::uint64_t split = 0;
  std::uint64_t model = 0;  // init and SGD stream of the scheme models
  std::uint64_t defence = 0;
  std::uint64_t ensemble = 0;
  std::uint64_t swag = 0;

  static SeedPlan derive(std::uint64_t master);
  std::vector<std::pair<std::string, std::uint64_t>> labeled() const;
};

// ---------------------------------------------------------------------------
// Report

struct UncertaintySummary {
  double entropy = 0.0;
  double mutual_info = 0.0;
  double variance = 0.0;
  double akld = 0.0;
};

struct SchemeResult {
  std::string scheme;  // no_attack | wba | umd
  ConfusionMatrix confusion;
  MetricsReport metrics;
  std::optional<UncertaintySummary> uncertainty;
  std::uint64_t seed = 0;
};

struct QuantifierResult {
  std::string scheme;
  std::string quantifier;
  double accuracy = 0.0;
  UncertaintySummary uncertainty;
  std::vector<std::uint64_t> member_ids;
};

struct SweepPoint {
  double epsilon = 0.0;
  double accuracy = 0.0;
};

struct RepeatResult {
  std::size_t repeat = 0;
  std::uint64_t master_seed = 0;
  std::vector<std::pair<std::string, double>> accuracy;  // scheme -> accuracy
};

struct ExperimentReport {
  std::string config_text;
  std::vector<std::string> overrides;
  SeedPlan seeds;
  std::string dataset_name;
  std::size_t n_rows = 0;
  std::size_t n_features = 0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::string split_hash;
  std::string kernel_isa;
  std::vector<SchemeResult> schemes;
  std::vector<QuantifierResult> quantifiers;
  std::vector<SweepPoint> sweep;
  std::vector<RepeatResult> repeats;
  std::optional<std::size_t> poison_size;
  std::optional<std::size_t> poison_removed;

  const SchemeResult* find_scheme(std::string_view name) const;
  const QuantifierResult* find_quantifier(std::string_view scheme,
                                          std::string_view quantifier) const;
};

nlohmann::json to_json(const ExperimentReport& r);
ExperimentReport report_from_json(const nlohmann::json& j);
std::string report_text(const ExperimentReport& r);  // canonical serialized form
void write_report(const ExperimentReport& r, const std::filesystem::path& path);
ExperimentReport read_report(const std::filesystem::path& path);

/// Human-readable tables for the terminal.
std::string format_report(const ExperimentReport& r);

// ---------------------------------------------------------------------------
// Runs

struct RunOptions {
  bool write_files = true;
  /// Per-sample uncertainty CSVs for the test split.
  bool per_sample_scores = true;
};

/// No Attack -> WBA -> UMD on one shared split, then the quantifier
/// comparison and the sweep when configured. Writes report.json and the
/// chart CSVs into cfg.output_dir unless disabled.
ExperimentReport run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

/// Baseline plus one WBA run per sweep epsilon.
ExperimentReport run_sweep(const ExperimentConfig& cfg, const RunOptions& opts = {});

/// fpr_tpr.csv, sweep.csv, uncertainty.csv with fixed column order.
void emit_charts(const ExperimentReport& r, const std::filesystem::path& dir);

/// Reads fpr_tpr.csv back: (scheme, fpr, tpr) rows.
std::vector<std::tuple<std::string, double, double>> read_fpr_tpr_csv(
    const std::filesystem::path& path);
std::vector<SweepPoint> read_sweep_csv(const std::filesystem::path& path);

/// Per-sample export: id,H,MI,VV,AKLD,aggregate.
void write_uncertainty_csv(const ScoredDataset& scored, const std::filesystem::path& path);

}  // namespace uqbot
