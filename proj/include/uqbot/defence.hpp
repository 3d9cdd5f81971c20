#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "uqbot/attack.hpp"
#include "uqbot/data.hpp"
#include "uqbot/model.hpp"
#include "uqbot/uq.hpp"

namespace uqbot {

// Uncertainty-metric based defence (UMD).
//
// Every training row is scored with entropy, mutual information, variance
// and AKLD under a posterior approximation fitted to the (possibly attacked)
// training data. The ceil(eps * N) rows with the highest aggregate score are
// removed and the remaining rows, in their original order, form the corrected
// training set.

enum class Quantifier { deep_ensemble, swag };

std::string_view quantifier_name(Quantifier q) noexcept;
Quantifier parse_quantifier(std::string_view name);

struct DefenceConfig {
  double epsilon = 0.10;
  Quantifier quantifier = Quantifier::deep_ensemble;
  /// Ensemble members or SWAG draws.
  std::size_t members = 10;
  /// SWA epochs when `quantifier` is swag.
  std::size_t swag_epochs = 10;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Weight draws from a fitted quantifier, in member-id order.
struct WeightSamples {
  std::vector<ModelParams> members;
  std::vector<std::uint64_t> ids;
};

/// Deep ensemble: members seeded cfg.seed + s. SWAG: a base model trained from
/// init_params(arch, cfg.seed), `swag_epochs` SWA epochs, then `members` draws.
WeightSamples fit_quantifier(const Dataset& d, const DefenceConfig& cfg, const ArchConfig& arch,
                             const TrainConfig& tcfg);

struct ScoredDataset {
  Dataset base;
  std::vector<UncertaintyScore> scores;
  /// Row positions by aggregate, highest first; ties keep the lower index first.
  std::vector<std::size_t> ranking;
};

/// Fills in the aggregate (each measure min-max scaled over the rows, constant
/// measures scale to 0, then averaged) and the ranking.
ScoredDataset score_from_dists(const Dataset& d, std::span<const DistSet> dists);

ScoredDataset score_samples(const Dataset& d, const DefenceConfig& cfg, const ArchConfig& arch,
                            const TrainConfig& tcfg);

struct UmdResult {
  Dataset corrected;
  /// Popped row positions in pop order (highest aggregate first).
  std::vector<std::size_t> removed;
  ScoredDataset scored;
};

/// Pops the ceil(eps * N) highest-aggregate rows. Throws EmptyResult if no
/// row would remain.
UmdResult umd_select(ScoredDataset scored, double epsilon);

UmdResult umd(const Dataset& d, const DefenceConfig& cfg, const ArchConfig& arch,
              const TrainConfig& tcfg);

/// UMD followed by plain training from init_params(arch, tcfg.seed).
ModelParams defend_and_retrain(const Dataset& d, const DefenceConfig& cfg, const ArchConfig& arch,
                               const TrainConfig& tcfg);

/// JSON report of the removed rows: index, source row id, the four raw
/// measures, the aggregate, and (when `poison` is given) whether the row was
/// in the attacker's poison set.
void write_sanitization_report(const UmdResult& r, const PoisonSet* poison,
                               const std::filesystem::path& path);

}  // namespace uqbot
