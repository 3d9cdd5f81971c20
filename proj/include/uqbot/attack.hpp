#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "uqbot/data.hpp"
#include "uqbot/model.hpp"

namespace uqbot {

// Weight-based poisoning attack (WBA).
//
// The attacker ranks training rows by loss under the freshly initialized
// model and takes the top ceil(eps * N) as the poison set. Every pass then
// runs plain SGD over the remaining rows followed by one step per poison row
// that adds the gradient of the mean poison-set loss to the per-sample
// gradient, so the final weights lean towards the high-loss rows. The data
// itself is never modified; the output is the corrupted model.

struct AttackConfig {
  double epsilon = 0.10;
  double learning_rate = 0.01;
  std::uint64_t seed = 0;
  /// 0 means "same as the training epochs".
  std::size_t passes = 0;

  void validate() const;
};

struct PoisonSet {
  std::vector<std::size_t> indices;  // rows of the training set
  std::vector<double> losses;        // non-increasing
};

/// ceil(eps * n), robust to representation error in eps (0.07 * 100 is 7).
std::size_t poison_count(double epsilon, std::size_t n);

/// Top-P rows by eval-mode loss; equal losses go to the lower index first.
PoisonSet select_poison(const ModelParams& p, const Dataset& d_train, double epsilon);

/// One attack pass: SGD over the rows outside `poison` (phase 1), then one
/// boosted step per poison row (phase 2). Both phases are shuffled from the
/// session's stream.
void wba_pass(SgdSession& session, ModelParams& p, const Dataset& d, const PoisonSet& poison,
              double learning_rate);

/// A single pass seeded from `cfg.seed`.
ModelParams wba_update(const ModelParams& p, const Dataset& d_clean, const PoisonSet& poison,
                       const AttackConfig& cfg);

struct WbaResult {
  ModelParams model;
  PoisonSet poison;
};

/// Full attack from `w0`: select once, then `passes` update passes.
WbaResult wba(const ModelParams& w0, const Dataset& d_train, const TrainConfig& tcfg,
              const AttackConfig& acfg);

/// Full attack from init_params(arch, tcfg.seed).
WbaResult wba(const Dataset& d_train, const ArchConfig& arch, const TrainConfig& tcfg,
              const AttackConfig& acfg);

/// Audit file: header "index,row_id,loss", one line per poison row.
void write_poison_csv(const PoisonSet& poison, const Dataset& d_train,
                      const std::filesystem::path& path);

}  // namespace uqbot
