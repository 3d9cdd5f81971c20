#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "uqbot/data.hpp"
#include "uqbot/model.hpp"

namespace uqbot {

/// Predictions of one input under M weight draws, in a fixed member order.
struct DistSet {
  std::vector<PredictionDist> dists;
  std::vector<std::uint64_t> member_ids;

  std::size_t size() const noexcept { return dists.size(); }
};

struct UncertaintyScore {
  double entropy = 0.0;
  double mutual_info = 0.0;
  double variance = 0.0;
  double akld = 0.0;
  double aggregate = 0.0;
};

// All values in nats.
double entropy(const PredictionDist& p);
PredictionDist mean_dist(const DistSet& ds);
double mutual_information(const DistSet& ds);
/// Population variance of p_i(class_index) across members.
double variance_value(const DistSet& ds, std::size_t class_index = 1);
/// Mean class-summed KL(p_i || p_{i+1}) over consecutive members; needs M >= 2.
double akld(const DistSet& ds);

/// H of the mean, MI, VV (botnet class) and AKLD; `aggregate` is left at 0.
UncertaintyScore score(const DistSet& ds);

/// Runs every member over every row: result[i] holds row i's DistSet.
std::vector<DistSet> predict_members(std::span<const ModelParams> members,
                                     std::span<const std::uint64_t> member_ids, const Dataset& d);

// ---------------------------------------------------------------------------
// Deep ensembles

struct Ensemble {
  std::vector<ModelParams> members;
  std::vector<std::uint64_t> seeds;
};

struct EnsemblePrediction {
  PredictionDist mean;
  double sigma2 = 0.0;  // spread of the botnet-class probability
  DistSet members;
};

/// Member s is init_params(arch, base_seed + s) trained with seed base_seed + s.
Ensemble ensemble_train(const Dataset& d, const ArchConfig& arch, const TrainConfig& cfg,
                        std::size_t members, std::uint64_t base_seed);

/// Same seeding scheme with a caller-supplied training procedure.
Ensemble ensemble_train(std::size_t members, std::uint64_t base_seed,
                        const std::function<ModelParams(std::uint64_t seed)>& train_member);

EnsemblePrediction ensemble_predict(const Ensemble& e, std::span<const double> x);

// ---------------------------------------------------------------------------
// SWAG (diagonal)

struct SwagPosterior {
  ModelParams theta_swa;
  TensorSet second_moment;
  TensorSet sigma_diag;
  std::size_t epochs = 0;
};

/// One further training epoch applied in place.
using EpochFn = std::function<void(ModelParams&)>;

/// Runs `epochs` further epochs from a pre-trained `p0`, snapshotting the
/// weights at the end of each, and returns the first and second moments and
/// the clamped diagonal variance. `snapshots`, when given, receives every
/// snapshot in order.
SwagPosterior swag_fit(const ModelParams& p0, std::size_t epochs, const EpochFn& epoch,
                       std::vector<ModelParams>* snapshots = nullptr);

/// The epoch is one plain SGD pass over `d` with `cfg`'s learning rate.
SwagPosterior swag_fit(const ModelParams& p0, const Dataset& d, const TrainConfig& cfg,
                       std::size_t epochs, std::vector<ModelParams>* snapshots = nullptr);

/// K independent draws from N(theta_swa, diag(sigma_diag)).
std::vector<ModelParams> swag_sample(const SwagPosterior& sp, std::size_t draws,
                                     std::uint64_t seed);

struct SwagPrediction {
  PredictionDist mean;
  DistSet members;
};

SwagPrediction swag_predict(const SwagPosterior& sp, const ArchConfig& arch,
                            std::span<const double> x, std::size_t draws, std::uint64_t seed);

}  // namespace uqbot
