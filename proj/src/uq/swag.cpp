#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "uqbot/error.hpp"
#include "uqbot/kernels.hpp"
#include "uqbot/uq.hpp"

namespace uqbot {

SwagPosterior swag_fit(const ModelParams& p0, std::size_t epochs, const EpochFn& epoch,
                       std::vector<ModelParams>* snapshots) {
  if (epochs < 1) throw Error(ErrorCode::InvalidT, "SWAG needs at least one epoch");
  ModelParams p = p0;
  SwagPosterior sp;
  sp.epochs = epochs;
  sp.theta_swa = ModelParams(p0.arch(), p0.seed);
  sp.second_moment = TensorSet(p0.arch());
  sp.sigma_diag = TensorSet(p0.arch());
  auto mean = sp.theta_swa.values();
  auto second = sp.second_moment.values();
  if (snapshots) snapshots->clear();
  // Running means: a constant trajectory leaves the mean at exactly that value
  // and the variance at exactly zero.
  for (std::size_t t = 0; t < epochs; ++t) {
    epoch(p);
    const double a = 1.0 / double(t + 1);
    kernels::lerp(a, p.values(), mean);
    kernels::lerp_sq(a, p.values(), second);
    if (snapshots) snapshots->push_back(p);
  }
  auto var = sp.sigma_diag.values();
  for (std::size_t k = 0; k < mean.size(); ++k) {
    var[k] = std::max(second[k] - mean[k] * mean[k], 0.0);
  }
  return sp;
}

SwagPosterior swag_fit(const ModelParams& p0, const Dataset& d, const TrainConfig& cfg,
                       std::size_t epochs, std::vector<ModelParams>* snapshots) {
  if (d.empty()) throw Error(ErrorCode::EmptyDataset, "SWAG needs training data");
  cfg.validate();
  SgdSession session(p0.arch(), cfg.seed);
  std::vector<std::size_t> rows(d.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return swag_fit(
      p0, epochs,
      [&](ModelParams& p) { session.epoch(p, d, rows, cfg.learning_rate, cfg.batch_size); },
      snapshots);
}

std::vector<ModelParams> swag_sample(const SwagPosterior& sp, std::size_t draws,
                                     std::uint64_t seed) {
  if (draws < 1) throw Error(ErrorCode::InvalidK, "need at least one SWAG draw");
  Rng rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> stddev(sp.sigma_diag.size());
  std::transform(sp.sigma_diag.values().begin(), sp.sigma_diag.values().end(), stddev.begin(),
                 [](double v) { return std::sqrt(v); });
  std::vector<ModelParams> out;
  out.reserve(draws);
  for (std::size_t k = 0; k < draws; ++k) {
    ModelParams w = sp.theta_swa;
    auto v = w.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double noise = z(rng);
      if (stddev[i] > 0.0) v[i] += stddev[i] * noise;
    }
    out.push_back(std::move(w));
  }
  return out;
}

SwagPrediction swag_predict(const SwagPosterior& sp, const ArchConfig& arch,
                            std::span<const double> x, std::size_t draws, std::uint64_t seed) {
  if (!(sp.theta_swa.arch() == arch)) {
    throw Error(ErrorCode::InvalidArch, "posterior built for a different architecture");
  }
  const auto samples = swag_sample(sp, draws, seed);
  SwagPrediction out;
  Evaluator ev(arch);
  for (std::size_t k = 0; k < samples.size(); ++k) {
    out.members.dists.push_back(ev.forward(samples[k], x));
    out.members.member_ids.push_back(k);
  }
  out.mean = mean_dist(out.members);
  return out;
}

}  // namespace uqbot
