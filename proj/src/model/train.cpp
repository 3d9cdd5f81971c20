#include <algorithm>
#include <cmath>
#include <numeric>

#include "uqbot/error.hpp"
#include "uqbot/kernels.hpp"
#include "uqbot/model.hpp"

namespace uqbot {

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorCode::InvalidSpec, "learning_rate must be finite and >= 0");
  }
  if (batch_size < 1) throw Error(ErrorCode::InvalidSpec, "batch_size must be >= 1");
}

SgdSession::SgdSession(const ArchConfig& arch, std::uint64_t seed)
    : rng_(seed), eval_(arch), scratch_(arch) {}

void SgdSession::step(ModelParams& p, std::span<const double> x, int y, double lr,
                      const Gradient* extra) {
  std::fill(scratch_.values().begin(), scratch_.values().end(), 0.0);
  const DropoutMasks masks = DropoutMasks::draw(p.arch(), rng_);
  eval_.accumulate_gradient(p, x, y, scratch_, 1.0, &masks);
  if (extra) kernels::axpy(1.0, extra->values(), scratch_.values());
  kernels::axpy(-lr, scratch_.values(), p.values());
}

void SgdSession::epoch(ModelParams& p, const Dataset& d, std::vector<std::size_t> rows, double lr,
                       std::size_t batch_size) {
  std::shuffle(rows.begin(), rows.end(), rng_);
  if (batch_size <= 1) {
    for (std::size_t i : rows) step(p, d.row(i), d.label(i), lr);
    return;
  }
  for (std::size_t start = 0; start < rows.size(); start += batch_size) {
    const std::size_t end = std::min(rows.size(), start + batch_size);
    std::fill(scratch_.values().begin(), scratch_.values().end(), 0.0);
    const double scale = 1.0 / double(end - start);
    for (std::size_t k = start; k < end; ++k) {
      const DropoutMasks masks = DropoutMasks::draw(p.arch(), rng_);
      eval_.accumulate_gradient(p, d.row(rows[k]), d.label(rows[k]), scratch_, scale, &masks);
    }
    kernels::axpy(-lr, scratch_.values(), p.values());
  }
}

ModelParams train(const ModelParams& p0, const Dataset& d, const TrainConfig& cfg) {
  if (d.empty()) throw Error(ErrorCode::EmptyDataset, "cannot train on an empty dataset");
  cfg.validate();
  if (d.n_features() != p0.arch().n_features) {
    throw Error(ErrorCode::FeatureLengthMismatch,
                "dataset has " + std::to_string(d.n_features()) + " features, model expects " +
                    std::to_string(p0.arch().n_features));
  }
  ModelParams p = p0;
  if (cfg.epochs == 0) return p;
  SgdSession session(p.arch(), cfg.seed);
  std::vector<std::size_t> rows(d.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    session.epoch(p, d, rows, cfg.learning_rate, cfg.batch_size);
  }
  return p;
}

}  // namespace uqbot
