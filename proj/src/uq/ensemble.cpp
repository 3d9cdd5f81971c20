#include "uqbot/error.hpp"
#include "uqbot/uq.hpp"

namespace uqbot {

Ensemble ensemble_train(std::size_t members, std::uint64_t base_seed,
                        const std::function<ModelParams(std::uint64_t seed)>& train_member) {
  if (members < 1) throw Error(ErrorCode::InvalidSpec, "an ensemble needs at least one member");
  Ensemble e;
  e.members.reserve(members);
  e.seeds.reserve(members);
  for (std::size_t s = 0; s < members; ++s) {
    const std::uint64_t seed = base_seed + s;
    e.members.push_back(train_member(seed));
    e.seeds.push_back(seed);
  }
  return e;
}

Ensemble ensemble_train(const Dataset& d, const ArchConfig& arch, const TrainConfig& cfg,
                        std::size_t members, std::uint64_t base_seed) {
  return ensemble_train(members, base_seed, [&](std::uint64_t seed) {
    TrainConfig member_cfg = cfg;
    member_cfg.seed = seed;
    return train(init_params(arch, seed), d, member_cfg);
  });
}

EnsemblePrediction ensemble_predict(const Ensemble& e, std::span<const double> x) {
  if (e.members.empty()) throw Error(ErrorCode::EmptyResult, "empty ensemble");
  EnsemblePrediction out;
  out.members.member_ids = e.seeds;
  Evaluator ev(e.members.front().arch());
  for (const auto& m : e.members) out.members.dists.push_back(ev.forward(m, x));
  out.mean = mean_dist(out.members);
  out.sigma2 = variance_value(out.members, 1);
  return out;
}

}  // namespace uqbot
