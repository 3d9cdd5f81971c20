#include <algorithm>
#include <array>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "uqbot/defence.hpp"
#include "uqbot/error.hpp"

namespace uqbot {

std::string_view quantifier_name(Quantifier q) noexcept {
  return q == Quantifier::deep_ensemble ? "deep_ensemble" : "swag";
}

Quantifier parse_quantifier(std::string_view name) {
  if (name == "deep_ensemble" || name == "ensemble") return Quantifier::deep_ensemble;
  if (name == "swag") return Quantifier::swag;
  throw Error(ErrorCode::ConfigError, "unknown quantifier '" + std::string(name) + "'");
}

void DefenceConfig::validate() const {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) {
    throw Error(ErrorCode::InvalidSpec, "defence epsilon must lie in [0, 1)");
  }
  if (members < 2) throw Error(ErrorCode::SingleMember, "AKLD needs at least two members");
  if (quantifier == Quantifier::swag && swag_epochs < 1) {
    throw Error(ErrorCode::InvalidT, "SWAG needs at least one epoch");
  }
}

WeightSamples fit_quantifier(const Dataset& d, const DefenceConfig& cfg, const ArchConfig& arch,
                             const TrainConfig& tcfg) {
  WeightSamples ws;
  if (cfg.quantifier == Quantifier::deep_ensemble) {
    Ensemble e = ensemble_train(d, arch, tcfg, cfg.members, cfg.seed);
    ws.members = std::move(e.members);
    ws.ids = std::move(e.seeds);
    return ws;
  }
  TrainConfig base_cfg = tcfg;
  base_cfg.seed = cfg.seed;
  const ModelParams base = train(init_params(arch, cfg.seed), d, base_cfg);
  TrainConfig swa_cfg = tcfg;
  swa_cfg.seed = derive_seed(cfg.seed, "swa-epochs");
  const SwagPosterior sp = swag_fit(base, d, swa_cfg, cfg.swag_epochs);
  ws.members = swag_sample(sp, cfg.members, derive_seed(cfg.seed, "swag-draws"));
  ws.ids.resize(ws.members.size());
  std::iota(ws.ids.begin(), ws.ids.end(), std::uint64_t{0});
  return ws;
}

ScoredDataset score_from_dists(const Dataset& d, std::span<const DistSet> dists) {
  if (dists.size() != d.size()) {
    throw Error(ErrorCode::LengthMismatch, "one DistSet per row required");
  }
  const std::size_t n = d.size();
  ScoredDataset out{d, std::vector<UncertaintyScore>(n), std::vector<std::size_t>(n)};
  for (std::size_t i = 0; i < n; ++i) out.scores[i] = score(dists[i]);

  using Field = double UncertaintyScore::*;
  constexpr std::array<Field, 4> fields{&UncertaintyScore::entropy, &UncertaintyScore::mutual_info,
                                        &UncertaintyScore::variance, &UncertaintyScore::akld};
  for (Field f : fields) {
    if (n == 0) break;
    double lo = out.scores[0].*f;
    double hi = lo;
    for (const auto& s : out.scores) {
      lo = std::min(lo, s.*f);
      hi = std::max(hi, s.*f);
    }
    const double range = hi - lo;
    for (auto& s : out.scores) {
      s.aggregate += range > 0.0 ? (s.*f - lo) / range : 0.0;
    }
  }
  for (auto& s : out.scores) s.aggregate /= double(fields.size());

  std::iota(out.ranking.begin(), out.ranking.end(), std::size_t{0});
  std::stable_sort(out.ranking.begin(), out.ranking.end(), [&](std::size_t a, std::size_t b) {
    return out.scores[a].aggregate > out.scores[b].aggregate;
  });
  return out;
}

ScoredDataset score_samples(const Dataset& d, const DefenceConfig& cfg, const ArchConfig& arch,
                            const TrainConfig& tcfg) {
  if (d.empty()) throw Error(ErrorCode::EmptyDataset, "nothing to score");
  cfg.validate();
  const WeightSamples ws = fit_quantifier(d, cfg, arch, tcfg);
  const auto dists = predict_members(ws.members, ws.ids, d);
  return score_from_dists(d, dists);
}

UmdResult umd_select(ScoredDataset scored, double epsilon) {
  const std::size_t n = scored.base.size();
  const std::size_t pops = poison_count(epsilon, n);
  if (pops >= n) throw Error(ErrorCode::EmptyResult, "defence would remove every row");
  UmdResult r;
  r.removed.assign(scored.ranking.begin(),
                   scored.ranking.begin() + static_cast<std::ptrdiff_t>(pops));
  std::vector<char> drop(n, 0);
  for (std::size_t i : r.removed) drop[i] = 1;
  std::vector<std::size_t> keep;
  keep.reserve(n - pops);
  for (std::size_t i = 0; i < n; ++i) {
    if (!drop[i]) keep.push_back(i);
  }
  r.corrected = scored.base.subset(keep, scored.base.name() + "/corrected");
  r.scored = std::move(scored);
  return r;
}

UmdResult umd(const Dataset& d, const DefenceConfig& cfg, const ArchConfig& arch,
              const TrainConfig& tcfg) {
  cfg.validate();
  if (d.empty() || poison_count(cfg.epsilon, d.size()) >= d.size()) {
    throw Error(ErrorCode::EmptyResult, "defence would remove every row");
  }
  return umd_select(score_samples(d, cfg, arch, tcfg), cfg.epsilon);
}

ModelParams defend_and_retrain(const Dataset& d, const DefenceConfig& cfg, const ArchConfig& arch,
                               const TrainConfig& tcfg) {
  const UmdResult r = umd(d, cfg, arch, tcfg);
  return train(init_params(arch, tcfg.seed), r.corrected, tcfg);
}

void write_sanitization_report(const UmdResult& r, const PoisonSet* poison,
                               const std::filesystem::path& path) {
  std::vector<char> in_poison;
  if (poison) {
    in_poison.assign(r.scored.base.size(), 0);
    for (std::size_t i : poison->indices) {
      if (i < in_poison.size()) in_poison[i] = 1;
    }
  }
  nlohmann::json rows = nlohmann::json::array();
  std::size_t hits = 0;
  for (std::size_t i : r.removed) {
    const auto& s = r.scored.scores[i];
    nlohmann::json row{{"index", i},
                       {"row_id", r.scored.base.row_id(i)},
                       {"entropy", s.entropy},
                       {"mutual_info", s.mutual_info},
                       {"variance", s.variance},
                       {"akld", s.akld},
                       {"aggregate", s.aggregate}};
    if (poison) {
      row["in_poison_set"] = in_poison[i] != 0;
      hits += in_poison[i] ? 1 : 0;
    }
    rows.push_back(std::move(row));
  }
  nlohmann::json doc{{"removed_count", r.removed.size()},
                     {"kept_count", r.corrected.size()},
                     {"removed", std::move(rows)}};
  if (poison) {
    doc["poison_size"] = poison->indices.size();
    doc["poison_removed"] = hits;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

}  // namespace uqbot
