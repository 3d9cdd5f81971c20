#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>

#include "uqbot/error.hpp"
#include "uqbot/experiment.hpp"
#include "uqbot/kernels.hpp"
#include "uqbot/rng.hpp"
#include "uqbot/uq.hpp"

namespace uqbot {
namespace {

struct Prepared {
  Dataset train;
  Dataset test;
  SplitIndices split;
  ArchConfig arch;
};

Prepared prepare(const ExperimentConfig& cfg, const SeedPlan& seeds) {
  Dataset raw;
  if (cfg.dataset.kind == DatasetSource::Kind::csv) {
    raw = load_csv(cfg.dataset.path, cfg.dataset.expected_features);
  } else {
    SynthSpec spec = cfg.dataset.synth;
    if (!cfg.dataset.synth_seed_set) spec.seed = seeds.data;
    raw = synth_generate(spec);
  }
  Prepared p;
  p.split = split_indices(raw, SplitSpec{cfg.train_fraction, seeds.split, cfg.stratified});
  auto [train_norm, stats] = normalize(raw.subset(p.split.train, raw.name() + "/train"));
  auto [test_norm, unused] = normalize(raw.subset(p.split.test, raw.name() + "/test"), stats);
  p.train = std::move(train_norm);
  p.test = std::move(test_norm);
  p.arch = cfg.arch;
  p.arch.n_features = raw.n_features();
  p.arch.validate();
  return p;
}

TrainConfig seeded(const TrainConfig& base, std::uint64_t seed) {
  TrainConfig t = base;
  t.seed = seed;
  return t;
}

AttackConfig attack_for(const ExperimentConfig& cfg, std::uint64_t seed) {
  AttackConfig a = cfg.attack.value_or(AttackConfig{});
  a.seed = seed;
  a.learning_rate = cfg.train.learning_rate;
  return a;
}

SchemeResult evaluate(std::string name, const ModelParams& model, const Dataset& test,
                      std::uint64_t seed) {
  SchemeResult r;
  r.scheme = std::move(name);
  r.seed = seed;
  r.confusion = confusion(predict_labels(model, test), test.labels());
  r.metrics = metrics(r.confusion);
  return r;
}

UncertaintySummary summarize(const std::vector<DistSet>& dists) {
  UncertaintySummary s;
  if (dists.empty()) return s;
  for (const auto& ds : dists) {
    const UncertaintyScore u = score(ds);
    s.entropy += u.entropy;
    s.mutual_info += u.mutual_info;
    s.variance += u.variance;
    s.akld += u.akld;
  }
  const double inv = 1.0 / double(dists.size());
  s.entropy *= inv;
  s.mutual_info *= inv;
  s.variance *= inv;
  s.akld *= inv;
  return s;
}

double mean_accuracy(const std::vector<DistSet>& dists, const Dataset& test) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < dists.size(); ++i) {
    ok += mean_dist(dists[i]).argmax() == test.label(i) ? 1 : 0;
  }
  return dists.empty() ? 0.0 : double(ok) / double(dists.size());
}

std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// How one scheme produces a model from a seed, and how it continues training
// for SWAG.
struct SchemeProcedure {
  std::string name;
  std::function<ModelParams(std::uint64_t seed)> train_from_seed;
  std::function<void(SgdSession&, ModelParams&)> epoch;
};

struct Runner {
  const ExperimentConfig& cfg;
  const RunOptions& opts;
  SeedPlan seeds;
  Prepared data;

  Runner(const ExperimentConfig& c, const RunOptions& o)
      : cfg(c), opts(o), seeds(SeedPlan::derive(c.master_seed)), data(prepare(c, seeds)) {}

  std::vector<std::size_t> all_rows(const Dataset& d) const {
    std::vector<std::size_t> rows(d.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return rows;
  }

  ModelParams train_clean(const Dataset& d, std::uint64_t seed) const {
    return train(init_params(data.arch, seed), d, seeded(cfg.train, seed));
  }

  WbaResult train_attacked(std::uint64_t seed, double epsilon) const {
    AttackConfig a = attack_for(cfg, seed);
    a.epsilon = epsilon;
    return wba(init_params(data.arch, seed), data.train, seeded(cfg.train, seed), a);
  }

  SchemeProcedure clean_procedure(std::string name, const Dataset& d) const {
    const std::vector<std::size_t> rows = all_rows(d);
    return {std::move(name), [this, &d](std::uint64_t s) { return train_clean(d, s); },
            [this, &d, rows](SgdSession& session, ModelParams& p) {
              session.epoch(p, d, rows, cfg.train.learning_rate, cfg.train.batch_size);
            }};
  }

  SchemeProcedure attacked_procedure(const PoisonSet& poison) const {
    return {"wba",
            [this](std::uint64_t s) { return train_attacked(s, cfg.attack->epsilon).model; },
            [this, &poison](SgdSession& session, ModelParams& p) {
              wba_pass(session, p, data.train, poison, cfg.train.learning_rate);
            }};
  }

  WeightSamples quantify(const SchemeProcedure& proc, const ModelParams& scheme_model,
                         Quantifier q) const {
    WeightSamples ws;
    if (q == Quantifier::deep_ensemble) {
      Ensemble e = ensemble_train(cfg.quantifiers.members, seeds.ensemble, proc.train_from_seed);
      ws.members = std::move(e.members);
      ws.ids = std::move(e.seeds);
      return ws;
    }
    SgdSession session(data.arch, derive_seed(seeds.swag, proc.name));
    const SwagPosterior sp =
        swag_fit(scheme_model, cfg.quantifiers.swag_epochs,
                 [&](ModelParams& p) { proc.epoch(session, p); });
    ws.members = swag_sample(sp, cfg.quantifiers.swag_draws, derive_seed(seeds.swag, "draws"));
    ws.ids.resize(ws.members.size());
    std::iota(ws.ids.begin(), ws.ids.end(), std::uint64_t{0});
    return ws;
  }

  void add_quantifiers(ExperimentReport& report, SchemeResult& scheme,
                       const SchemeProcedure& proc, const ModelParams& model) const {
    for (Quantifier q : cfg.quantifiers.kinds) {
      const WeightSamples ws = quantify(proc, model, q);
      const auto dists = predict_members(ws.members, ws.ids, data.test);
      QuantifierResult qr;
      qr.scheme = proc.name;
      qr.quantifier = std::string(quantifier_name(q));
      qr.accuracy = mean_accuracy(dists, data.test);
      qr.uncertainty = summarize(dists);
      qr.member_ids = ws.ids;
      if (!scheme.uncertainty) scheme.uncertainty = qr.uncertainty;
      report.quantifiers.push_back(std::move(qr));
      if (opts.write_files && opts.per_sample_scores) {
        std::filesystem::create_directories(cfg.output_dir / "samples");
        write_uncertainty_csv(score_from_dists(data.test, dists),
                              cfg.output_dir / "samples" /
                                  (proc.name + "_" + std::string(quantifier_name(q)) + ".csv"));
      }
    }
  }

  ExperimentReport skeleton() const {
    ExperimentReport r;
    r.config_text = cfg.source_text;
    r.overrides = cfg.overrides;
    r.seeds = seeds;
    r.dataset_name = data.train.name().substr(0, data.train.name().rfind('/'));
    r.n_rows = data.train.size() + data.test.size();
    r.n_features = data.arch.n_features;
    r.train_size = data.train.size();
    r.test_size = data.test.size();
    r.split_hash = hex64(hash_partition(data.split));
    r.kernel_isa = std::string(kernels::isa_name(kernels::active().isa));
    return r;
  }

  void save_model(const ModelParams& p, const std::string& name) const {
    if (!opts.write_files) return;
    std::filesystem::create_directories(cfg.output_dir / "models");
    save_checkpoint(p, cfg.output_dir / "models" / (name + ".json"));
  }

  void run_sweep_points(ExperimentReport& report) const {
    for (double eps : cfg.sweep) {
      const double acc = accuracy(train_attacked(seeds.model, eps).model, data.test);
      report.sweep.push_back({eps, acc});
    }
  }

  void run_repeats(ExperimentReport& report) const {
    for (std::size_t k = 1; k < cfg.repeats; ++k) {
      RepeatResult rr;
      rr.repeat = k;
      rr.master_seed = derive_seed(cfg.master_seed, "repeat/" + std::to_string(k));
      const SeedPlan s = SeedPlan::derive(rr.master_seed);
      rr.accuracy.emplace_back("no_attack", accuracy(train_clean(data.train, s.model), data.test));
      if (cfg.attack) {
        AttackConfig a = attack_for(cfg, s.model);
        rr.accuracy.emplace_back(
            "wba", accuracy(wba(init_params(data.arch, s.model), data.train,
                                seeded(cfg.train, s.model), a)
                                .model,
                            data.test));
      }
      if (cfg.defence) {
        DefenceConfig dc = *cfg.defence;
        dc.seed = s.defence;
        const UmdResult u = umd(data.train, dc, data.arch, seeded(cfg.train, s.model));
        rr.accuracy.emplace_back("umd", accuracy(train_clean(u.corrected, s.model), data.test));
      }
      report.repeats.push_back(std::move(rr));
    }
  }

  ExperimentReport run_all() const {
    ExperimentReport report = skeleton();

    const ModelParams clean = train_clean(data.train, seeds.model);
    save_model(clean, "no_attack");
    SchemeResult clean_result = evaluate("no_attack", clean, data.test, seeds.model);
    add_quantifiers(report, clean_result, clean_procedure("no_attack", data.train), clean);
    report.schemes.push_back(std::move(clean_result));

    std::optional<WbaResult> attacked;
    if (cfg.attack) {
      attacked = train_attacked(seeds.model, cfg.attack->epsilon);
      save_model(attacked->model, "wba");
      report.poison_size = attacked->poison.indices.size();
      if (opts.write_files) {
        std::filesystem::create_directories(cfg.output_dir);
        write_poison_csv(attacked->poison, data.train, cfg.output_dir / "poison.csv");
      }
      SchemeResult res = evaluate("wba", attacked->model, data.test, seeds.model);
      add_quantifiers(report, res, attacked_procedure(attacked->poison), attacked->model);
      report.schemes.push_back(std::move(res));
    }

    if (cfg.defence) {
      DefenceConfig dc = *cfg.defence;
      dc.seed = seeds.defence;
      const UmdResult u = umd(data.train, dc, data.arch, seeded(cfg.train, seeds.model));
      if (attacked) {
        std::vector<char> in_poison(data.train.size(), 0);
        for (std::size_t i : attacked->poison.indices) in_poison[i] = 1;
        std::size_t hits = 0;
        for (std::size_t i : u.removed) hits += in_poison[i] ? 1 : 0;
        report.poison_removed = hits;
      }
      if (opts.write_files) {
        std::filesystem::create_directories(cfg.output_dir);
        write_sanitization_report(u, attacked ? &attacked->poison : nullptr,
                                  cfg.output_dir / "sanitization.json");
      }
      const ModelParams defended = train_clean(u.corrected, seeds.model);
      save_model(defended, "umd");
      SchemeResult res = evaluate("umd", defended, data.test, seeds.model);
      add_quantifiers(report, res, clean_procedure("umd", u.corrected), defended);
      report.schemes.push_back(std::move(res));
    }

    run_sweep_points(report);
    run_repeats(report);
    return report;
  }

  ExperimentReport run_sweep_only() const {
    ExperimentReport report = skeleton();
    const ModelParams clean = train_clean(data.train, seeds.model);
    report.schemes.push_back(evaluate("no_attack", clean, data.test, seeds.model));
    run_sweep_points(report);
    return report;
  }
};

void finish(const ExperimentReport& report, const ExperimentConfig& cfg, const RunOptions& opts) {
  if (!opts.write_files) return;
  std::filesystem::create_directories(cfg.output_dir);
  write_report(report, cfg.output_dir / "report.json");
  emit_charts(report, cfg.output_dir);
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  const Runner runner(cfg, opts);
  ExperimentReport report = runner.run_all();
  finish(report, cfg, opts);
  return report;
}

ExperimentReport run_sweep(const ExperimentConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  if (cfg.sweep.empty()) throw Error(ErrorCode::ConfigError, "no sweep values configured");
  const Runner runner(cfg, opts);
  ExperimentReport report = runner.run_sweep_only();
  finish(report, cfg, opts);
  return report;
}

}  // namespace uqbot
