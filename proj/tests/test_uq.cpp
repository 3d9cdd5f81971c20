#include <doctest.h>

#include <cmath>
#include <random>

#include "uqbot/error.hpp"
#include "uqbot/uq.hpp"

using namespace uqbot;

namespace {

const double kLn2 = std::log(2.0);

DistSet make_set(std::initializer_list<double> p1s) {
  DistSet ds;
  std::uint64_t id = 0;
  for (double p1 : p1s) {
    ds.dists.push_back(PredictionDist{{1.0 - p1, p1}});
    ds.member_ids.push_back(id++);
  }
  return ds;
}

// A model whose prediction ignores x and equals (1 - p1, p1).
ModelParams constant_model(double p1) {
  ArchConfig arch;
  arch.n_features = 3;
  ModelParams p(arch, 0);
  for (auto& v : p.values()) v = 0.0;
  p.tensor("dense.bias")[1] = std::log(p1 / (1.0 - p1));
  return p;
}

DistSet random_set(std::mt19937_64& rng, std::size_t m) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  DistSet ds;
  for (std::size_t i = 0; i < m; ++i) {
    double p1 = u(rng);
    if (i % 7 == 3) p1 = 0.0;  // include degenerate members
    if (i % 11 == 5) p1 = 1.0;
    ds.dists.push_back(PredictionDist{{1.0 - p1, p1}});
    ds.member_ids.push_back(i);
  }
  return ds;
}

}  // namespace

TEST_CASE("entropy hand values") {
  CHECK(entropy(PredictionDist{{0.5, 0.5}}) == doctest::Approx(0.693147).epsilon(1e-6));
  CHECK(entropy(PredictionDist{{1.0, 0.0}}) == 0.0);
  CHECK(std::abs(entropy(PredictionDist{{0.9, 0.1}}) - 0.325083) < 1e-6);
}

TEST_CASE("mutual information hand values") {
  CHECK(std::abs(mutual_information(make_set({1.0, 0.0})) - 0.693147) < 1e-6);
  CHECK(std::abs(mutual_information(make_set({0.3, 0.3, 0.3}))) < 1e-15);
  CHECK(mutual_information(make_set({0.3})) == 0.0);
}

TEST_CASE("variance value hand values") {
  CHECK(variance_value(make_set({1.0, 0.0})) == doctest::Approx(0.25));
  CHECK(variance_value(make_set({0.4, 0.4, 0.4})) == doctest::Approx(0.0));
  CHECK(variance_value(make_set({0.4})) == 0.0);
  CHECK(variance_value(make_set({0.2, 0.4}), 0) == doctest::Approx(0.01));
}

TEST_CASE("AKLD hand values and order sensitivity") {
  const DistSet fwd = make_set({0.1, 0.5});  // (0.9, 0.1) then (0.5, 0.5)
  // 0.9 ln 1.8 + 0.1 ln 0.2
  CHECK(std::abs(akld(fwd) - 0.3680642) < 1e-6);
  CHECK(akld(fwd) == doctest::Approx(0.9 * std::log(1.8) + 0.1 * std::log(0.2)));
  const DistSet rev = make_set({0.5, 0.1});
  CHECK(akld(rev) == doctest::Approx(0.5 * std::log(0.5 / 0.9) + 0.5 * std::log(5.0)));
  CHECK(akld(rev) != doctest::Approx(akld(fwd)));
  CHECK(akld(make_set({0.3, 0.3, 0.3})) == 0.0);
  CHECK_THROWS_AS(akld(make_set({0.3})), Error);
}

TEST_CASE("score bundles the four measures") {
  const UncertaintyScore s = score(make_set({1.0, 0.0}));
  CHECK(s.entropy == doctest::Approx(kLn2));
  CHECK(s.mutual_info == doctest::Approx(kLn2));
  CHECK(s.variance == doctest::Approx(0.25));
  CHECK(s.akld > 20.0);  // floored log of 1e-12
  CHECK(s.aggregate == 0.0);
}

TEST_CASE("metric bounds over random DistSets") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t m = 2 + trial % 12;
    const DistSet ds = random_set(rng, m);
    const PredictionDist mean = mean_dist(ds);
    const double h = entropy(mean);
    CHECK(h >= 0.0);
    CHECK(h <= kLn2 + 1e-15);
    const double mi = mutual_information(ds);
    CHECK(mi >= -1e-12);
    CHECK(mi <= h + 1e-12);

    // Two-pass textbook population variance as the oracle.
    double mu = 0.0;
    for (const auto& d : ds.dists) mu += d.probs[1];
    mu /= double(m);
    double var = 0.0;
    for (const auto& d : ds.dists) var += (d.probs[1] - mu) * (d.probs[1] - mu);
    var /= double(m);
    const double vv = variance_value(ds);
    CHECK(vv >= -1e-12);
    CHECK(std::abs(vv - var) < 1e-12);

    CHECK(akld(ds) >= 0.0);
    DistSet same = ds;
    for (auto& d : same.dists) d = ds.dists[0];
    CHECK(akld(same) == 0.0);
    CHECK(std::abs(mutual_information(same)) < 1e-12);
  }
}

TEST_CASE("ensemble_predict arithmetic") {
  Ensemble e;
  e.members = {constant_model(0.2), constant_model(0.4)};
  e.seeds = {0, 1};
  const std::vector<double> x{0.1, 0.2, 0.3};
  const EnsemblePrediction pred = ensemble_predict(e, x);
  CHECK(pred.mean.probs[0] == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(pred.mean.probs[1] == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(pred.sigma2 == doctest::Approx(0.01).epsilon(1e-9));
  CHECK(pred.members.size() == 2);

  e.members = {constant_model(0.35), constant_model(0.35), constant_model(0.35)};
  e.seeds = {0, 1, 2};
  CHECK(std::abs(ensemble_predict(e, x).sigma2) < 1e-15);
}

TEST_CASE("ensemble mean stays inside the member hull") {
  const Dataset d = synth_generate({30, 4, 2.0, 1.0, 4});
  ArchConfig arch;
  arch.n_features = 4;
  Ensemble e;
  for (std::uint64_t s = 0; s < 5; ++s) {
    e.members.push_back(init_params(arch, s));
    e.seeds.push_back(s);
  }
  for (std::size_t i = 0; i < d.size(); ++i) {
    const EnsemblePrediction pred = ensemble_predict(e, d.row(i));
    double lo = 1.0, hi = 0.0;
    for (const auto& m : pred.members.dists) {
      lo = std::min(lo, m.probs[1]);
      hi = std::max(hi, m.probs[1]);
    }
    CHECK(pred.mean.probs[1] >= lo - 1e-15);
    CHECK(pred.mean.probs[1] <= hi + 1e-15);
  }
}

TEST_CASE("ensemble_train seeds members deterministically") {
  const Dataset d = synth_generate({40, 4, 4.0, 1.0, 6});
  ArchConfig arch;
  arch.n_features = 4;
  const TrainConfig cfg{0.02, 2, 0, 1};
  const Ensemble a = ensemble_train(d, arch, cfg, 3, 100);
  const Ensemble b = ensemble_train(d, arch, cfg, 3, 100);
  REQUIRE(a.members.size() == 3);
  CHECK(a.seeds == std::vector<std::uint64_t>{100, 101, 102});
  for (std::size_t s = 0; s < 3; ++s) {
    CHECK(a.members[s] == b.members[s]);
    TrainConfig ms = cfg;
    ms.seed = 100 + s;
    CHECK(a.members[s] == train(init_params(arch, 100 + s), d, ms));
  }
  CHECK(ensemble_train(d, arch, cfg, 1, 5).members.size() == 1);
}

TEST_CASE("SWAG moments on hand-set snapshots") {
  ArchConfig arch;
  arch.n_features = 3;
  ModelParams p0(arch, 0);
  int call = 0;
  const SwagPosterior sp = swag_fit(p0, 2, [&](ModelParams& p) {
    for (auto& v : p.values()) v = call == 0 ? 1.0 : 3.0;
    ++call;
  });
  for (double v : sp.theta_swa.values()) CHECK(v == 2.0);
  for (double v : sp.second_moment.values()) CHECK(v == 5.0);
  for (double v : sp.sigma_diag.values()) CHECK(v == 1.0);
  CHECK(sp.epochs == 2);
  CHECK_THROWS_AS(swag_fit(p0, 0, [](ModelParams&) {}), Error);
}

TEST_CASE("SWAG with a zero learning rate collapses to the start point") {
  const Dataset d = synth_generate({30, 4, 4.0, 1.0, 2});
  ArchConfig arch;
  arch.n_features = 4;
  const ModelParams c = init_params(arch, 8);
  const SwagPosterior sp = swag_fit(c, d, TrainConfig{0.0, 1, 3, 1}, 4);
  CHECK(std::equal(sp.theta_swa.values().begin(), sp.theta_swa.values().end(),
                   c.values().begin(), [](double a, double b) {
                     return std::abs(a - b) <= 1e-15 * (1 + std::abs(b));
                   }));
  for (double v : sp.sigma_diag.values()) CHECK(v == 0.0);

  // Zero variance: every draw is theta_SWA and the members agree.
  const auto draws = swag_sample(sp, 4, 9);
  for (const auto& w : draws) CHECK(w.values().size() == sp.theta_swa.size());
  for (const auto& w : draws) {
    CHECK(std::equal(w.values().begin(), w.values().end(), sp.theta_swa.values().begin()));
  }
  const SwagPrediction pred = swag_predict(sp, arch, d.row(0), 4, 9);
  for (const auto& m : pred.members.dists) CHECK(m == pred.members.dists[0]);
}

TEST_CASE("SWAG moments equal a streaming oracle over recorded snapshots") {
  const Dataset d = synth_generate({60, 5, 4.0, 1.0, 12});
  ArchConfig arch;
  arch.n_features = 5;
  const ModelParams p0 = train(init_params(arch, 1), d, TrainConfig{0.05, 2, 1, 1});
  std::vector<ModelParams> snaps;
  const std::size_t T = 6;
  const SwagPosterior sp = swag_fit(p0, d, TrainConfig{0.05, 1, 77, 1}, T, &snaps);
  REQUIRE(snaps.size() == T);
  for (std::size_t i = 0; i < sp.theta_swa.size(); ++i) {
    // Welford running mean plus a directly accumulated second moment.
    long double mean = 0.0L, sq = 0.0L;
    for (std::size_t t = 0; t < T; ++t) {
      const long double v = snaps[t].values()[i];
      mean += (v - mean) / static_cast<long double>(t + 1);
      sq += v * v;
    }
    sq /= static_cast<long double>(T);
    const long double var = std::max(0.0L, sq - mean * mean);
    CHECK(std::abs(double(mean) - sp.theta_swa.values()[i]) < 1e-9);
    CHECK(std::abs(double(sq) - sp.second_moment.values()[i]) < 1e-9);
    CHECK(std::abs(double(var) - sp.sigma_diag.values()[i]) < 1e-9);
    CHECK(sp.sigma_diag.values()[i] >= 0.0);
  }
}

TEST_CASE("SWAG sampling and prediction contracts") {
  const Dataset d = synth_generate({40, 4, 4.0, 1.0, 3});
  ArchConfig arch;
  arch.n_features = 4;
  const SwagPosterior sp = swag_fit(init_params(arch, 2), d, TrainConfig{0.05, 1, 4, 1}, 3);
  const auto a = swag_sample(sp, 5, 10);
  const auto b = swag_sample(sp, 5, 10);
  REQUIRE(a.size() == 5);
  for (std::size_t k = 0; k < 5; ++k) CHECK(a[k] == b[k]);
  CHECK_FALSE(a[0] == a[1]);
  CHECK_THROWS_AS(swag_sample(sp, 0, 1), Error);

  const SwagPrediction one = swag_predict(sp, arch, d.row(0), 1, 3);
  REQUIRE(one.members.size() == 1);
  CHECK(one.mean.probs[1] == doctest::Approx(one.members.dists[0].probs[1]).epsilon(1e-15));
  const SwagPrediction ten = swag_predict(sp, arch, d.row(0), 10, 3);
  CHECK(ten.members.size() == 10);
  CHECK(ten.members.member_ids.back() == 9);
}

TEST_CASE("predict_members returns one DistSet per row in member order") {
  const Dataset d = synth_generate({8, 3, 4.0, 1.0, 3});
  const std::vector<ModelParams> members{constant_model(0.2), constant_model(0.9)};
  const std::vector<std::uint64_t> ids{5, 6};
  const auto sets = predict_members(members, ids, d);
  REQUIRE(sets.size() == 8);
  CHECK(sets[3].member_ids == ids);
  CHECK(sets[3].dists[1].probs[1] == doctest::Approx(0.9));
}
