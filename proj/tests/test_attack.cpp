#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "uqbot/attack.hpp"
#include "uqbot/error.hpp"

using namespace uqbot;

namespace {

ArchConfig tiny_arch(std::size_t features) {
  ArchConfig a;
  a.n_features = features;
  a.hidden_size = 4;
  a.embed_dim = 3;
  return a;
}

ModelParams constant_model(std::size_t features, double p1) {
  ModelParams p(tiny_arch(features), 0);
  for (auto& v : p.values()) v = 0.0;
  p.tensor("dense.bias")[1] = std::log(p1 / (1.0 - p1));
  return p;
}

// Selection by repeated scans for the largest remaining loss; the first
// (lowest) index wins a tie.
std::vector<std::size_t> brute_force_top(const std::vector<double>& losses, std::size_t count) {
  std::vector<char> taken(losses.size(), 0);
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < count; ++k) {
    std::size_t best = losses.size();
    for (std::size_t i = 0; i < losses.size(); ++i) {
      if (taken[i]) continue;
      if (best == losses.size() || losses[i] > losses[best]) best = i;
    }
    taken[best] = 1;
    out.push_back(best);
  }
  return out;
}

}  // namespace

TEST_CASE("poison_count is the exact ceiling for rational epsilons") {
  for (std::size_t n = 1; n <= 300; ++n) {
    for (std::size_t k = 0; k <= 1000; k += 7) {
      const double eps = double(k) / 1000.0;
      const std::size_t expect = (k * n + 999) / 1000;  // integer ceil(k n / 1000)
      CAPTURE(n);
      CAPTURE(k);
      REQUIRE(poison_count(eps, n) == expect);
    }
  }
  CHECK(poison_count(0.07, 100) == 7);
  CHECK(poison_count(0.1, 1400) == 140);
  CHECK(poison_count(1.0, 13) == 13);
}

TEST_CASE("select_poison degenerate epsilons and the hand-ranked toy set") {
  const Dataset d("toy", {"a", "b"}, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8}, {1, 0, 1, 0});
  const ModelParams p = constant_model(2, 0.7);  // loss 0.357 on label 1, 1.204 on label 0
  CHECK(select_poison(p, d, 0.0).indices.empty());
  CHECK(select_poison(p, d, 1.0).indices.size() == 4);

  const PoisonSet half = select_poison(p, d, 0.5);
  CHECK(half.indices == std::vector<std::size_t>{1, 3});
  CHECK(half.losses[0] == doctest::Approx(-std::log(0.3)));

  // Ties resolve to the lower index.
  CHECK(select_poison(p, d, 0.75).indices == std::vector<std::size_t>{1, 3, 0});
  CHECK_THROWS_AS(select_poison(p, d, 1.5), Error);
  CHECK_THROWS_AS(select_poison(constant_model(3, 0.5), d, 0.5), Error);
}

TEST_CASE("select_poison equals the brute-force oracle on small random sets") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 1 + rng() % 200;
    const std::size_t f = 1 + rng() % 4;
    std::vector<double> feats(n * f);
    for (auto& v : feats) v = u(rng);
    std::vector<int> labels(n);
    for (auto& l : labels) l = int(rng() % 2);
    // Duplicate a few rows so exact ties occur.
    for (std::size_t i = 1; i < n; i += 9) {
      std::copy_n(feats.begin() + long((i - 1) * f), f, feats.begin() + long(i * f));
      labels[i] = labels[i - 1];
    }
    std::vector<std::string> names(f, "x");
    const Dataset d("rand", names, feats, labels);
    const ModelParams p = init_params(tiny_arch(f), rng());
    const double eps = u(rng);

    std::vector<double> losses(n);
    for (std::size_t i = 0; i < n; ++i) losses[i] = loss(p, d.row(i), d.label(i));
    const std::size_t count = poison_count(eps, n);
    const PoisonSet got = select_poison(p, d, eps);
    CAPTURE(trial);
    REQUIRE(got.indices.size() == count);
    CHECK(got.indices == brute_force_top(losses, count));
    for (std::size_t k = 0; k < count; ++k) CHECK(got.losses[k] == losses[got.indices[k]]);
    CHECK(std::is_sorted(got.losses.rbegin(), got.losses.rend()));
  }
}

TEST_CASE("wba_update with a zero step or an empty poison set") {
  const Dataset d = synth_generate({50, 4, 4.0, 1.0, 9});
  const ModelParams p = init_params(tiny_arch(4), 3);
  const PoisonSet poison = select_poison(p, d, 0.1);

  AttackConfig frozen;
  frozen.learning_rate = 0.0;
  frozen.seed = 4;
  const ModelParams same = wba_update(p, d, poison, frozen);
  CHECK(std::equal(same.values().begin(), same.values().end(), p.values().begin()));

  AttackConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.seed = 4;
  const ModelParams attacked = wba_update(p, d, PoisonSet{}, cfg);
  CHECK(attacked == train(p, d, TrainConfig{0.05, 1, 4, 1}));
}

TEST_CASE("phase-two step equals lr times the per-sample plus poison-mean gradient") {
  // Single poison row and no clean rows: one pass is w - lr * (g + g).
  ArchConfig arch = tiny_arch(3);
  arch.dropout_rate = 0.0;  // train-mode and eval-mode gradients coincide
  const Dataset d("one", {"a", "b", "c"}, {0.2, 0.9, 0.4}, {1});
  const ModelParams p = init_params(arch, 21);
  const PoisonSet poison{{0}, {loss(p, d.row(0), 1)}};
  AttackConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.seed = 2;
  const ModelParams out = wba_update(p, d, poison, cfg);

  const double h = 1e-6;
  ModelParams q = p;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double w0 = q.values()[i];
    q.values()[i] = w0 + h;
    const double up = loss(q, d.row(0), 1);
    q.values()[i] = w0 - h;
    const double down = loss(q, d.row(0), 1);
    q.values()[i] = w0;
    const double g_fd = (up - down) / (2 * h);
    const double expect = w0 - cfg.learning_rate * (g_fd + g_fd);
    CHECK(out.values()[i] == doctest::Approx(expect).epsilon(1e-7).scale(1.0));
  }
}

TEST_CASE("wba with epsilon 0 is bit-identical to plain training") {
  const Dataset d = synth_generate({80, 5, 4.0, 1.0, 5});
  const ArchConfig arch = tiny_arch(5);
  const TrainConfig tcfg{0.03, 3, 17, 1};
  AttackConfig acfg;
  acfg.epsilon = 0.0;
  acfg.learning_rate = tcfg.learning_rate;
  acfg.seed = tcfg.seed;
  const WbaResult r = wba(d, arch, tcfg, acfg);
  CHECK(r.poison.indices.empty());
  CHECK(r.model == train(init_params(arch, tcfg.seed), d, tcfg));
}

TEST_CASE("wba is deterministic, selects once from the initial model, and counts passes") {
  const Dataset d = synth_generate({60, 4, 4.0, 1.0, 8});
  const ArchConfig arch = tiny_arch(4);
  const TrainConfig tcfg{0.03, 2, 5, 1};
  AttackConfig acfg;
  acfg.epsilon = 0.1;
  acfg.learning_rate = 0.03;
  acfg.seed = 5;
  const WbaResult a = wba(d, arch, tcfg, acfg);
  const WbaResult b = wba(d, arch, tcfg, acfg);
  CHECK(a.model == b.model);
  CHECK(a.poison.indices.size() == 6);
  CHECK(a.poison.indices == select_poison(init_params(arch, 5), d, 0.1).indices);

  AttackConfig one_pass = acfg;
  one_pass.passes = 1;
  const WbaResult c = wba(d, arch, tcfg, one_pass);
  CHECK(c.model == wba_update(init_params(arch, 5), d, c.poison, acfg));

  CHECK_THROWS_AS(wba(Dataset("e", {"a", "b", "c", "d"}, {}, {}), arch, tcfg, acfg), Error);
}

TEST_CASE("poison CSV audit file") {
  const Dataset d("toy", {"a"}, {0.1, 0.2, 0.3}, {1, 0, 1}, {10, 11, 12});
  const PoisonSet ps{{1, 2}, {1.5, 0.25}};
  const auto path = std::filesystem::temp_directory_path() / "uqbot_poison_test.csv";
  write_poison_csv(ps, d, path);
  std::ifstream in(path);
  std::string all((std::istreambuf_iterator<char>(in)), {});
  CHECK(all == "index,row_id,loss\n1,11,1.5\n2,12,0.25\n");
  std::filesystem::remove(path);
}
