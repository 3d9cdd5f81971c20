#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "uqbot/data.hpp"
#include "uqbot/error.hpp"
#include "uqbot/model.hpp"

using namespace uqbot;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() : path(std::filesystem::temp_directory_path() / "uqbot_data_test") {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::filesystem::path write(const std::string& name, const std::string& text) const {
    std::ofstream(path / name, std::ios::binary) << text;
    return path / name;
  }
};

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::IoError;
}

Dataset balanced(std::size_t n, std::size_t f = 2) {
  std::vector<double> feats(n * f);
  for (std::size_t k = 0; k < feats.size(); ++k) feats[k] = double(k % 17);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = int(i % 2);
  std::vector<std::string> names(f);
  for (std::size_t j = 0; j < f; ++j) names[j] = "x" + std::to_string(j);
  return Dataset("toy", names, feats, labels);
}

}  // namespace

TEST_CASE("load_csv parses a small file") {
  TempDir tmp;
  const auto p = tmp.write("small.csv", "a,b,label\n1,2,0\n3.5,-4,1\n0,1e-3,0\n");
  const Dataset d = load_csv(p);
  CHECK(d.size() == 3);
  CHECK(d.n_features() == 2);
  CHECK(d.labels() == std::vector<int>{0, 1, 0});
  CHECK(d.row(1)[0] == 3.5);
  CHECK(d.row(2)[1] == 1e-3);
  CHECK(d.feature_names() == std::vector<std::string>{"a", "b"});
  CHECK(load_csv(p, 2).size() == 3);
}

TEST_CASE("load_csv tolerates a BOM and CRLF line endings") {
  TempDir tmp;
  const auto p = tmp.write("bom.csv", "\xEF\xBB\xBFx,label\r\n0.5,1\r\n0.25,0\r\n");
  const Dataset d = load_csv(p);
  CHECK(d.size() == 2);
  CHECK(d.row(0)[0] == 0.5);
}

TEST_CASE("load_csv error cases") {
  TempDir tmp;
  CHECK(code_of([&] { load_csv(tmp.write("l2.csv", "a,label\n1,2\n")); }) ==
        ErrorCode::NonBinaryLabel);
  CHECK(code_of([&] { load_csv(tmp.write("nolabel.csv", "a,b\n1,0\n")); }) ==
        ErrorCode::MissingLabelColumn);
  CHECK(code_of([&] { load_csv(tmp.write("short.csv", "a,b,label\n1,0\n")); }) ==
        ErrorCode::FeatureCountMismatch);
  CHECK(code_of([&] { load_csv(tmp.write("text.csv", "a,label\nfoo,0\n")); }) ==
        ErrorCode::UnparseableValue);
  CHECK(code_of([&] { load_csv(tmp.write("nan.csv", "a,label\nnan,0\n")); }) ==
        ErrorCode::UnparseableValue);
  CHECK(code_of([&] { load_csv(tmp.write("frac.csv", "a,label\n1,0.5\n")); }) ==
        ErrorCode::UnparseableValue);
  CHECK(code_of([&] { load_csv(tmp.write("f.csv", "a,b,label\n1,2,0\n"), 115); }) ==
        ErrorCode::FeatureCountMismatch);
  CHECK(code_of([&] { load_csv(tmp.path / "missing.csv"); }) == ErrorCode::IoError);
}

TEST_CASE("CSV write and reload round-trips exactly") {
  TempDir tmp;
  const Dataset d = synth_generate({57, 5, 3.0, 1.7, 12});
  write_csv(d, tmp.path / "rt.csv");
  const Dataset back = load_csv(tmp.path / "rt.csv", 5);
  CHECK(back.features() == d.features());
  CHECK(back.labels() == d.labels());
  CHECK(back.feature_names() == d.feature_names());
}

TEST_CASE("Dataset enforces its invariants") {
  CHECK(code_of([] { Dataset("d", {"a"}, {1.0, 2.0}, {0}); }) == ErrorCode::LengthMismatch);
  CHECK(code_of([] { Dataset("d", {"a"}, {1.0}, {3}); }) == ErrorCode::NonBinaryLabel);
  CHECK(code_of([] { Dataset("d", {"a"}, {std::numeric_limits<double>::infinity()}, {0}); }) ==
        ErrorCode::UnparseableValue);
  const Dataset d = balanced(10);
  CHECK(code_of([&] {
          const std::vector<std::size_t> idx{10};
          d.subset(idx, "x");
        }) == ErrorCode::BadIndex);
}

TEST_CASE("split sizes, determinism and stratification") {
  const Dataset d = balanced(100);
  const SplitSpec s{0.7, 1, true};
  const auto idx = split_indices(d, s);
  CHECK(idx.train.size() == 70);
  CHECK(idx.test.size() == 30);
  const auto again = split_indices(d, s);
  CHECK(idx.train == again.train);
  CHECK(idx.test == again.test);
  CHECK(hash_partition(idx) == hash_partition(again));

  std::size_t ones = 0;
  for (std::size_t i : idx.train) ones += d.label(i) == 1 ? 1 : 0;
  CHECK(ones >= 34);
  CHECK(ones <= 36);

  const auto [tr, te] = split(d, s);
  CHECK(tr.size() == 70);
  CHECK(te.row_id(0) == idx.test[0]);

  CHECK(code_of([] { split_indices(balanced(9), {}); }) == ErrorCode::DatasetTooSmall);
}

TEST_CASE("split partitions are exact and disjoint across random specs") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> nd(10, 400);
  std::uniform_real_distribution<double> fd(0.05, 0.95);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = nd(rng);
    std::vector<int> labels(n);
    for (auto& l : labels) l = int(rng() % 2);
    const Dataset d("r", {"a"}, std::vector<double>(n, 0.0), labels);
    const SplitSpec s{fd(rng), rng(), trial % 2 == 0};
    const auto idx = split_indices(d, s);
    CAPTURE(n);
    CHECK(idx.train.size() + idx.test.size() == n);
    CHECK(idx.train.size() == std::size_t(std::llround(s.train_fraction * double(n))));
    CHECK(std::is_sorted(idx.train.begin(), idx.train.end()));
    CHECK(std::is_sorted(idx.test.begin(), idx.test.end()));
    std::set<std::size_t> all(idx.train.begin(), idx.train.end());
    all.insert(idx.test.begin(), idx.test.end());
    CHECK(all.size() == n);
    CHECK(*all.rbegin() == n - 1);
  }
}

TEST_CASE("normalize min-max arithmetic") {
  const Dataset d("n", {"a", "b"}, {2, 5, 4, 5, 6, 5}, {0, 1, 0});
  const auto [out, stats] = normalize(d);
  CHECK(out.row(0)[0] == 0.0);
  CHECK(out.row(1)[0] == 0.5);
  CHECK(out.row(2)[0] == 1.0);
  for (std::size_t i = 0; i < 3; ++i) CHECK(out.row(i)[1] == 0.0);  // constant column
  CHECK(stats.min == std::vector<double>{2, 5});
  CHECK(stats.max == std::vector<double>{6, 5});
  REQUIRE(out.norm_stats().has_value());

  // Held-out row outside the training range keeps its out-of-range value.
  const Dataset held("h", {"a", "b"}, {8, 7, 0, 5}, {1, 0});
  const auto [h, unused] = normalize(held, stats);
  CHECK(h.row(0)[0] == doctest::Approx(1.5));
  CHECK(h.row(1)[0] == doctest::Approx(-0.5));
  CHECK(h.row(0)[1] == 0.0);

  CHECK(code_of([&] { normalize(held, NormStats::identity(3)); }) ==
        ErrorCode::StatsLengthMismatch);
}

TEST_CASE("normalize is idempotent under identity stats") {
  const Dataset d = synth_generate({80, 4, 2.0, 1.0, 3});
  const auto [once, stats] = normalize(d);
  const auto [twice, unused] = normalize(once, NormStats::identity(4));
  CHECK(twice.features() == once.features());
}

TEST_CASE("synth_generate cardinality, balance and determinism") {
  const Dataset d = synth_generate({2000, 10, 4.0, 1.0, 7});
  CHECK(d.size() == 2000);
  CHECK(d.n_features() == 10);
  CHECK(d.count_label(0) == 1000);
  CHECK(d.count_label(1) == 1000);
  CHECK(synth_generate({2000, 10, 4.0, 1.0, 7}).features() == d.features());
  CHECK(synth_generate({2000, 10, 4.0, 1.0, 8}).features() != d.features());
  CHECK(code_of([] { synth_generate({1, 10, 4.0, 1.0, 7}); }) == ErrorCode::InvalidSpec);
  CHECK(code_of([] { synth_generate({10, 10, -1.0, 1.0, 7}); }) == ErrorCode::InvalidSpec);

  // The class means sit sep/2 from the origin along the all-ones direction.
  double sum1 = 0.0;
  for (std::size_t i = 1; i < d.size(); i += 2) {
    for (double v : d.row(i)) sum1 += v;
  }
  CHECK(sum1 / 1000.0 == doctest::Approx(2.0 * std::sqrt(10.0)).epsilon(0.05));
}

TEST_CASE("zero separation leaves a classifier at chance") {
  const auto [tr_raw, te_raw] = split(synth_generate({2000, 10, 0.0, 1.0, 7}), {0.7, 3, true});
  const auto [tr, stats] = normalize(tr_raw);
  const auto [te, unused] = normalize(te_raw, stats);
  ArchConfig arch;
  const ModelParams p = train(init_params(arch, 1), tr, TrainConfig{0.01, 5, 1, 1});
  const double acc = accuracy(p, te);
  CHECK(acc >= 0.45);
  CHECK(acc <= 0.55);
}
