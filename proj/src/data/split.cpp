#include <algorithm>
#include <cmath>

#include "uqbot/data.hpp"
#include "uqbot/error.hpp"
#include "uqbot/rng.hpp"

namespace uqbot {

SplitIndices split_indices(const Dataset& d, const SplitSpec& s) {
  const std::size_t n = d.size();
  if (n < 10) throw Error(ErrorCode::DatasetTooSmall, "need at least 10 rows, have " +
                                                          std::to_string(n));
  if (!(s.train_fraction > 0.0 && s.train_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidSpec, "train_fraction must lie in (0, 1)");
  }
  const auto n_train = static_cast<std::size_t>(std::llround(s.train_fraction * double(n)));
  Rng rng(s.seed);

  std::vector<std::size_t> train;
  if (!s.stratified) {
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    std::shuffle(all.begin(), all.end(), rng);
    train.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_train));
  } else {
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < n; ++i) by_class[d.label(i)].push_back(i);
    // Floor each class quota, then hand the remaining slots to the classes
    // with the largest fractional parts (class 0 first on ties).
    double exact[2];
    std::size_t quota[2];
    for (int c = 0; c < 2; ++c) {
      exact[c] = s.train_fraction * double(by_class[c].size());
      quota[c] = static_cast<std::size_t>(std::floor(exact[c]));
    }
    std::size_t assigned = quota[0] + quota[1];
    const int order[2] = {exact[1] - double(quota[1]) > exact[0] - double(quota[0]) ? 1 : 0,
                          exact[1] - double(quota[1]) > exact[0] - double(quota[0]) ? 0 : 1};
    for (int k = 0; k < 2 && assigned < n_train; ++k) {
      const int c = order[k];
      if (quota[c] < by_class[c].size()) {
        ++quota[c];
        ++assigned;
      }
    }
    for (int c = 0; c < 2; ++c) {
      std::shuffle(by_class[c].begin(), by_class[c].end(), rng);
      train.insert(train.end(), by_class[c].begin(),
                   by_class[c].begin() + static_cast<std::ptrdiff_t>(quota[c]));
    }
  }

  std::sort(train.begin(), train.end());
  SplitIndices out;
  out.train = std::move(train);
  out.test.reserve(n - out.train.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (k < out.train.size() && out.train[k] == i) {
      ++k;
    } else {
      out.test.push_back(i);
    }
  }
  return out;
}

std::pair<Dataset, Dataset> split(const Dataset& d, const SplitSpec& s) {
  const SplitIndices idx = split_indices(d, s);
  return {d.subset(idx.train, d.name() + "/train"), d.subset(idx.test, d.name() + "/test")};
}

std::uint64_t hash_partition(const SplitIndices& idx) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xFF;
      h *= 0x100000001b3ULL;
    }
  };
  feed(idx.train.size());
  for (auto i : idx.train) feed(i);
  feed(idx.test.size());
  for (auto i : idx.test) feed(i);
  return h;
}

}  // namespace uqbot
