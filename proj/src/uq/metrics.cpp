#include <algorithm>
#include <cmath>

#include "uqbot/error.hpp"
#include "uqbot/uq.hpp"

namespace uqbot {

double entropy(const PredictionDist& p) {
  double h = 0.0;
  for (double v : p.probs) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

PredictionDist mean_dist(const DistSet& ds) {
  if (ds.dists.empty()) throw Error(ErrorCode::EmptyResult, "empty DistSet");
  PredictionDist m{{0.0, 0.0}};
  for (const auto& d : ds.dists) {
    m.probs[0] += d.probs[0];
    m.probs[1] += d.probs[1];
  }
  const double inv = 1.0 / double(ds.dists.size());
  m.probs[0] *= inv;
  m.probs[1] *= inv;
  return m;
}

double mutual_information(const DistSet& ds) {
  const PredictionDist m = mean_dist(ds);
  double member_h = 0.0;
  for (const auto& d : ds.dists) member_h += entropy(d);
  return entropy(m) - member_h / double(ds.dists.size());
}

double variance_value(const DistSet& ds, std::size_t class_index) {
  if (ds.dists.empty()) throw Error(ErrorCode::EmptyResult, "empty DistSet");
  if (class_index > 1) throw Error(ErrorCode::InvalidSpec, "class index out of range");
  double sum = 0.0;
  double sum_sq = 0.0;
  for (const auto& d : ds.dists) {
    const double v = d.probs[class_index];
    sum += v;
    sum_sq += v * v;
  }
  const double inv = 1.0 / double(ds.dists.size());
  const double mean = sum * inv;
  return sum_sq * inv - mean * mean;
}

double akld(const DistSet& ds) {
  const std::size_t m = ds.dists.size();
  if (m < 2) throw Error(ErrorCode::SingleMember, "AKLD needs at least two members");
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < m; ++i) {
    for (std::size_t k = 0; k < 2; ++k) {
      const double p = std::max(ds.dists[i].probs[k], kProbFloor);
      const double q = std::max(ds.dists[i + 1].probs[k], kProbFloor);
      total += p * std::log(p / q);
    }
  }
  return total / double(m - 1);
}

UncertaintyScore score(const DistSet& ds) {
  UncertaintyScore s;
  s.entropy = entropy(mean_dist(ds));
  s.mutual_info = mutual_information(ds);
  s.variance = variance_value(ds, 1);
  s.akld = akld(ds);
  return s;
}

std::vector<DistSet> predict_members(std::span<const ModelParams> members,
                                     std::span<const std::uint64_t> member_ids,
                                     const Dataset& d) {
  if (members.size() != member_ids.size()) {
    throw Error(ErrorCode::LengthMismatch, "member and id counts differ");
  }
  std::vector<DistSet> out(d.size());
  for (auto& ds : out) {
    ds.dists.reserve(members.size());
    ds.member_ids.assign(member_ids.begin(), member_ids.end());
  }
  if (members.empty() || d.empty()) return out;
  Evaluator ev(members.front().arch());
  for (const auto& m : members) {
    for (std::size_t i = 0; i < d.size(); ++i) out[i].dists.push_back(ev.forward(m, d.row(i)));
  }
  return out;
}

}  // namespace uqbot
