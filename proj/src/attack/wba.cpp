#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>

#include "uqbot/attack.hpp"
#include "uqbot/error.hpp"

namespace uqbot {

void AttackConfig::validate() const {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw Error(ErrorCode::InvalidSpec, "attack epsilon must lie in [0, 1]");
  }
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorCode::InvalidSpec, "attack learning rate must be finite and >= 0");
  }
}

std::size_t poison_count(double epsilon, std::size_t n) {
  const double exact = epsilon * double(n);
  const auto p = static_cast<std::size_t>(std::ceil(exact - 1e-9 * std::max(1.0, exact)));
  return std::min(p, n);
}

PoisonSet select_poison(const ModelParams& p, const Dataset& d_train, double epsilon) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw Error(ErrorCode::InvalidSpec, "epsilon must lie in [0, 1]");
  }
  if (d_train.n_features() != p.arch().n_features) {
    throw Error(ErrorCode::FeatureLengthMismatch,
                "dataset has " + std::to_string(d_train.n_features()) +
                    " features, model expects " + std::to_string(p.arch().n_features));
  }
  const std::size_t n = d_train.size();
  const std::size_t count = poison_count(epsilon, n);
  std::vector<double> losses(n);
  Evaluator ev(p.arch());
  for (std::size_t i = 0; i < n; ++i) {
    const PredictionDist pd = ev.forward(p, d_train.row(i));
    losses[i] = -std::log(std::max(pd.probs[static_cast<std::size_t>(d_train.label(i))],
                                   kProbFloor));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return losses[a] > losses[b]; });
  PoisonSet out;
  out.indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
  out.losses.reserve(count);
  for (std::size_t i : out.indices) out.losses.push_back(losses[i]);
  return out;
}

void wba_pass(SgdSession& session, ModelParams& p, const Dataset& d, const PoisonSet& poison,
              double learning_rate) {
  std::vector<char> is_poison(d.size(), 0);
  for (std::size_t i : poison.indices) {
    if (i >= d.size()) throw Error(ErrorCode::BadIndex, "poison row " + std::to_string(i));
    is_poison[i] = 1;
  }
  std::vector<std::size_t> clean;
  clean.reserve(d.size() - poison.indices.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!is_poison[i]) clean.push_back(i);
  }
  session.epoch(p, d, std::move(clean), learning_rate);

  std::vector<std::size_t> poison_rows = poison.indices;
  std::shuffle(poison_rows.begin(), poison_rows.end(), session.rng());
  for (std::size_t i : poison_rows) {
    const Gradient total = mean_grad(p, d, poison.indices);
    session.step(p, d.row(i), d.label(i), learning_rate, &total);
  }
}

ModelParams wba_update(const ModelParams& p, const Dataset& d_clean, const PoisonSet& poison,
                       const AttackConfig& cfg) {
  cfg.validate();
  ModelParams out = p;
  SgdSession session(p.arch(), cfg.seed);
  wba_pass(session, out, d_clean, poison, cfg.learning_rate);
  return out;
}

WbaResult wba(const ModelParams& w0, const Dataset& d_train, const TrainConfig& tcfg,
              const AttackConfig& acfg) {
  if (d_train.empty()) throw Error(ErrorCode::EmptyDataset, "cannot attack an empty dataset");
  acfg.validate();
  WbaResult r{w0, select_poison(w0, d_train, acfg.epsilon)};
  const std::size_t passes = acfg.passes ? acfg.passes : tcfg.epochs;
  SgdSession session(w0.arch(), acfg.seed);
  for (std::size_t k = 0; k < passes; ++k) {
    wba_pass(session, r.model, d_train, r.poison, acfg.learning_rate);
  }
  return r;
}

WbaResult wba(const Dataset& d_train, const ArchConfig& arch, const TrainConfig& tcfg,
              const AttackConfig& acfg) {
  return wba(init_params(arch, tcfg.seed), d_train, tcfg, acfg);
}

void write_poison_csv(const PoisonSet& poison, const Dataset& d_train,
                      const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << "index,row_id,loss\n";
  char buf[32];
  for (std::size_t k = 0; k < poison.indices.size(); ++k) {
    const std::size_t i = poison.indices[k];
    const auto res = std::to_chars(buf, buf + sizeof buf, poison.losses[k]);
    out << i << ',' << d_train.row_id(i) << ',' << std::string_view(buf, res.ptr - buf) << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace uqbot
