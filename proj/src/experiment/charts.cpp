#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "uqbot/error.hpp"
#include "uqbot/experiment.hpp"

namespace uqbot {
namespace {

using nlohmann::json;

std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_num(const std::string& s, const std::filesystem::path& path) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw Error(ErrorCode::UnparseableValue, path.string() + ": '" + s + "'");
  }
  return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  return out;
}

std::vector<std::vector<std::string>> read_rows(const std::filesystem::path& path,
                                                std::string_view header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != header) {
    throw Error(ErrorCode::IoError, path.string() + ": unexpected header");
  }
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    rows.push_back(std::move(fields));
  }
  return rows;
}

json summary_json(const UncertaintySummary& u) {
  return {{"entropy", u.entropy},
          {"mutual_info", u.mutual_info},
          {"variance", u.variance},
          {"akld", u.akld}};
}

UncertaintySummary summary_from(const json& j) {
  return {j.at("entropy").get<double>(), j.at("mutual_info").get<double>(),
          j.at("variance").get<double>(), j.at("akld").get<double>()};
}

}  // namespace

const SchemeResult* ExperimentReport::find_scheme(std::string_view name) const {
  for (const auto& s : schemes) {
    if (s.scheme == name) return &s;
  }
  return nullptr;
}

const QuantifierResult* ExperimentReport::find_quantifier(std::string_view scheme,
                                                          std::string_view quantifier) const {
  for (const auto& q : quantifiers) {
    if (q.scheme == scheme && q.quantifier == quantifier) return &q;
  }
  return nullptr;
}

nlohmann::json to_json(const ExperimentReport& r) {
  json seeds = json::object();
  for (const auto& [label, value] : r.seeds.labeled()) seeds[label] = value;

  json schemes = json::array();
  for (const auto& s : r.schemes) {
    json js = {{"scheme", s.scheme},
               {"seed", s.seed},
               {"confusion",
                {{"tp", s.confusion.tp},
                 {"tn", s.confusion.tn},
                 {"fp", s.confusion.fp},
                 {"fn", s.confusion.fn}}},
               {"metrics", to_json(s.metrics)}};
    if (s.uncertainty) js["uncertainty"] = summary_json(*s.uncertainty);
    schemes.push_back(std::move(js));
  }

  json quantifiers = json::array();
  for (const auto& q : r.quantifiers) {
    quantifiers.push_back({{"scheme", q.scheme},
                           {"quantifier", q.quantifier},
                           {"accuracy", q.accuracy},
                           {"uncertainty", summary_json(q.uncertainty)},
                           {"member_ids", q.member_ids}});
  }

  json sweep = json::array();
  for (const auto& p : r.sweep) sweep.push_back({{"epsilon", p.epsilon}, {"accuracy", p.accuracy}});

  json repeats = json::array();
  for (const auto& rr : r.repeats) {
    json acc = json::object();
    for (const auto& [scheme, a] : rr.accuracy) acc[scheme] = a;
    repeats.push_back({{"repeat", rr.repeat}, {"master_seed", rr.master_seed}, {"accuracy", acc}});
  }

  json j = {{"format", "uqbot-report"},
            {"version", 1},
            {"config_text", r.config_text},
            {"overrides", r.overrides},
            {"seeds", seeds},
            {"dataset",
             {{"name", r.dataset_name},
              {"rows", r.n_rows},
              {"features", r.n_features},
              {"train_size", r.train_size},
              {"test_size", r.test_size},
              {"split_hash", r.split_hash}}},
            {"kernel_isa", r.kernel_isa},
            {"schemes", schemes},
            {"quantifiers", quantifiers},
            {"sweep", sweep},
            {"repeats", repeats}};
  j["poison_size"] = r.poison_size ? json(*r.poison_size) : json(nullptr);
  j["poison_removed"] = r.poison_removed ? json(*r.poison_removed) : json(nullptr);
  return j;
}

ExperimentReport report_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "uqbot-report") {
      throw Error(ErrorCode::IoError, "not a uqbot report");
    }
    ExperimentReport r;
    r.config_text = j.at("config_text").get<std::string>();
    r.overrides = j.at("overrides").get<std::vector<std::string>>();
    const json& s = j.at("seeds");
    r.seeds.master = s.at("master").get<std::uint64_t>();
    r.seeds.data = s.at("data").get<std::uint64_t>();
    r.seeds.split = s.at("split").get<std::uint64_t>();
    r.seeds.model = s.at("model").get<std::uint64_t>();
    r.seeds.defence = s.at("defence").get<std::uint64_t>();
    r.seeds.ensemble = s.at("ensemble").get<std::uint64_t>();
    r.seeds.swag = s.at("swag").get<std::uint64_t>();
    const json& d = j.at("dataset");
    r.dataset_name = d.at("name").get<std::string>();
    r.n_rows = d.at("rows").get<std::size_t>();
    r.n_features = d.at("features").get<std::size_t>();
    r.train_size = d.at("train_size").get<std::size_t>();
    r.test_size = d.at("test_size").get<std::size_t>();
    r.split_hash = d.at("split_hash").get<std::string>();
    r.kernel_isa = j.at("kernel_isa").get<std::string>();
    for (const json& js : j.at("schemes")) {
      SchemeResult sr;
      sr.scheme = js.at("scheme").get<std::string>();
      sr.seed = js.at("seed").get<std::uint64_t>();
      const json& c = js.at("confusion");
      sr.confusion = {c.at("tp").get<std::size_t>(), c.at("tn").get<std::size_t>(),
                      c.at("fp").get<std::size_t>(), c.at("fn").get<std::size_t>()};
      sr.metrics = metrics_from_json(js.at("metrics"));
      if (js.contains("uncertainty")) sr.uncertainty = summary_from(js.at("uncertainty"));
      r.schemes.push_back(std::move(sr));
    }
    for (const json& jq : j.at("quantifiers")) {
      QuantifierResult q;
      q.scheme = jq.at("scheme").get<std::string>();
      q.quantifier = jq.at("quantifier").get<std::string>();
      q.accuracy = jq.at("accuracy").get<double>();
      q.uncertainty = summary_from(jq.at("uncertainty"));
      q.member_ids = jq.at("member_ids").get<std::vector<std::uint64_t>>();
      r.quantifiers.push_back(std::move(q));
    }
    for (const json& p : j.at("sweep")) {
      r.sweep.push_back({p.at("epsilon").get<double>(), p.at("accuracy").get<double>()});
    }
    for (const json& jr : j.at("repeats")) {
      RepeatResult rr;
      rr.repeat = jr.at("repeat").get<std::size_t>();
      rr.master_seed = jr.at("master_seed").get<std::uint64_t>();
      for (const auto& [scheme, a] : jr.at("accuracy").items()) {
        rr.accuracy.emplace_back(scheme, a.get<double>());
      }
      r.repeats.push_back(std::move(rr));
    }
    if (!j.at("poison_size").is_null()) r.poison_size = j.at("poison_size").get<std::size_t>();
    if (!j.at("poison_removed").is_null()) {
      r.poison_removed = j.at("poison_removed").get<std::size_t>();
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::IoError, std::string("malformed report: ") + e.what());
  }
}

std::string report_text(const ExperimentReport& r) { return to_json(r).dump(2) + "\n"; }

void write_report(const ExperimentReport& r, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << report_text(r);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
}

ExperimentReport read_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::IoError, path.string() + ": " + e.what());
  }
  return report_from_json(j);
}

std::string format_report(const ExperimentReport& r) {
  std::ostringstream os;
  char line[160];
  os << "dataset " << r.dataset_name << ": " << r.n_rows << " rows, " << r.n_features
     << " features, train " << r.train_size << " / test " << r.test_size << ", split "
     << r.split_hash << ", kernels " << r.kernel_isa << "\n\n";
  std::snprintf(line, sizeof line, "%-10s %9s %9s %9s %9s %9s %9s\n", "scheme", "accuracy",
                "precision", "recall", "fpr", "tpr", "f1");
  os << line;
  for (const auto& s : r.schemes) {
    const auto& m = s.metrics;
    std::snprintf(line, sizeof line, "%-10s %9.4f %9.4f %9.4f %9.4f %9.4f %9.4f\n",
                  s.scheme.c_str(), m.accuracy, m.precision, m.recall, m.fpr, m.tpr, m.f1);
    os << line;
  }
  if (r.poison_size) os << "\npoison rows: " << *r.poison_size;
  if (r.poison_removed) os << ", removed by UMD: " << *r.poison_removed;
  if (r.poison_size) os << "\n";
  if (!r.quantifiers.empty()) {
    std::snprintf(line, sizeof line, "\n%-10s %-14s %9s %9s %9s %9s %9s\n", "scheme",
                  "quantifier", "accuracy", "H", "MI", "VV", "AKLD");
    os << line;
    for (const auto& q : r.quantifiers) {
      const auto& u = q.uncertainty;
      std::snprintf(line, sizeof line, "%-10s %-14s %9.4f %9.4f %9.4f %9.4f %9.4f\n",
                    q.scheme.c_str(), q.quantifier.c_str(), q.accuracy, u.entropy,
                    u.mutual_info, u.variance, u.akld);
      os << line;
    }
  }
  if (!r.sweep.empty()) {
    os << "\nepsilon   accuracy\n";
    for (const auto& p : r.sweep) {
      std::snprintf(line, sizeof line, "%7.3f %10.4f\n", p.epsilon, p.accuracy);
      os << line;
    }
  }
  if (!r.repeats.empty()) {
    os << "\nrepeats\n";
    for (const auto& rr : r.repeats) {
      os << "  #" << rr.repeat << " (master " << rr.master_seed << ")";
      for (const auto& [scheme, a] : rr.accuracy) {
        std::snprintf(line, sizeof line, " %s=%.4f", scheme.c_str(), a);
        os << line;
      }
      os << "\n";
    }
  }
  return os.str();
}

void emit_charts(const ExperimentReport& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_out(dir / "fpr_tpr.csv");
    out << "scheme,fpr,tpr\n";
    for (const auto& s : r.schemes) {
      out << s.scheme << ',' << num(s.metrics.fpr) << ',' << num(s.metrics.tpr) << '\n';
    }
  }
  {
    auto out = open_out(dir / "sweep.csv");
    out << "epsilon,accuracy\n";
    for (const auto& p : r.sweep) out << num(p.epsilon) << ',' << num(p.accuracy) << '\n';
  }
  {
    auto out = open_out(dir / "uncertainty.csv");
    out << "scheme,quantifier,accuracy,entropy,mutual_info,variance,akld\n";
    for (const auto& q : r.quantifiers) {
      const auto& u = q.uncertainty;
      out << q.scheme << ',' << q.quantifier << ',' << num(q.accuracy) << ',' << num(u.entropy)
          << ',' << num(u.mutual_info) << ',' << num(u.variance) << ',' << num(u.akld) << '\n';
    }
  }
}

std::vector<std::tuple<std::string, double, double>> read_fpr_tpr_csv(
    const std::filesystem::path& path) {
  std::vector<std::tuple<std::string, double, double>> out;
  for (const auto& row : read_rows(path, "scheme,fpr,tpr")) {
    if (row.size() != 3) throw Error(ErrorCode::FeatureCountMismatch, path.string());
    out.emplace_back(row[0], parse_num(row[1], path), parse_num(row[2], path));
  }
  return out;
}

std::vector<SweepPoint> read_sweep_csv(const std::filesystem::path& path) {
  std::vector<SweepPoint> out;
  for (const auto& row : read_rows(path, "epsilon,accuracy")) {
    if (row.size() != 2) throw Error(ErrorCode::FeatureCountMismatch, path.string());
    out.push_back({parse_num(row[0], path), parse_num(row[1], path)});
  }
  return out;
}

void write_uncertainty_csv(const ScoredDataset& scored, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "id,H,MI,VV,AKLD,aggregate\n";
  for (std::size_t i = 0; i < scored.scores.size(); ++i) {
    const auto& s = scored.scores[i];
    out << scored.base.row_id(i) << ',' << num(s.entropy) << ',' << num(s.mutual_info) << ','
        << num(s.variance) << ',' << num(s.akld) << ',' << num(s.aggregate) << '\n';
  }
}

}  // namespace uqbot
