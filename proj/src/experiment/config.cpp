#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "uqbot/error.hpp"
#include "uqbot/experiment.hpp"
#include "uqbot/rng.hpp"

namespace uqbot {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw Error(ErrorCode::ConfigError,
              "invalid value '" + std::string(value) + "' for '" + std::string(key) + "'");
}

double to_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) bad_value(key, v);
  return out;
}

std::uint64_t to_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v);
  return out;
}

std::size_t to_size(std::string_view key, std::string_view v) {
  return static_cast<std::size_t>(to_u64(key, v));
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, v);
}

std::vector<std::string_view> split_list(std::string_view v) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= v.size()) {
    const std::size_t comma = v.find(',', start);
    const auto item = trim(v.substr(start, comma == v.npos ? v.npos : comma - start));
    if (!item.empty()) out.push_back(item);
    if (comma == v.npos) break;
    start = comma + 1;
  }
  return out;
}

using Setter = std::function<void(ExperimentConfig&, std::string_view key, std::string_view)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"master_seed", [](auto& c, auto k, auto v) { c.master_seed = to_u64(k, v); }},
      {"output_dir", [](auto& c, auto, auto v) { c.output_dir = std::string(v); }},
      {"repeats", [](auto& c, auto k, auto v) { c.repeats = to_size(k, v); }},
      {"dataset.source",
       [](auto& c, auto k, auto v) {
         if (v == "synth") {
           c.dataset.kind = DatasetSource::Kind::synth;
         } else if (v == "csv") {
           c.dataset.kind = DatasetSource::Kind::csv;
         } else {
           bad_value(k, v);
         }
       }},
      {"dataset.path",
       [](auto& c, auto, auto v) {
         c.dataset.path = std::string(v);
         c.dataset.kind = DatasetSource::Kind::csv;
       }},
      {"dataset.expected_features",
       [](auto& c, auto k, auto v) { c.dataset.expected_features = to_size(k, v); }},
      {"synth.n_samples", [](auto& c, auto k, auto v) { c.dataset.synth.n_samples = to_size(k, v); }},
      {"synth.n_features",
       [](auto& c, auto k, auto v) { c.dataset.synth.n_features = to_size(k, v); }},
      {"synth.class_separation",
       [](auto& c, auto k, auto v) { c.dataset.synth.class_separation = to_double(k, v); }},
      {"synth.noise_std",
       [](auto& c, auto k, auto v) { c.dataset.synth.noise_std = to_double(k, v); }},
      {"synth.seed",
       [](auto& c, auto k, auto v) {
         c.dataset.synth.seed = to_u64(k, v);
         c.dataset.synth_seed_set = true;
       }},
      {"split.train_fraction", [](auto& c, auto k, auto v) { c.train_fraction = to_double(k, v); }},
      {"split.stratified", [](auto& c, auto k, auto v) { c.stratified = to_bool(k, v); }},
      {"arch.kind", [](auto& c, auto, auto v) { c.arch.kind = parse_arch_kind(v); }},
      {"arch.hidden_size", [](auto& c, auto k, auto v) { c.arch.hidden_size = to_size(k, v); }},
      {"arch.embed_dim", [](auto& c, auto k, auto v) { c.arch.embed_dim = to_size(k, v); }},
      {"arch.dropout_rate", [](auto& c, auto k, auto v) { c.arch.dropout_rate = to_double(k, v); }},
      {"arch.conv_filters", [](auto& c, auto k, auto v) { c.arch.conv_filters = to_size(k, v); }},
      {"arch.conv_kernel", [](auto& c, auto k, auto v) { c.arch.conv_kernel = to_size(k, v); }},
      {"arch.pool_size", [](auto& c, auto k, auto v) { c.arch.pool_size = to_size(k, v); }},
      {"train.learning_rate",
       [](auto& c, auto k, auto v) { c.train.learning_rate = to_double(k, v); }},
      {"train.epochs", [](auto& c, auto k, auto v) { c.train.epochs = to_size(k, v); }},
      {"train.batch_size", [](auto& c, auto k, auto v) { c.train.batch_size = to_size(k, v); }},
      {"attack.enabled",
       [](auto& c, auto k, auto v) {
         if (to_bool(k, v)) {
           if (!c.attack) c.attack = AttackConfig{};
         } else {
           c.attack.reset();
         }
       }},
      {"attack.epsilon",
       [](auto& c, auto k, auto v) {
         if (!c.attack) c.attack = AttackConfig{};
         c.attack->epsilon = to_double(k, v);
       }},
      {"attack.passes",
       [](auto& c, auto k, auto v) {
         if (!c.attack) c.attack = AttackConfig{};
         c.attack->passes = to_size(k, v);
       }},
      {"defence.enabled",
       [](auto& c, auto k, auto v) {
         if (to_bool(k, v)) {
           if (!c.defence) c.defence = DefenceConfig{};
         } else {
           c.defence.reset();
         }
       }},
      {"defence.epsilon",
       [](auto& c, auto k, auto v) {
         if (!c.defence) c.defence = DefenceConfig{};
         c.defence->epsilon = to_double(k, v);
       }},
      {"defence.quantifier",
       [](auto& c, auto, auto v) {
         if (!c.defence) c.defence = DefenceConfig{};
         c.defence->quantifier = parse_quantifier(v);
       }},
      {"defence.members",
       [](auto& c, auto k, auto v) {
         if (!c.defence) c.defence = DefenceConfig{};
         c.defence->members = to_size(k, v);
       }},
      {"defence.swag_epochs",
       [](auto& c, auto k, auto v) {
         if (!c.defence) c.defence = DefenceConfig{};
         c.defence->swag_epochs = to_size(k, v);
       }},
      {"defence.sanitize_clean", [](auto& c, auto k, auto v) { c.sanitize_clean = to_bool(k, v); }},
      {"quantifier",
       [](auto& c, auto, auto v) {
         c.quantifiers.kinds.clear();
         for (auto item : split_list(v)) {
           if (item == "none") continue;
           c.quantifiers.kinds.push_back(parse_quantifier(item));
         }
       }},
      {"quantifier.members",
       [](auto& c, auto k, auto v) { c.quantifiers.members = to_size(k, v); }},
      {"quantifier.swag_epochs",
       [](auto& c, auto k, auto v) { c.quantifiers.swag_epochs = to_size(k, v); }},
      {"quantifier.swag_draws",
       [](auto& c, auto k, auto v) { c.quantifiers.swag_draws = to_size(k, v); }},
      {"sweep",
       [](auto& c, auto k, auto v) {
         c.sweep.clear();
         for (auto item : split_list(v)) c.sweep.push_back(to_double(k, item));
       }},
  };
  return table;
}

void assign(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  const auto it = setters().find(key);
  if (it == setters().end()) {
    throw Error(ErrorCode::ConfigError, "unknown key '" + std::string(key) + "'");
  }
  it->second(cfg, key, value);
}

void parse_line(ExperimentConfig& cfg, std::string_view line, std::size_t line_no) {
  if (const auto hash = line.find('#'); hash != line.npos) line = line.substr(0, hash);
  line = trim(line);
  if (line.empty()) return;
  const auto eq = line.find('=');
  if (eq == line.npos) {
    throw Error(ErrorCode::ConfigError, "line " + std::to_string(line_no) + ": expected key = value");
  }
  assign(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
}

}  // namespace

void ExperimentConfig::validate() const {
  if (dataset.kind == DatasetSource::Kind::csv && dataset.path.empty()) {
    throw Error(ErrorCode::ConfigError, "dataset.path is required for csv sources");
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(ErrorCode::ConfigError, "split.train_fraction must lie in (0, 1)");
  }
  train.validate();
  if (attack) attack->validate();
  if (defence) {
    defence->validate();
    if (!attack && !sanitize_clean) {
      throw Error(ErrorCode::ConfigError,
                  "defence without an attack needs defence.sanitize_clean = true");
    }
  }
  if (quantifiers.members < 2 || quantifiers.swag_draws < 2) {
    throw Error(ErrorCode::SingleMember, "quantifiers need at least two members or draws");
  }
  if (quantifiers.swag_epochs < 1) throw Error(ErrorCode::InvalidT, "quantifier.swag_epochs < 1");
  for (double e : sweep) {
    if (!(e >= 0.0 && e <= 0.2)) {
      throw Error(ErrorCode::ConfigError, "sweep values must lie in [0, 0.2]");
    }
  }
  if (repeats < 1) throw Error(ErrorCode::ConfigError, "repeats must be >= 1");
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  cfg.source_text = std::string(text);
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t nl = text.find('\n', start);
    parse_line(cfg, text.substr(start, nl == text.npos ? text.npos : nl - start), ++line_no);
    if (nl == text.npos) break;
    start = nl + 1;
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void apply_override(ExperimentConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == assignment.npos) {
    throw Error(ErrorCode::ConfigError, "override '" + std::string(assignment) +
                                            "' is not key=value");
  }
  const auto key = trim(assignment.substr(0, eq));
  const auto value = trim(assignment.substr(eq + 1));
  assign(cfg, key, value);
  cfg.overrides.push_back(std::string(key) + "=" + std::string(value));
}

std::string default_config_text() {
  return R"(# Desk-scale reproduction of the scheme grid on synthetic traffic features.
master_seed = 7
output_dir = uqbot-out

dataset.source = synth
synth.n_samples = 2000
synth.n_features = 10
synth.class_separation = 4
synth.noise_std = 1
synth.seed = 7

split.train_fraction = 0.7
split.stratified = true

arch.kind = lstm
arch.hidden_size = 10
arch.embed_dim = 8
arch.dropout_rate = 0.5

train.learning_rate = 0.03
train.epochs = 20

attack.epsilon = 0.1
defence.epsilon = 0.1
defence.quantifier = deep_ensemble
defence.members = 10

quantifier = deep_ensemble,swag
quantifier.members = 10
quantifier.swag_epochs = 10
quantifier.swag_draws = 10

sweep = 0,0.02,0.05,0.1,0.2
)";
}

SeedPlan SeedPlan::derive(std::uint64_t master) {
  SeedPlan s;
  s.master = master;
  s.data = derive_seed(master, "data");
  s.split = derive_seed(master, "split");
  s.model = derive_seed(master, "model");
  s.defence = derive_seed(master, "defence");
  s.ensemble = derive_seed(master, "ensemble");
  s.swag = derive_seed(master, "swag");
  return s;
}

std::vector<std::pair<std::string, std::uint64_t>> SeedPlan::labeled() const {
  return {{"master", master},     {"data", data},         {"split", split}, {"model", model},
          {"defence", defence},   {"ensemble", ensemble}, {"swag", swag}};
}

}  // namespace uqbot
