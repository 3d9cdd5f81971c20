#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "uqbot/data.hpp"
#include "uqbot/error.hpp"
#include "uqbot/experiment.hpp"
#include "uqbot/kernels.hpp"

namespace {

using namespace uqbot;

// Direct flags are turned into overrides so the report records them.
struct ConfigFlags {
  std::string config_path;
  std::vector<std::string> sets;
  std::vector<std::string> direct;

  void add(CLI::App* app) {
    app->add_option("-c,--config", config_path, "experiment config file (key = value)");
    app->add_option("--set", sets, "override one config key, e.g. --set train.epochs=5");
    flag(app, "--seed", "master_seed", "master seed");
    flag(app, "--out", "output_dir", "output directory");
    flag(app, "--csv", "dataset.path", "CSV dataset instead of synthetic data");
    flag(app, "--arch", "arch.kind", "lstm | cnn_lstm");
    flag(app, "--epochs", "train.epochs", "training epochs");
    flag(app, "--lr", "train.learning_rate", "SGD learning rate");
    flag(app, "--epsilon", "attack.epsilon", "poisoned fraction");
    flag(app, "--defence-epsilon", "defence.epsilon", "removed fraction");
    flag(app, "--defence-quantifier", "defence.quantifier", "deep_ensemble | swag");
    flag(app, "--quantifier", "quantifier", "comma list of deep_ensemble, swag, none");
    flag(app, "--sweep", "sweep", "comma list of epsilons");
    flag(app, "--repeats", "repeats", "independent repeats");
  }

  void flag(CLI::App* app, const std::string& name, std::string key, const std::string& help) {
    app->add_option_function<std::string>(
        name, [this, key](const std::string& v) { direct.push_back(key + "=" + v); }, help);
  }

  ExperimentConfig build() const {
    ExperimentConfig cfg =
        config_path.empty() ? parse_config(default_config_text()) : load_config(config_path);
    for (const auto& s : direct) apply_override(cfg, s);
    for (const auto& s : sets) apply_override(cfg, s);
    return cfg;
  }
};

int cmd_ingest(const std::string& path, std::optional<std::size_t> features,
               const std::string& out_dir, double fraction, std::uint64_t seed) {
  const Dataset d = load_csv(path, features);
  nlohmann::json j = {{"path", path},
                      {"rows", d.size()},
                      {"features", d.n_features()},
                      {"benign", d.count_label(0)},
                      {"botnet", d.count_label(1)}};
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    const SplitIndices idx = split_indices(d, SplitSpec{fraction, seed, true});
    auto [train, stats] = normalize(d.subset(idx.train, d.name() + "/train"));
    auto [test, unused] = normalize(d.subset(idx.test, d.name() + "/test"), stats);
    write_csv(train, std::filesystem::path(out_dir) / "train.csv");
    write_csv(test, std::filesystem::path(out_dir) / "test.csv");
    j["train_rows"] = train.size();
    j["test_rows"] = test.size();
    j["out_dir"] = out_dir;
  }
  std::cout << j.dump() << "\n";
  return 0;
}

int cmd_synth(const SynthSpec& spec, const std::string& out) {
  const Dataset d = synth_generate(spec);
  write_csv(d, out);
  std::cout << nlohmann::json{{"path", out}, {"rows", d.size()}, {"features", d.n_features()}}.dump()
            << "\n";
  return 0;
}

int cmd_run(const ConfigFlags& flags, bool sweep_only, bool samples, bool json_out) {
  const ExperimentConfig cfg = flags.build();
  RunOptions opts;
  opts.per_sample_scores = samples;
  const ExperimentReport r = sweep_only ? run_sweep(cfg, opts) : run_experiment(cfg, opts);
  std::cout << (json_out ? report_text(r) : format_report(r));
  std::cerr << "wrote " << (cfg.output_dir / "report.json").string() << "\n";
  return 0;
}

int cmd_report(const std::string& path, bool json_out) {
  const ExperimentReport r = read_report(path);
  std::cout << (json_out ? report_text(r) : format_report(r));
  return 0;
}

void print_error(std::string_view code, std::string_view message) {
  std::cerr << nlohmann::json{{"error", code}, {"message", message}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Uncertainty-aware botnet detection lab"};
  app.require_subcommand(1);

  auto* ingest = app.add_subcommand("ingest", "validate a CSV dataset; optionally split and normalize it");
  std::string ingest_path, ingest_out;
  std::optional<std::size_t> ingest_features;
  double ingest_fraction = 0.7;
  std::uint64_t ingest_seed = 1;
  ingest->add_option("csv", ingest_path, "dataset CSV with a trailing label column")->required();
  ingest->add_option("--features", ingest_features, "expected feature count");
  ingest->add_option("--out", ingest_out, "write normalized train.csv / test.csv here");
  ingest->add_option("--train-fraction", ingest_fraction, "train share of the split");
  ingest->add_option("--seed", ingest_seed, "split seed");

  auto* synth = app.add_subcommand("synth", "generate a synthetic two-class dataset");
  SynthSpec spec;
  std::string synth_out;
  synth->add_option("-o,--out", synth_out, "output CSV")->required();
  synth->add_option("--rows", spec.n_samples, "number of rows");
  synth->add_option("--features", spec.n_features, "number of features");
  synth->add_option("--separation", spec.class_separation, "distance between class means");
  synth->add_option("--noise", spec.noise_std, "per-feature noise std");
  synth->add_option("--seed", spec.seed, "generator seed");

  auto* run = app.add_subcommand("run", "No Attack, WBA and UMD schemes with quantifier comparison");
  ConfigFlags run_flags;
  run_flags.add(run);
  bool run_no_samples = false, run_json = false;
  run->add_flag("--no-samples", run_no_samples, "skip per-sample uncertainty CSVs");
  run->add_flag("--json", run_json, "print the report JSON instead of tables");

  auto* sweep = app.add_subcommand("sweep", "baseline plus one WBA run per epsilon");
  ConfigFlags sweep_flags;
  sweep_flags.add(sweep);
  bool sweep_json = false;
  sweep->add_flag("--json", sweep_json, "print the report JSON instead of tables");

  auto* report = app.add_subcommand("report", "print a saved report");
  std::string report_path;
  bool report_json = false;
  report->add_option("report", report_path, "report.json")->required();
  report->add_flag("--json", report_json, "print canonical JSON");

  app.add_option_function<std::string>(
      "--kernels",
      [](const std::string& v) {
        if (v == "scalar") {
          kernels::select(kernels::Isa::scalar);
        } else if (v != "auto") {
          throw CLI::ValidationError("--kernels", "expected auto or scalar");
        }
      },
      "kernel selection: auto | scalar");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("UsageError", e.what());
    return 2;
  }

  try {
    if (*ingest) return cmd_ingest(ingest_path, ingest_features, ingest_out, ingest_fraction, ingest_seed);
    if (*synth) return cmd_synth(spec, synth_out);
    if (*run) return cmd_run(run_flags, false, !run_no_samples, run_json);
    if (*sweep) return cmd_run(sweep_flags, true, false, sweep_json);
    if (*report) return cmd_report(report_path, report_json);
  } catch (const Error& e) {
    print_error(error_code_name(e.code()), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("InternalError", e.what());
    return 1;
  }
  return 0;
}
