// crs: chemotherapy response scoring from CT slice stacks and clinical data.
//
//   crs synth      --config run.ini --seed 7
//   crs preprocess --config run.ini --seed 7
//   crs train      --config run.ini --seed 7
//   crs evaluate   --config run.ini --seed 7 [--policy max_f1|precision_floor] [--threshold 0.5]
//   crs ablate     --config run.ini --seed 7
//   crs morphology --config run.ini --seed 7

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "crs/config.hpp"
#include "crs/errors.hpp"
#include "crs/pipeline.hpp"

namespace {

struct Options {
  std::string config_path;
  std::optional<long long> seed;
  std::optional<double> threshold;
  std::optional<std::string> policy;
  std::optional<std::string> out;
  std::optional<std::size_t> workers;
  std::vector<std::string> overrides;
};

crs::RunConfig build_config(const Options& o) {
  crs::RunConfig c = o.config_path.empty() ? crs::RunConfig{} : crs::load_config(o.config_path);
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw crs::ConfigError("--set expects key=value, got '" + kv + "'");
    c.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.seed) c.set("seed", std::to_string(*o.seed));
  if (o.threshold) c.set("evaluate.threshold", std::to_string(*o.threshold));
  if (o.policy) c.set("evaluate.policy", *o.policy);
  if (o.out) c.set("paths.out", *o.out);
  if (o.workers) c.workers = *o.workers;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chemotherapy response scoring from CT and clinical data"};
  app.require_subcommand(1);
  Options opt;

  using Command = crs::ExitCode (*)(const crs::RunConfig&, std::ostream&);
  const std::vector<std::tuple<std::string, std::string, Command>> commands{
      {"synth", "Generate a seeded synthetic cohort", crs::cmd_synth},
      {"preprocess", "Build slice stacks and morphology for every patient", crs::cmd_preprocess},
      {"train", "Train the fusion head on cached embeddings", crs::cmd_train},
      {"evaluate", "Score a split and write metric reports", crs::cmd_evaluate},
      {"ablate", "Feature ablation table", crs::cmd_ablate},
      {"morphology", "Tumour volume, surface area and component statistics", crs::cmd_morphology},
  };
  Command selected = nullptr;
  for (const auto& [name, help, fn] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config_path, "INI configuration file");
    sub->add_option("--seed", opt.seed, "Random seed (required unless set in the config)");
    sub->add_option("--threshold", opt.threshold, "Decision threshold overriding the policy")
        ->check(CLI::Range(0.0, 1.0));
    sub->add_option("--policy", opt.policy, "Threshold policy")
        ->check(CLI::IsMember({"max_f1", "precision_floor", "fixed"}));
    sub->add_option("--out", opt.out, "Output root directory");
    sub->add_option("--workers", opt.workers, "Worker threads (0 = all cores)");
    sub->add_option("--set", opt.overrides, "Override a setting, e.g. --set train.peak_lr=1e-3");
    sub->callback([&selected, f = fn] { selected = f; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(crs::ExitCode::kConfigError);
  }

  try {
    const crs::RunConfig config = build_config(opt);
    return static_cast<int>(selected(config, std::cout));
  } catch (const crs::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return static_cast<int>(crs::ExitCode::kConfigError);
  } catch (const crs::UndefinedMetricError& e) {
    std::cerr << "undefined metric: " << e.what() << "\n";
    return static_cast<int>(crs::ExitCode::kUndefinedMetric);
  } catch (const crs::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return static_cast<int>(crs::ExitCode::kDataError);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(crs::ExitCode::kDataError);
  }
}
