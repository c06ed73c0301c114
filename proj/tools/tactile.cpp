#include <CLI11.hpp>

#include <algorithm>
#include <iostream>
#include <optional>
#include <thread>

#include "tactile/cli/commands.hpp"
#include "tactile/cli/config.hpp"
#include "tactile/error.hpp"

namespace {

using namespace tactile;

struct Args {
  std::string config_path;
  std::string preset_name;
  std::string out = "out";
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  std::optional<std::uint64_t> seed;
  bool force = false;
  std::string manifest;
};

cli::ExperimentConfig resolve_config(const Args& a) {
  cli::ExperimentConfig c;
  if (!a.config_path.empty()) {
    c = cli::load_config(a.config_path);
    if (a.seed) c.seed = *a.seed;
  } else if (!a.preset_name.empty()) {
    c = cli::preset(a.preset_name, a.seed.value_or(1));
  } else {
    throw Error(ErrorCode::Config, "one of --config or --preset is required");
  }
  cli::validate(c);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulate, ingest and classify magnetic tactile sensor scans"};
  app.require_subcommand(1);
  Args args;

  auto add_common = [&](CLI::App* sub) {
    auto* cfg = sub->add_option("--config", args.config_path, "experiment config (JSON)")->check(CLI::ExistingFile);
    auto presets = cli::preset_names();
    sub->add_option("--preset", args.preset_name, "built-in experiment")
        ->check(CLI::IsMember(presets))
        ->excludes(cfg);
    sub->add_option("--out", args.out, "output directory")->capture_default_str();
    sub->add_option("--jobs", args.jobs, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--seed", args.seed, "override the global seed");
    sub->add_flag("--force", args.force, "recompute outputs that are already up to date");
  };

  auto* simulate = app.add_subcommand("simulate", "simulate every (design, surface, velocity, repetition) run");
  auto* features = app.add_subcommand("features", "extract per-design feature tables");
  auto* classify = app.add_subcommand("classify", "cross-validated k-NN accuracies and statistics");
  auto* ingest = app.add_subcommand("ingest", "segment recorded logs into passes");
  auto* report = app.add_subcommand("report", "re-render plots from the accuracy report");
  for (auto* sub : {simulate, features, classify, ingest, report}) add_common(sub);
  ingest->add_option("--manifest", args.manifest, "session manifest (defaults to the config's ingest.manifest)")
      ->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    const auto config = resolve_config(args);
    cli::CommandOptions opts;
    opts.out = args.out;
    opts.jobs = args.jobs;
    opts.force = args.force;
    opts.log = &std::cerr;

    cli::CommandResult result;
    if (simulate->parsed()) {
      result = cli::cmd_simulate(config, opts);
    } else if (features->parsed()) {
      result = cli::cmd_features(config, opts);
    } else if (classify->parsed()) {
      result = cli::cmd_classify(config, opts);
    } else if (ingest->parsed()) {
      std::filesystem::path manifest = args.manifest;
      if (manifest.empty()) {
        if (!config.manifest) throw Error(ErrorCode::Config, "ingest needs --manifest or ingest.manifest in the config");
        manifest = *config.manifest;
      }
      result = cli::cmd_ingest(config, manifest, opts);
    } else {
      result = cli::cmd_report(config, opts);
    }
    return result.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::exit_code_for(e);
  }
}
