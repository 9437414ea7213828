#include <CLI11.hpp>

#include <exception>
#include <iostream>

#include "speclab/config.hpp"
#include "speclab/experiment.hpp"

namespace {

struct CommonArgs {
  std::string configPath;
  std::string outDir;
  long long seed = -1;
  bool strict = false;
};

void addCommon(CLI::App* sub, CommonArgs& args) {
  sub->add_option("--config", args.configPath, "experiment config file (JSON)")
      ->required();
  sub->add_option("--out", args.outDir, "output directory (overrides config)");
  sub->add_option("--seed", args.seed, "seed override");
  sub->add_flag("--strict", args.strict,
                "fail instead of warn on under-resolved runs");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "speclab — spectral constants, smallness propagation and heat-equation "
      "null controls on coefficient tori"};
  app.require_subcommand(1);

  const char* kinds[] = {"spectrum", "specineq", "propagation", "sobolev",
                         "control",  "obster",   "sets"};
  CommonArgs args;
  for (const char* kind : kinds) {
    auto* sub = app.add_subcommand(kind, std::string("run a ") + kind +
                                             " experiment");
    addCommon(sub, args);
  }

  CLI11_PARSE(app, argc, argv);
  const std::string subcommand = app.get_subcommands().front()->get_name();

  try {
    speclab::ExperimentConfig cfg = speclab::load_config(args.configPath);
    if (cfg.experiment != subcommand) {
      std::cerr << "config error: config names experiment '" << cfg.experiment
                << "' but the subcommand is '" << subcommand << "'\n";
      return 2;
    }
    if (!args.outDir.empty()) cfg.output = args.outDir;
    if (args.seed >= 0) cfg.seed = static_cast<unsigned long long>(args.seed);
    cfg.strict = args.strict;

    speclab::RunRecord record = speclab::run_experiment(cfg);
    for (const auto& c : record.checks) {
      std::cout << (c.pass ? "[PASS] " : "[FAIL] ") << c.name
                << (c.detail.empty() ? "" : " — " + c.detail) << "\n";
    }
    for (const auto& w : record.warnings) std::cout << "[WARN] " << w << "\n";
    std::cout << "outputs in " << record.outputDir << " (config "
              << record.configHash << ")\n";
    return record.allPassed() ? 0 : 1;
  } catch (const speclab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
