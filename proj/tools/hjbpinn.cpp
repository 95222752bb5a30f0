#include <iostream>

#include "CLI11.hpp"
#include "hjbpinn/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"HJB PINN lab: bound reports, training, width sweeps, verification"};
  app.require_subcommand(1);
  hjbpinn::cli::Options opts;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config, "flat key = value config file");
    sub->add_option("--set", opts.overrides, "override one config key (key=value), repeatable");
    sub->add_option("--seed", opts.seed, "base seed");
    sub->add_option("--out", opts.out, "output directory (manifest.json is written here)");
    sub->add_option("--jobs", opts.jobs, "worker threads for sweeps");
    sub->add_option("--preset", opts.preset, "desk or paper");
    sub->add_option("--kernel", opts.kernel, "scalar, avx2 or auto");
  };
  common(app.add_subcommand("bounds", "print the sample-size and perturbation bound report as JSON"));
  common(app.add_subcommand("train", "train one network and write its trace"));
  common(app.add_subcommand("sweep", "train over a grid of widths and seeds"));
  common(app.add_subcommand("verify", "run the Monte Carlo and oracle checks"));
  auto* fig1 = app.add_subcommand("fig1", "emit accuracy-vs-size data and an SVG from a sweep directory");
  common(fig1);
  fig1->add_option("--sweep", opts.sweep_dir, "finished sweep directory")->required();
  auto* rerun = app.add_subcommand("rerun", "repeat the command recorded in a manifest");
  rerun->add_option("--manifest", opts.manifest, "manifest.json of an earlier run")->required();
  rerun->add_option("--out", opts.out, "output directory");
  rerun->add_option("--jobs", opts.jobs, "worker threads for sweeps");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : hjbpinn::cli::kExitConfig;
  }
  opts.command = app.get_subcommands().front()->get_name();
  return hjbpinn::cli::run(opts, std::cout, std::cerr);
}
