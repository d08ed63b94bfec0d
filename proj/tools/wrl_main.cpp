#include "wrl/cli.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Wasserstein-regularised policy gradients"};
  app.require_subcommand(1);

  wrl::cli::RunOptions run_options;
  long seed_flag = -1;
  CLI::App* run = app.add_subcommand("run", "Run a configured experiment for each seed");
  run->add_option("--config", run_options.config_path, "Experiment config file (JSON)")
      ->required();
  run->add_option("--seed", seed_flag, "Run a single seed instead of the config's list");
  run->add_option("--jobs", run_options.jobs, "Concurrent seeds (default 1)");
  run->add_option("--out", run_options.out_dir,
                  "Output directory (default: config output_dir, then $WRL_OUT_DIR, then ./out)");
  run->add_option("--set", run_options.overrides,
                  "Config override as dotted.path=value (repeatable)");

  std::vector<std::string> csv_paths;
  std::string out_svg;
  CLI::App* plot = app.add_subcommand("plot", "Render learning curves from run CSVs to SVG");
  plot->add_option("csvs", csv_paths, "Input CSV files")->required()->expected(-1);
  plot->add_option("--out", out_svg, "Output SVG path")->required();

  wrl::cli::OtOptions ot_options;
  CLI::App* ot = app.add_subcommand("ot", "Solve optimal transport between two measure files");
  ot->add_option("--mu", ot_options.mu_path, "Left measure (JSON)")->required();
  ot->add_option("--nu", ot_options.nu_path, "Right measure (JSON)")->required();
  ot->add_option("--method", ot_options.method, "sinkhorn (default) or exact");
  ot->add_option("--cost", ot_options.cost, "euclidean (default), sqeuclidean or l1");
  ot->add_option("--rho", ot_options.rho, "Entropy regularisation (default 1.0)");
  ot->add_option("--tol", ot_options.tol, "Marginal residual tolerance (default 1e-8)");
  ot->add_option("--max-iters", ot_options.max_iters, "Iteration cap (default 10000)");
  ot->add_option("--convention", ot_options.convention,
                 "Reported value convention: entropy_h (default) or kl_product");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    if (seed_flag >= 0) run_options.seed = seed_flag;
    return wrl::cli::run(run_options, std::cout, std::cerr);
  }
  if (plot->parsed()) return wrl::cli::plot(csv_paths, out_svg, std::cerr);
  return wrl::cli::ot(ot_options, std::cout, std::cerr);
}
