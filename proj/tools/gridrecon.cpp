#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gridrecon/cli/commands.hpp"
#include "gridrecon/cli/config.hpp"
#include "gridrecon/version.hpp"

namespace {

struct Overrides {
  std::string config;
  std::vector<double> lambdas;
  std::vector<double> kappas;
  double rho = -1.0;
  double beta = -1.0;
  std::string samples;
  long long seed = -1;
  std::string partition;
  std::string baseline;
  bool check_central = false;
  bool serial = false;
  std::string out;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "run configuration or manifest (JSON)")->required();
  cmd->add_option("--rho", o.rho, "violation probability");
  cmd->add_option("--beta", o.beta, "confidence parameter");
  cmd->add_option("--samples", o.samples, "scenario count, or 'auto' for the sample-size bound");
  cmd->add_option("--seed", o.seed, "scenario RNG seed");
  cmd->add_flag("--serial", o.serial, "disable OpenMP kernels");
  cmd->add_option("--out", o.out, "output directory");
}

void apply(const Overrides& o, gridrecon::cli::RunConfig& c) {
  namespace fs = std::filesystem;
  if (!o.lambdas.empty()) c.lambdas = o.lambdas;
  if (!o.kappas.empty()) c.kappas = o.kappas;
  if (o.rho >= 0.0) c.rho = o.rho;
  if (o.beta >= 0.0) c.beta = o.beta;
  if (o.samples == "auto") {
    c.samples.reset();
  } else if (!o.samples.empty()) {
    std::size_t pos = 0;
    const long long k = std::stoll(o.samples, &pos);
    if (pos != o.samples.size()) throw CLI::ValidationError("--samples", "expected an integer or 'auto'");
    c.samples = k;
  }
  if (o.seed >= 0) c.seed = static_cast<std::uint64_t>(o.seed);
  if (!o.partition.empty()) c.partition = fs::absolute(o.partition).string();
  if (!o.baseline.empty()) c.baseline = o.baseline;
  if (o.check_central) c.check_central = true;
  if (o.serial) c.parallel = false;
  if (!o.out.empty()) c.out = fs::absolute(o.out).string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Risk-constrained microgrid reconfiguration"};
  app.set_version_flag("--version", gridrecon::kVersion);
  app.require_subcommand(1);

  Overrides o;
  auto* solve = app.add_subcommand("solve", "solve at one lambda");
  add_common(solve, o);
  solve->add_option("--lambda", o.lambdas, "sparsity weight")->expected(1);

  auto* sweep = app.add_subcommand("sweep", "solve over an ascending list of lambdas");
  add_common(sweep, o);
  sweep->add_option("--lambda-list", o.lambdas, "comma separated lambdas")->delimiter(',');

  auto* dist = app.add_subcommand("distributed", "consensus ADMM over a partition");
  add_common(dist, o);
  dist->add_option("--lambda", o.lambdas, "sparsity weight")->expected(1);
  dist->add_option("--partition", o.partition, "partition JSON");
  dist->add_option("--kappa", o.kappas, "ADMM penalty (repeat or comma separate)")->delimiter(',');
  dist->add_option("--baseline", o.baseline, "comparison method")->check(CLI::IsMember({"subgradient"}));
  dist->add_flag("--check-central", o.check_central, "also solve centrally and record the distance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : gridrecon::cli::kError;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  gridrecon::cli::RunConfig config;
  try {
    config = gridrecon::cli::load_run_config(o.config);
    apply(o, config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return gridrecon::cli::kError;
  }
  return gridrecon::cli::run_command(command, config, std::cerr);
}
