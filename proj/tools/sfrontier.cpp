// sfrontier: within-transformed stochastic frontier estimation, TFP
// decomposition and Monte Carlo validation on firm-year panels.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sfa/cli.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::string data_path;
  std::string out_dir;
  std::string estimates_path;
  std::string frontier;
  std::string dte;
  std::string fe;
  std::string tc;
  long long seed = -1;
  bool pooled = false;
  int threads = -1;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "JSON run configuration");
  cmd->add_option("--data", flags.data_path, "panel CSV (overrides config)");
  cmd->add_option("--out", flags.out_dir, "output directory (overrides config)");
  cmd->add_option("--seed", flags.seed, "RNG seed (overrides config)");
  cmd->add_flag("--pooled", flags.pooled, "ignore the category column, fit one model");
  cmd->add_option("--frontier", flags.frontier, "production|cost")
      ->check(CLI::IsMember({"production", "cost"}));
  cmd->add_option("--dte", flags.dte, "paper|corrected Delta-TE estimator")
      ->check(CLI::IsMember({"paper", "corrected"}));
  cmd->add_option("--fe", flags.fe, "paper|corrected fixed-effect recovery")
      ->check(CLI::IsMember({"paper", "corrected"}));
  cmd->add_option("--tc", flags.tc, "eq12|full technical-change estimator")
      ->check(CLI::IsMember({"eq12", "full"}));
  cmd->add_option("--threads", flags.threads, "worker threads (simulate)");
}

sfa::RunConfig build_config(const CommonFlags& flags) {
  sfa::RunConfig config;
  if (!flags.config_path.empty()) {
    config = sfa::load_config(flags.config_path);
  }
  if (!flags.data_path.empty()) config.data_path = flags.data_path;
  if (!flags.out_dir.empty()) config.out_dir = flags.out_dir;
  if (!flags.estimates_path.empty()) config.estimates_path = flags.estimates_path;
  if (flags.pooled) config.pooled = true;
  if (flags.seed >= 0) {
    config.estimation.seed = static_cast<std::uint64_t>(flags.seed);
    config.dgp.seed = static_cast<std::uint64_t>(flags.seed);
  }
  if (flags.threads >= 0) config.threads = flags.threads;
  if (!flags.frontier.empty()) {
    config.frontier = flags.frontier == "cost" ? sfa::Frontier::Cost
                                               : sfa::Frontier::Production;
    config.dgp.frontier = config.frontier;
  }
  if (!flags.tc.empty()) {
    config.technical_change = flags.tc == "full" ? sfa::TechnicalChangeForm::FullDerivative
                                                 : sfa::TechnicalChangeForm::TimePolynomial;
  }
  if (!flags.dte.empty()) {
    config.dte = flags.dte == "paper" ? sfa::DteFormula::PaperLiteral
                                      : sfa::DteFormula::Corrected;
  }
  if (!flags.fe.empty()) {
    config.fixed_effects = flags.fe == "paper" ? sfa::FixedEffectFormula::PaperLiteral
                                               : sfa::FixedEffectFormula::Corrected;
  }
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"within-transformed stochastic frontier panel estimation"};
  app.require_subcommand(1);

  CommonFlags flags;
  CLI::App* validate = app.add_subcommand("validate", "check a panel and print tallies");
  CLI::App* estimate = app.add_subcommand("estimate", "fit the frontier model per category");
  CLI::App* decompose = app.add_subcommand("decompose", "TFP decomposition from estimates");
  CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo estimator validation");
  for (CLI::App* cmd : {validate, estimate, decompose, simulate}) {
    add_common(cmd, flags);
  }
  decompose->add_option("--estimates", flags.estimates_path,
                        "estimates.json from a previous estimate run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? sfa::kExitOk : sfa::kExitUsage;
  }

  try {
    const sfa::RunConfig config = build_config(flags);
    if (validate->parsed()) return sfa::cmd_validate(config);
    if (estimate->parsed()) return sfa::cmd_estimate(config);
    if (decompose->parsed()) return sfa::cmd_decompose(config);
    if (simulate->parsed()) return sfa::cmd_simulate(config);
    std::cerr << "no subcommand given\n";
    return sfa::kExitUsage;
  } catch (const sfa::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return sfa::kExitUsage;
  } catch (const sfa::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return sfa::kExitData;
  } catch (const sfa::EstimationError& e) {
    std::cerr << "estimation error: " << e.what() << '\n';
    return sfa::kExitConvergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return sfa::kExitUsage;
  }
}
