#pragma once

#include <string>
#include <vector>

#include "sfa/estimator.hpp"
#include "sfa/panel.hpp"
#include "sfa/postestimation.hpp"
#include "sfa/simulate.hpp"
#include "sfa/tfp.hpp"

namespace sfa {

/// Everything a batch run needs, assembled from the JSON config file and
/// command-line overrides (flags win). See README for the file layout.
struct RunConfig {
  std::string data_path;
  std::string out_dir = ".";
  VariableSchema schema;
  int base_year = -1;  // -1: first year in the dataset
  bool pooled = false;
  Frontier frontier = Frontier::Production;
  TechnicalChangeForm technical_change = TechnicalChangeForm::TimePolynomial;
  DteFormula dte = DteFormula::Corrected;
  FixedEffectFormula fixed_effects = FixedEffectFormula::Corrected;
  EstimationConfig estimation;
  int period_boundary = 2004;
  DgpSpec dgp = DgpSpec::defaults();
  int replications = 200;
  int threads = 0;
  std::string estimates_path;  // input for decompose
};

/// Exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitConvergence = 3;

RunConfig load_config(const std::string& path);

int cmd_validate(const RunConfig& config);
int cmd_estimate(const RunConfig& config);
int cmd_decompose(const RunConfig& config);
int cmd_simulate(const RunConfig& config);

}  // namespace sfa
