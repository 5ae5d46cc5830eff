#pragma once

#include <string>
#include <vector>

#include "sfa/estimator.hpp"
#include "sfa/likelihood.hpp"
#include "sfa/panel.hpp"

namespace sfa {

struct InefficiencyRecord {
  std::string firm_id;
  std::string category;
  int year = 0;
  double u_hat = 0.0;     // E(u_it | demeaned residuals), >= 0
  double te_score = 1.0;  // exp(-u_hat), in (0, 1]
  double h = 1.0;         // scaling value at this firm-year
};

/// Which mu2/sigma2 support formulas back the fixed-effect recovery. The
/// printed sigma_v^{+-2T} exponents degenerate numerically for T >= 3 at
/// sigma_v != 1; Corrected uses sigma_v^{+-2}, PaperLiteral reproduces the
/// printed form.
enum class FixedEffectFormula { Corrected, PaperLiteral };

/// Conditional expected inefficiency per firm-year:
///   E(u_it | e) = h_it [ mu1 + sigma1 phi(mu1/sigma1) / Phi(mu1/sigma1) ]
/// with the same (mu1, sigma1) as the likelihood.
std::vector<InefficiencyRecord> inefficiency_index(const FirmBlock& firm,
                                                   const ParameterVector& params,
                                                   Frontier frontier = Frontier::Production);

std::vector<InefficiencyRecord> inefficiency_index(const TransformedPanel& data,
                                                   const ParameterVector& params,
                                                   Frontier frontier = Frontier::Production);

/// Recovers the absorbed firm intercept:
///   alpha_i = ybar_i - xbar_i' beta + sign * hbar_i * E(u*_i | e)
/// (sign + for the production frontier, - for cost), with E(u*_i | e) from
/// the mu2/sigma2 posterior over the firm's undemeaned scaling values.
FixedEffectRecord recover_fixed_effects(const FirmBlock& firm, const ParameterVector& params,
                                        Frontier frontier = Frontier::Production,
                                        FixedEffectFormula formula = FixedEffectFormula::Corrected);

std::vector<FixedEffectRecord> recover_fixed_effects(
    const TransformedPanel& data, const ParameterVector& params,
    Frontier frontier = Frontier::Production,
    FixedEffectFormula formula = FixedEffectFormula::Corrected);

struct TrendRow {
  std::string category;
  int year = 0;
  double mean_te = 0.0;
  int firms = 0;
};

/// Arithmetic means of te_score by (category, year), plot-ready. Empty
/// groups are simply absent.
std::vector<TrendRow> efficiency_trend(const std::vector<InefficiencyRecord>& records);

}  // namespace sfa
