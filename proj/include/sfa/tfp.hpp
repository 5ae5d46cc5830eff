#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "sfa/likelihood.hpp"
#include "sfa/panel.hpp"
#include "sfa/postestimation.hpp"

namespace sfa {

/// Which discrete Delta-TE estimator feeds the decomposition. Corrected uses
/// the firm-level draw: -u*_i (h_t - h_{t-1}) / (t - t_{-1}) with
/// u*_i = u_hat_it / h_it; PaperLiteral multiplies by u_hat_it itself.
enum class DteFormula { Corrected, PaperLiteral };

/// Technical-change estimator: the time polynomial b_t + b_tt t, or the full
/// time derivative including the input-time interactions.
enum class TechnicalChangeForm { TimePolynomial, FullDerivative };

struct TfpOptions {
  TechnicalChangeForm technical_change = TechnicalChangeForm::TimePolynomial;
  DteFormula dte = DteFormula::Corrected;
  int base_year = 0;
};

/// One consecutive-pair decomposition row. tfp_dot is computed as the sum of
/// the four components, so the additive identity holds to machine precision.
struct TfpRecord {
  std::string firm_id;
  std::string category;
  int year_from = 0;
  int year_to = 0;
  double tfp_dot = 0.0;
  double delta_t = 0.0;        // technical change
  double delta_te = 0.0;       // technical-efficiency change
  double scale_effect = 0.0;   // Psi
  double price_effect = 0.0;   // Omega
  double rts = 0.0;            // Gamma at the pair midpoint
  Eigen::Vector3d gamma;       // elasticities at the pair midpoint
  Eigen::Vector3d shares;      // expenditure shares (mean of the two years)
  Eigen::Vector3d x_growth;    // per-input log growth rates
  double y_growth = 0.0;
  bool valid = true;           // false when Gamma == 0 (Psi/Omega undefined)
};

/// Log growth per consecutive observation pair, divided by the actual year
/// gap: (ln x_t - ln x_{t-1}) / (t - t_{-1}).
Eigen::Vector3d input_growth(const Observation& from, const Observation& to);
double output_growth(const Observation& from, const Observation& to);

/// S_n = w_n x_n / sum_m w_m x_m at one observation. Throws DataError when a
/// price is missing for an input the model uses.
Eigen::Vector3d expenditure_shares(const Observation& obs);

/// Full decomposition for one firm: one record per consecutive observation
/// pair. Elasticities, returns to scale and Delta-T are evaluated at the
/// pair midpoint (mean of log inputs and of t), the discretization that is
/// exact for the translog kernel.
std::vector<TfpRecord> decompose_tfp(const FirmPanel& firm, const ParameterVector& params,
                                     const std::vector<InefficiencyRecord>& inefficiency,
                                     const TfpOptions& options);

std::vector<TfpRecord> decompose_tfp(const PanelDataset& data, const ParameterVector& params,
                                     const std::vector<InefficiencyRecord>& inefficiency,
                                     const TfpOptions& options);

struct AggregateRow {
  std::string group;    // category or "All"
  std::string label;    // "2000-01" or "mean_2000-04"
  bool is_period_mean = false;
  double tfp_dot = 0.0, delta_t = 0.0, delta_te = 0.0;
  double scale_effect = 0.0, price_effect = 0.0, rts = 0.0;
  int records = 0;
  int skipped = 0;  // invalid (Gamma = 0) records excluded from the means
};

/// Unweighted means of each component by group and year pair, plus
/// sub-period means split at `boundary_year` (a pair belongs to the period
/// containing its end year). Groups: each category present, then "All".
std::vector<AggregateRow> aggregate(const std::vector<TfpRecord>& records,
                                    int boundary_year);

}  // namespace sfa
