#pragma once

#include <map>
#include <string>
#include <vector>

#include "sfa/estimator.hpp"
#include "sfa/panel.hpp"
#include "sfa/postestimation.hpp"
#include "sfa/simulate.hpp"
#include "sfa/tfp.hpp"

namespace sfa {

/// Fixed-precision float formatting used by every emitter, so identical
/// results always serialize to identical bytes.
std::string format_fixed(double value, int decimals);

/// RFC-4180-style quoting: fields containing commas, quotes or newlines are
/// wrapped and inner quotes doubled.
std::string csv_escape(const std::string& field);

/// Significance stars from a two-sided normal p-value:
/// + p<0.1, * p<0.05, ** p<0.01, *** p<0.001.
std::string significance_stars(double estimate, double se);

/// One estimated model per column (category name -> result), rendered as an
/// aligned text table: frontier block, exogenous-determinant block,
/// inefficiency block (ln sigma_u / ln sigma_v), log-likelihood row,
/// standard errors in parentheses underneath each estimate.
std::string render_estimates_table(const std::map<std::string, EstimationResult>& results,
                                   const std::vector<std::string>& determinant_names);

/// Same content as JSON (nlohmann serialization, sorted keys).
std::string estimates_to_json(const std::map<std::string, EstimationResult>& results,
                              const std::vector<std::string>& determinant_names);

/// Parses estimates_to_json output back into packed parameter vectors, for
/// the decompose command.
std::map<std::string, ParameterVector> estimates_from_json(const std::string& text,
                                                           int n_determinants);

std::string inefficiency_to_csv(const std::vector<InefficiencyRecord>& records);
std::string fixed_effects_to_csv(const std::vector<FixedEffectRecord>& records);
std::string trend_to_csv(const std::vector<TrendRow>& rows);

std::string tfp_records_to_csv(const std::vector<TfpRecord>& records,
                               const std::vector<std::string>& input_names);
std::string aggregate_to_csv(const std::vector<AggregateRow>& rows);
std::string aggregate_to_markdown(const std::vector<AggregateRow>& rows);

std::string validation_to_text(const ValidationReport& report);
std::string mc_report_to_json(const McReport& report);
std::string mc_report_to_text(const McReport& report);

/// Serializes a dataset back to the CSV layout its schema describes
/// (fixtures, generated panels).
std::string dataset_to_csv(const PanelDataset& data);

void write_file(const std::string& path, const std::string& content);

}  // namespace sfa
