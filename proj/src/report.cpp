#include "sfa/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sfa/normal.hpp"
#include "sfa/translog.hpp"

namespace sfa {

using nlohmann::json;

std::string format_fixed(double value, int decimals) {
  if (std::isnan(value)) return "nan";
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*f", decimals, value);
  return buffer;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

std::string significance_stars(double estimate, double se) {
  if (!(se > 0.0)) return "";
  const double z = std::abs(estimate / se);
  const double p = 2.0 * norm_cdf(-z);
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  if (p < 0.1) return "+";
  return "";
}

namespace {

// Display label of packed parameter j: the translog term, d_<determinant>,
// or the log-variance rows.
std::string row_label(int j, int n_det, const std::vector<std::string>& det_names) {
  if (j < translog::kTermCount) return translog::kTermNames[j];
  if (j < translog::kTermCount + n_det) return "d_" + det_names[j - translog::kTermCount];
  return j == translog::kTermCount + n_det ? "ln(s_u)" : "ln(s_v)";
}

}  // namespace

std::string render_estimates_table(const std::map<std::string, EstimationResult>& results,
                                   const std::vector<std::string>& determinant_names) {
  if (results.empty()) return "";
  const int n_det = results.begin()->second.params.n_determinants;
  const int p = 16 + n_det;
  const int width = 14;

  std::ostringstream out;
  auto cell = [&](const std::string& s) {
    out << std::string(width > static_cast<int>(s.size()) ? width - s.size() : 1, ' ') << s;
  };

  out << std::string(18, ' ');
  for (const auto& [name, result] : results) cell(name);
  out << '\n';

  auto emit_row = [&](int j) {
    std::string label = row_label(j, n_det, determinant_names);
    out << label << std::string(label.size() < 18 ? 18 - label.size() : 1, ' ');
    for (const auto& [name, result] : results) {
      const double est = result.params.theta(j);
      std::string text = format_fixed(est, 3);
      if (result.stderr_valid) text += significance_stars(est, result.stderrs(j));
      cell(text);
    }
    out << '\n' << std::string(18, ' ');
    for (const auto& [name, result] : results) {
      cell(result.stderr_valid ? "(" + format_fixed(result.stderrs(j), 3) + ")" : "(--)");
    }
    out << '\n';
  };

  out << "--- Frontier ---\n";
  for (int j = 0; j < translog::kTermCount; ++j) emit_row(j);
  if (n_det > 0) {
    out << "--- Exogenous determinants of inefficiency ---\n";
    for (int j = translog::kTermCount; j < translog::kTermCount + n_det; ++j) emit_row(j);
  }
  out << "--- Inefficiency ---\n";
  for (int j = translog::kTermCount + n_det; j < p; ++j) emit_row(j);

  out << "Log likelihood    ";
  for (const auto& [name, result] : results) cell(format_fixed(result.loglik, 3));
  out << '\n';
  out << "Converged         ";
  for (const auto& [name, result] : results) cell(result.converged ? "yes" : "NO");
  out << '\n';
  out << "Significance: +: p<0.1, *: p<0.05, **: p<0.01, ***: p<0.001\n";
  out << "Standard errors (in parentheses) computed using delta method.\n";
  return out.str();
}

std::string estimates_to_json(const std::map<std::string, EstimationResult>& results,
                              const std::vector<std::string>& determinant_names) {
  json root;
  root["determinants"] = determinant_names;
  json models = json::object();
  for (const auto& [name, result] : results) {
    json model;
    const int p = result.params.size();
    json estimates = json::object();
    json stderrs = json::object();
    for (int j = 0; j < p; ++j) {
      const std::string key = result.params.entry_name(j, determinant_names);
      estimates[key] = result.params.theta(j);
      if (result.stderr_valid) stderrs[key] = result.stderrs(j);
    }
    model["estimates"] = estimates;
    if (result.stderr_valid) model["stderr"] = stderrs;
    model["loglik"] = result.loglik;
    model["converged"] = result.converged;
    model["iterations"] = result.iterations;
    model["max_gradient"] = result.max_gradient;
    model["information_positive_definite"] = result.information_positive_definite;
    model["n_determinants"] = result.params.n_determinants;
    // Derived scale parameters with delta-method standard errors.
    json derived;
    derived["sigma_u"] = result.params.sigma_u();
    derived["sigma_v"] = result.params.sigma_v();
    if (result.stderr_valid) {
      derived["sigma_u_se"] =
          delta_method_exp(result.params.ln_sigma_u(), result.stderrs(14 + result.params.n_determinants));
      derived["sigma_v_se"] =
          delta_method_exp(result.params.ln_sigma_v(), result.stderrs(15 + result.params.n_determinants));
    }
    model["derived"] = derived;
    if (!result.fixed_effects.empty()) {
      json fe = json::object();
      for (const auto& rec : result.fixed_effects) fe[rec.firm_id] = rec.alpha_hat;
      model["fixed_effects"] = fe;
    }
    models[name] = model;
  }
  root["models"] = models;
  return root.dump(2) + "\n";
}

std::map<std::string, ParameterVector> estimates_from_json(const std::string& text,
                                                           int n_determinants) {
  std::map<std::string, ParameterVector> out;
  json root = json::parse(text);
  const std::vector<std::string> det_names = root.at("determinants");
  if (static_cast<int>(det_names.size()) != n_determinants) {
    throw ConfigError("estimates file has " + std::to_string(det_names.size()) +
                      " determinants, schema expects " + std::to_string(n_determinants));
  }
  for (const auto& [name, model] : root.at("models").items()) {
    Eigen::VectorXd theta(16 + n_determinants);
    const auto& estimates = model.at("estimates");
    ParameterVector probe(Eigen::VectorXd::Zero(16 + n_determinants), n_determinants);
    for (int j = 0; j < probe.size(); ++j) {
      theta(j) = estimates.at(probe.entry_name(j, det_names)).get<double>();
    }
    out.emplace(name, ParameterVector(std::move(theta), n_determinants));
  }
  return out;
}

std::string inefficiency_to_csv(const std::vector<InefficiencyRecord>& records) {
  std::ostringstream out;
  out << "firm,category,year,u_hat,te_score,h\n";
  for (const auto& rec : records) {
    out << csv_escape(rec.firm_id) << ',' << csv_escape(rec.category) << ',' << rec.year
        << ',' << format_fixed(rec.u_hat, 6) << ',' << format_fixed(rec.te_score, 6) << ','
        << format_fixed(rec.h, 6) << '\n';
  }
  return out.str();
}

std::string fixed_effects_to_csv(const std::vector<FixedEffectRecord>& records) {
  std::ostringstream out;
  out << "firm,alpha_hat\n";
  for (const auto& rec : records) {
    out << csv_escape(rec.firm_id) << ',' << format_fixed(rec.alpha_hat, 6) << '\n';
  }
  return out.str();
}

std::string trend_to_csv(const std::vector<TrendRow>& rows) {
  std::ostringstream out;
  out << "category,year,mean_te,firms\n";
  for (const auto& row : rows) {
    out << csv_escape(row.category) << ',' << row.year << ','
        << format_fixed(row.mean_te, 6) << ',' << row.firms << '\n';
  }
  return out.str();
}

std::string tfp_records_to_csv(const std::vector<TfpRecord>& records,
                               const std::vector<std::string>& input_names) {
  std::ostringstream out;
  out << "firm,category,year_from,year_to,tfp_dot,delta_t,delta_te,scale_effect,"
         "price_effect,rts";
  for (const auto& name : input_names) out << ",gamma_" << name;
  for (const auto& name : input_names) out << ",share_" << name;
  for (const auto& name : input_names) out << ",growth_" << name;
  out << ",growth_output,valid\n";
  for (const auto& rec : records) {
    out << csv_escape(rec.firm_id) << ',' << csv_escape(rec.category) << ','
        << rec.year_from << ',' << rec.year_to << ',' << format_fixed(rec.tfp_dot, 6)
        << ',' << format_fixed(rec.delta_t, 6) << ',' << format_fixed(rec.delta_te, 6)
        << ',' << format_fixed(rec.scale_effect, 6) << ','
        << format_fixed(rec.price_effect, 6) << ',' << format_fixed(rec.rts, 6);
    for (int n = 0; n < 3; ++n) out << ',' << format_fixed(rec.gamma(n), 6);
    for (int n = 0; n < 3; ++n) out << ',' << format_fixed(rec.shares(n), 6);
    for (int n = 0; n < 3; ++n) out << ',' << format_fixed(rec.x_growth(n), 6);
    out << ',' << format_fixed(rec.y_growth, 6) << ',' << (rec.valid ? "1" : "0") << '\n';
  }
  return out.str();
}

std::string aggregate_to_csv(const std::vector<AggregateRow>& rows) {
  std::ostringstream out;
  out << "group,label,tfp_dot,delta_t,delta_te,scale_effect,price_effect,rts,records,"
         "skipped\n";
  for (const auto& row : rows) {
    out << csv_escape(row.group) << ',' << csv_escape(row.label) << ','
        << format_fixed(row.tfp_dot, 4) << ',' << format_fixed(row.delta_t, 4) << ','
        << format_fixed(row.delta_te, 4) << ',' << format_fixed(row.scale_effect, 4)
        << ',' << format_fixed(row.price_effect, 4) << ',' << format_fixed(row.rts, 4)
        << ',' << row.records << ',' << row.skipped << '\n';
  }
  return out.str();
}

std::string aggregate_to_markdown(const std::vector<AggregateRow>& rows) {
  std::ostringstream out;
  std::string current;
  for (const auto& row : rows) {
    if (row.group != current) {
      if (!current.empty()) out << '\n';
      current = row.group;
      out << "### " << current << "\n\n";
      out << "| Year | TFP | dT | dTE | Psi | Omega | Gamma |\n";
      out << "|---|---|---|---|---|---|---|\n";
    }
    out << "| " << row.label << " | " << format_fixed(row.tfp_dot, 3) << " | "
        << format_fixed(row.delta_t, 3) << " | " << format_fixed(row.delta_te, 3) << " | "
        << format_fixed(row.scale_effect, 3) << " | " << format_fixed(row.price_effect, 3)
        << " | " << format_fixed(row.rts, 3) << " |\n";
  }
  return out.str();
}

std::string validation_to_text(const ValidationReport& report) {
  std::ostringstream out;
  out << "Firms: " << report.firms_included << " of " << report.firms_total
      << " usable, firm-years: " << report.firm_years_included << " of "
      << report.firm_years_total << "\n";
  if (!report.excluded_firms.empty()) {
    out << "Excluded (T < 2):";
    for (const auto& id : report.excluded_firms) out << ' ' << id;
    out << '\n';
  }
  out << "\nBy category (firms / firm-years):\n";
  for (const auto& [cat, firms] : report.firms_by_category) {
    out << "  " << cat << ": " << firms << " / " << report.firm_years_by_category.at(cat)
        << '\n';
  }
  out << "\nFirm counts by year and category:\n";
  out << "  year";
  for (const auto& [cat, firms] : report.firms_by_category) out << '\t' << cat;
  out << '\n';
  for (const auto& [year, cells] : report.firms_by_year_category) {
    out << "  " << year;
    for (const auto& [cat, firms] : report.firms_by_category) {
      const auto it = cells.find(cat);
      out << '\t' << (it == cells.end() ? 0 : it->second);
    }
    out << '\n';
  }
  return out.str();
}

std::string mc_report_to_json(const McReport& report) {
  json root;
  root["replications"] = report.replications;
  root["failures"] = report.failures;
  json params = json::array();
  for (const auto& stats : report.parameters) {
    json entry;
    entry["name"] = stats.name;
    entry["truth"] = stats.truth;
    entry["mean_bias"] = stats.mean_bias;
    entry["rmse"] = stats.rmse;
    entry["coverage"] = stats.coverage;
    params.push_back(entry);
  }
  root["parameters"] = params;
  return root.dump(2) + "\n";
}

std::string mc_report_to_text(const McReport& report) {
  std::ostringstream out;
  out << "Monte Carlo: " << report.replications << " replications, " << report.failures
      << " failures\n\n";
  out << "parameter      truth    mean_bias      rmse  coverage\n";
  for (const auto& stats : report.parameters) {
    char line[128];
    std::snprintf(line, sizeof(line), "%-10s %9.4f  %11.5f  %8.5f  %8.3f\n",
                  stats.name.c_str(), stats.truth, stats.mean_bias, stats.rmse,
                  stats.coverage);
    out << line;
  }
  return out.str();
}

std::string dataset_to_csv(const PanelDataset& data) {
  const VariableSchema& schema = data.schema;
  std::ostringstream out;
  out << schema.firm_id << ',' << schema.year << ',' << schema.output;
  for (const auto& name : schema.inputs) out << ',' << name;
  for (const auto& name : schema.determinants) out << ',' << name;
  for (const auto& name : schema.prices) out << ',' << name;
  if (!schema.category.empty()) out << ',' << schema.category;
  out << '\n';

  char buffer[32];
  auto number = [&](double v) {
    std::snprintf(buffer, sizeof(buffer), "%.12g", v);
    out << ',' << buffer;
  };
  for (const auto& firm : data.firms) {
    for (const auto& obs : firm.observations) {
      out << csv_escape(obs.firm_id) << ',' << obs.year;
      number(obs.output);
      for (double v : obs.inputs) number(v);
      for (double v : obs.determinants) number(v);
      for (double v : obs.prices) number(v);
      if (!schema.category.empty()) out << ',' << csv_escape(obs.category);
      out << '\n';
    }
  }
  return out.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError("cannot write '" + path + "'");
  }
  out << content;
}

}  // namespace sfa
