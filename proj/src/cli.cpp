#include "sfa/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sfa/report.hpp"

namespace sfa {

using nlohmann::json;

namespace {

Frontier parse_frontier(const std::string& value) {
  if (value == "production") return Frontier::Production;
  if (value == "cost") return Frontier::Cost;
  throw ConfigError("frontier must be 'production' or 'cost', got '" + value + "'");
}

TechnicalChangeForm parse_tc(const std::string& value) {
  if (value == "eq12" || value == "time_polynomial") return TechnicalChangeForm::TimePolynomial;
  if (value == "full" || value == "full_derivative") return TechnicalChangeForm::FullDerivative;
  throw ConfigError("technical_change must be 'eq12' or 'full', got '" + value + "'");
}

DteFormula parse_dte(const std::string& value) {
  if (value == "corrected") return DteFormula::Corrected;
  if (value == "paper") return DteFormula::PaperLiteral;
  throw ConfigError("dte must be 'corrected' or 'paper', got '" + value + "'");
}

FixedEffectFormula parse_fe(const std::string& value) {
  if (value == "corrected") return FixedEffectFormula::Corrected;
  if (value == "paper") return FixedEffectFormula::PaperLiteral;
  throw ConfigError("fe must be 'corrected' or 'paper', got '" + value + "'");
}

// Groups firms by category; a single "pooled" group when no category column
// is bound or --pooled was given.
std::map<std::string, PanelDataset> split_by_category(const PanelDataset& data,
                                                      bool pooled) {
  std::map<std::string, PanelDataset> groups;
  if (pooled || data.schema.category.empty()) {
    groups.emplace("pooled", data);
    return groups;
  }
  for (const auto& firm : data.firms) {
    const std::string cat = firm.category.empty() ? "(none)" : firm.category;
    auto [it, inserted] = groups.try_emplace(cat);
    if (inserted) it->second.schema = data.schema;
    it->second.firms.push_back(firm);
  }
  return groups;
}

std::filesystem::path out_path(const RunConfig& config, const std::string& name) {
  std::filesystem::create_directories(config.out_dir);
  return std::filesystem::path(config.out_dir) / name;
}

}  // namespace

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config '" + path + "'");
  }
  json root;
  try {
    in >> root;
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }

  RunConfig config;
  try {
    if (root.contains("data")) config.data_path = root.at("data").get<std::string>();
    if (root.contains("out")) config.out_dir = root.at("out").get<std::string>();
    if (root.contains("estimates")) config.estimates_path = root.at("estimates").get<std::string>();
    if (root.contains("base_year")) config.base_year = root.at("base_year").get<int>();
    if (root.contains("pooled")) config.pooled = root.at("pooled").get<bool>();
    if (root.contains("threads")) config.threads = root.at("threads").get<int>();
    if (root.contains("frontier")) config.frontier = parse_frontier(root.at("frontier"));
    if (root.contains("technical_change")) config.technical_change = parse_tc(root.at("technical_change"));
    if (root.contains("dte")) config.dte = parse_dte(root.at("dte"));
    if (root.contains("fixed_effects")) config.fixed_effects = parse_fe(root.at("fixed_effects"));
    if (root.contains("period_boundary")) config.period_boundary = root.at("period_boundary").get<int>();

    if (root.contains("schema")) {
      const auto& s = root.at("schema");
      if (s.contains("firm_id")) config.schema.firm_id = s.at("firm_id").get<std::string>();
      if (s.contains("year")) config.schema.year = s.at("year").get<std::string>();
      if (s.contains("output")) config.schema.output = s.at("output").get<std::string>();
      if (s.contains("inputs")) config.schema.inputs = s.at("inputs").get<std::vector<std::string>>();
      if (s.contains("determinants")) config.schema.determinants = s.at("determinants").get<std::vector<std::string>>();
      if (s.contains("prices")) config.schema.prices = s.at("prices").get<std::vector<std::string>>();
      if (s.contains("category")) config.schema.category = s.at("category").get<std::string>();
    }

    if (root.contains("estimation")) {
      const auto& e = root.at("estimation");
      if (e.contains("max_iterations")) config.estimation.max_iterations = e.at("max_iterations").get<int>();
      if (e.contains("gradient_tolerance")) config.estimation.gradient_tolerance = e.at("gradient_tolerance").get<double>();
      if (e.contains("parameter_tolerance")) config.estimation.parameter_tolerance = e.at("parameter_tolerance").get<double>();
      if (e.contains("multistart")) config.estimation.multistart = e.at("multistart").get<int>();
      if (e.contains("seed")) config.estimation.seed = e.at("seed").get<std::uint64_t>();
      if (config.estimation.gradient_tolerance <= 0.0 || config.estimation.parameter_tolerance <= 0.0) {
        throw ConfigError("estimation tolerances must be positive");
      }
    }

    if (root.contains("simulate")) {
      const auto& s = root.at("simulate");
      if (s.contains("firms")) config.dgp.n_firms = s.at("firms").get<int>();
      if (s.contains("t")) { config.dgp.t_min = config.dgp.t_max = s.at("t").get<int>(); }
      if (s.contains("t_min")) config.dgp.t_min = s.at("t_min").get<int>();
      if (s.contains("t_max")) config.dgp.t_max = s.at("t_max").get<int>();
      if (s.contains("sigma_u")) config.dgp.sigma_u = s.at("sigma_u").get<double>();
      if (s.contains("sigma_v")) config.dgp.sigma_v = s.at("sigma_v").get<double>();
      if (s.contains("alpha_scale")) config.dgp.alpha_scale = s.at("alpha_scale").get<double>();
      if (s.contains("replications")) config.replications = s.at("replications").get<int>();
      if (s.contains("seed")) config.dgp.seed = s.at("seed").get<std::uint64_t>();
      if (s.contains("beta")) {
        const auto values = s.at("beta").get<std::vector<double>>();
        if (values.size() != 14) throw ConfigError("simulate.beta must have 14 entries");
        config.dgp.beta = Eigen::Map<const Eigen::VectorXd>(values.data(), 14);
      }
      if (s.contains("delta")) {
        const auto values = s.at("delta").get<std::vector<double>>();
        config.dgp.delta = Eigen::Map<const Eigen::VectorXd>(values.data(),
                                                             static_cast<Eigen::Index>(values.size()));
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  config.dgp.base_year = config.base_year >= 0 ? config.base_year : config.dgp.base_year;
  config.dgp.frontier = config.frontier;
  return config;
}

int cmd_validate(const RunConfig& config) {
  const PanelDataset data = load_csv(config.data_path, config.schema);
  const ValidationReport report = validate_panel(data);
  const std::string text = validation_to_text(report);
  std::cout << text;
  write_file(out_path(config, "validation.txt").string(), text);
  return kExitOk;
}

int cmd_estimate(const RunConfig& config) {
  const PanelDataset data = load_csv(config.data_path, config.schema);
  validate_panel(data);

  int base_year = config.base_year;
  if (base_year < 0) {
    base_year = std::numeric_limits<int>::max();
    for (const auto& f : data.firms) {
      for (const auto& o : f.observations) base_year = std::min(base_year, o.year);
    }
  }

  EstimationConfig est_config = config.estimation;
  est_config.frontier = config.frontier;

  std::map<std::string, EstimationResult> results;
  int failures = 0;
  for (auto& [name, group] : split_by_category(data, config.pooled)) {
    try {
      validate_panel(group);
      const TransformedPanel transformed = transform_panel(group, base_year);
      EstimationResult result = maximize(transformed, est_config);
      result.fixed_effects = recover_fixed_effects(transformed, result.params,
                                                   config.frontier, config.fixed_effects);
      if (!result.converged) {
        std::cerr << "warning: category '" << name << "' did not meet the gradient tolerance"
                  << " (max |g| = " << result.max_gradient << ")\n";
      }
      results.emplace(name, std::move(result));
    } catch (const std::runtime_error& e) {
      ++failures;
      std::cerr << "category '" << name << "' failed: " << e.what() << '\n';
    }
  }
  if (results.empty()) {
    std::cerr << "estimation failed for every category\n";
    return kExitConvergence;
  }

  write_file(out_path(config, "estimates.json").string(),
             estimates_to_json(results, config.schema.determinants));
  const std::string table = render_estimates_table(results, config.schema.determinants);
  write_file(out_path(config, "estimates.txt").string(), table);
  std::cout << table;

  // Post-estimation emissions per category: inefficiency, trend, fixed effects.
  std::vector<InefficiencyRecord> all_ineff;
  std::vector<FixedEffectRecord> all_fe;
  for (auto& [name, group] : split_by_category(data, config.pooled)) {
    const auto it = results.find(name);
    if (it == results.end()) continue;
    const TransformedPanel transformed = transform_panel(group, base_year);
    auto ineff = inefficiency_index(transformed, it->second.params, config.frontier);
    all_ineff.insert(all_ineff.end(), ineff.begin(), ineff.end());
    all_fe.insert(all_fe.end(), it->second.fixed_effects.begin(),
                  it->second.fixed_effects.end());
  }
  write_file(out_path(config, "inefficiency.csv").string(), inefficiency_to_csv(all_ineff));
  write_file(out_path(config, "fixed_effects.csv").string(), fixed_effects_to_csv(all_fe));
  write_file(out_path(config, "efficiency_trend.csv").string(),
             trend_to_csv(efficiency_trend(all_ineff)));

  return failures == 0 ? kExitOk : kExitConvergence;
}

int cmd_decompose(const RunConfig& config) {
  const PanelDataset data = load_csv(config.data_path, config.schema);
  if (config.schema.prices.empty()) {
    throw ConfigError("decompose needs price columns in the schema");
  }
  const std::string estimates_path =
      config.estimates_path.empty() ? out_path(config, "estimates.json").string()
                                    : config.estimates_path;
  std::ifstream in(estimates_path);
  if (!in) {
    throw ConfigError("cannot open estimates '" + estimates_path + "'");
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  const auto models = estimates_from_json(
      buffer.str(), static_cast<int>(config.schema.determinants.size()));

  int base_year = config.base_year;
  if (base_year < 0) {
    base_year = std::numeric_limits<int>::max();
    for (const auto& f : data.firms) {
      for (const auto& o : f.observations) base_year = std::min(base_year, o.year);
    }
  }

  TfpOptions options;
  options.technical_change = config.technical_change;
  options.dte = config.dte;
  options.base_year = base_year;

  std::vector<TfpRecord> all_records;
  for (auto& [name, group] : split_by_category(data, config.pooled)) {
    const auto it = models.find(name);
    if (it == models.end()) {
      throw ConfigError("estimates file has no model for category '" + name + "'");
    }
    const TransformedPanel transformed = transform_panel(group, base_year);
    const auto ineff = inefficiency_index(transformed, it->second, config.frontier);
    const auto records = decompose_tfp(group, it->second, ineff, options);
    all_records.insert(all_records.end(), records.begin(), records.end());
  }

  write_file(out_path(config, "decomposition.csv").string(),
             tfp_records_to_csv(all_records, config.schema.inputs));
  const auto rows = aggregate(all_records, config.period_boundary);
  write_file(out_path(config, "aggregate.csv").string(), aggregate_to_csv(rows));
  const std::string markdown = aggregate_to_markdown(rows);
  write_file(out_path(config, "aggregate.md").string(), markdown);
  std::cout << markdown;
  return kExitOk;
}

int cmd_simulate(const RunConfig& config) {
  if (config.replications < 2) {
    throw ConfigError("replications must be >= 2");
  }
  EstimationConfig est_config = config.estimation;
  est_config.frontier = config.frontier;
  const McReport report =
      run_monte_carlo(config.dgp, config.replications, est_config, config.threads);
  write_file(out_path(config, "mc_report.json").string(), mc_report_to_json(report));
  const std::string text = mc_report_to_text(report);
  write_file(out_path(config, "mc_report.txt").string(), text);
  std::cout << text;
  return kExitOk;
}

}  // namespace sfa
