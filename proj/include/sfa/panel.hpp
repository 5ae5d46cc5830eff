#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace sfa {

/// Data problems: bad files, bad columns, domain violations. Exit code 2.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bad configuration or usage. Exit code 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Binds model roles to CSV column names. Inputs are ordered (the translog
/// reads them as K, L, F); prices[i] is the factor price of inputs[i].
struct VariableSchema {
  std::string firm_id = "firm";
  std::string year = "year";
  std::string output = "output";
  std::vector<std::string> inputs;        // exactly 3
  std::vector<std::string> determinants;  // inefficiency determinants, K >= 0
  std::vector<std::string> prices;        // empty, or one per input
  std::string category;                   // optional firm-class column
};

struct Observation {
  std::string firm_id;
  int year = 0;
  double output = 0.0;
  std::vector<double> inputs;        // aligned with schema.inputs
  std::vector<double> determinants;  // aligned with schema.determinants
  std::vector<double> prices;        // aligned with schema.prices (may be empty)
  std::string category;
};

struct FirmPanel {
  std::string firm_id;
  std::string category;
  std::vector<Observation> observations;  // strictly increasing years
  int length() const { return static_cast<int>(observations.size()); }
};

struct PanelDataset {
  VariableSchema schema;
  std::vector<FirmPanel> firms;
};

struct ValidationReport {
  int firms_total = 0;
  int firms_included = 0;
  int firm_years_total = 0;
  int firm_years_included = 0;
  std::vector<std::string> excluded_firms;  // panels with T < 2
  std::map<std::string, int> firms_by_category;
  std::map<std::string, int> firm_years_by_category;
  // year -> category -> firm count, for the Table-2 style grid
  std::map<int, std::map<std::string, int>> firms_by_year_category;
};

/// One firm's within-transformed block plus everything the estimator and
/// post-estimation steps need: demeaned y and X, the raw determinant rows
/// (h depends on delta, so it is rebuilt per evaluation), and the firm means
/// used to recover fixed effects.
struct FirmBlock {
  std::string firm_id;
  std::string category;
  std::vector<int> years;
  Eigen::VectorXd time;        // year - base_year, per observation
  Eigen::VectorXd y_demeaned;  // T
  Eigen::MatrixXd x_demeaned;  // T x 14
  Eigen::MatrixXd z;           // T x K raw determinant rows
  double y_mean = 0.0;
  Eigen::RowVectorXd x_mean;   // 1 x 14
  // Scaling values as of the delta used at transform time (delta = 0 gives
  // h = 1). Estimation recomputes these; kept for inspection and tests.
  Eigen::VectorXd h_raw;
  Eigen::VectorXd h_demeaned;
  int length() const { return static_cast<int>(years.size()); }
};

struct TransformedPanel {
  std::vector<FirmBlock> firms;
  int base_year = 0;
  int n_determinants = 0;
  std::vector<std::string> input_names;
  std::vector<std::string> determinant_names;
  int total_observations() const;
};

/// Loads a UTF-8, comma-separated, header-first CSV and groups rows into
/// time-sorted firm panels. Rejects missing schema columns, non-positive
/// outputs/inputs and duplicate (firm, year) pairs.
PanelDataset load_csv(const std::string& path, const VariableSchema& schema);

/// Same parser over an in-memory string (tests, generated data).
PanelDataset load_csv_text(const std::string& text, const VariableSchema& schema);

/// Counts firms and firm-years and lists panels with T < 2, which carry no
/// within-variation and are excluded from estimation. Throws DataError if
/// nothing survives.
ValidationReport validate_panel(const PanelDataset& data);

/// Subtracts the firm mean from every column of design/scaling/y, firm by
/// firm. `design` rows and `scaling` values must align one-to-one with the
/// dataset's observations in firm-major, time-ascending order.
TransformedPanel within_transform(const PanelDataset& data,
                                  const Eigen::MatrixXd& design,
                                  const Eigen::VectorXd& scaling,
                                  int base_year);

/// Builds the translog design internally and within-transforms the panel.
/// Firms with T < 2 are dropped (mirroring validate_panel's exclusion list).
/// base_year < 0 means "use the first year observed in the dataset".
TransformedPanel transform_panel(const PanelDataset& data, int base_year = -1);

/// Demeans a vector in place; returns the subtracted mean.
double demean_in_place(Eigen::Ref<Eigen::VectorXd> values);

}  // namespace sfa
