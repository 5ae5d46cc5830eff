#include "sfa/panel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "sfa/translog.hpp"

namespace sfa {

namespace {

// RFC-4180-style field splitter: quoted fields may contain commas and
// doubled quotes. Returns one row of cells.
std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

double parse_number(const std::string& cell, const std::string& column, int row) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(cell, &pos);
    if (pos != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw DataError("row " + std::to_string(row) + ": cannot parse '" + cell +
                    "' in column '" + column + "'");
  }
}

int find_column(const std::vector<std::string>& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) {
    throw DataError("missing column '" + name + "' in header");
  }
  return static_cast<int>(it - header.begin());
}

PanelDataset parse_stream(std::istream& in, const VariableSchema& schema,
                          const std::string& origin) {
  if (schema.inputs.size() != 3) {
    throw ConfigError("schema must name exactly 3 inputs (got " +
                      std::to_string(schema.inputs.size()) + ")");
  }
  if (!schema.prices.empty() && schema.prices.size() != schema.inputs.size()) {
    throw ConfigError("schema prices must be empty or one per input");
  }

  std::string line;
  if (!std::getline(in, line)) {
    throw DataError(origin + ": empty file");
  }
  const auto header = split_csv_row(strip_cr(line));

  const int c_firm = find_column(header, schema.firm_id);
  const int c_year = find_column(header, schema.year);
  const int c_output = find_column(header, schema.output);
  std::vector<int> c_inputs, c_dets, c_prices;
  for (const auto& n : schema.inputs) c_inputs.push_back(find_column(header, n));
  for (const auto& n : schema.determinants) c_dets.push_back(find_column(header, n));
  for (const auto& n : schema.prices) c_prices.push_back(find_column(header, n));
  const int c_cat = schema.category.empty() ? -1 : find_column(header, schema.category);

  std::map<std::string, FirmPanel> by_firm;
  std::vector<std::string> firm_order;
  std::set<std::pair<std::string, int>> seen;

  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto cells = split_csv_row(line);
    if (cells.size() < header.size()) {
      throw DataError("row " + std::to_string(row) + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(cells.size()));
    }
    auto cell = [&](int c) -> const std::string& { return cells[c]; };
    for (int c : {c_firm, c_year, c_output}) {
      if (cell(c).empty()) {
        throw DataError("row " + std::to_string(row) + ": missing required field '" +
                        header[c] + "'");
      }
    }

    Observation obs;
    obs.firm_id = cell(c_firm);
    obs.year = static_cast<int>(parse_number(cell(c_year), schema.year, row));
    obs.output = parse_number(cell(c_output), schema.output, row);
    if (!(obs.output > 0.0)) {
      throw DataError("row " + std::to_string(row) +
                      ": log of non-positive output (column '" + schema.output + "')");
    }
    for (std::size_t k = 0; k < c_inputs.size(); ++k) {
      const double v = parse_number(cell(c_inputs[k]), schema.inputs[k], row);
      if (!(v > 0.0)) {
        throw DataError("row " + std::to_string(row) +
                        ": log of non-positive input (column '" + schema.inputs[k] + "')");
      }
      obs.inputs.push_back(v);
    }
    for (std::size_t k = 0; k < c_dets.size(); ++k) {
      if (cell(c_dets[k]).empty()) {
        throw DataError("row " + std::to_string(row) + ": missing required field '" +
                        schema.determinants[k] + "'");
      }
      obs.determinants.push_back(parse_number(cell(c_dets[k]), schema.determinants[k], row));
    }
    for (std::size_t k = 0; k < c_prices.size(); ++k) {
      obs.prices.push_back(parse_number(cell(c_prices[k]), schema.prices[k], row));
    }
    if (c_cat >= 0) obs.category = cell(c_cat);

    if (!seen.insert({obs.firm_id, obs.year}).second) {
      throw DataError("row " + std::to_string(row) + ": duplicate (firm, year) pair (" +
                      obs.firm_id + ", " + std::to_string(obs.year) + ")");
    }
    auto [it, inserted] = by_firm.try_emplace(obs.firm_id);
    if (inserted) {
      it->second.firm_id = obs.firm_id;
      it->second.category = obs.category;
      firm_order.push_back(obs.firm_id);
    }
    it->second.observations.push_back(std::move(obs));
  }

  PanelDataset data;
  data.schema = schema;
  for (const auto& id : firm_order) {
    FirmPanel panel = by_firm.at(id);
    std::sort(panel.observations.begin(), panel.observations.end(),
              [](const Observation& a, const Observation& b) { return a.year < b.year; });
    data.firms.push_back(std::move(panel));
  }
  if (data.firms.empty()) {
    throw DataError(origin + ": no data rows");
  }
  return data;
}

}  // namespace

int TransformedPanel::total_observations() const {
  int n = 0;
  for (const auto& f : firms) n += f.length();
  return n;
}

PanelDataset load_csv(const std::string& path, const VariableSchema& schema) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open '" + path + "'");
  }
  return parse_stream(in, schema, path);
}

PanelDataset load_csv_text(const std::string& text, const VariableSchema& schema) {
  std::istringstream in(text);
  return parse_stream(in, schema, "<string>");
}

ValidationReport validate_panel(const PanelDataset& data) {
  ValidationReport report;
  report.firms_total = static_cast<int>(data.firms.size());
  for (const auto& firm : data.firms) {
    const int t = firm.length();
    report.firm_years_total += t;
    if (t < 2) {
      report.excluded_firms.push_back(firm.firm_id);
      continue;
    }
    ++report.firms_included;
    report.firm_years_included += t;
    const std::string cat = firm.category.empty() ? "(none)" : firm.category;
    report.firms_by_category[cat] += 1;
    report.firm_years_by_category[cat] += t;
    for (const auto& obs : firm.observations) {
      report.firms_by_year_category[obs.year][cat] += 1;
    }
  }
  if (report.firms_included == 0) {
    throw DataError("empty estimation set: every firm has fewer than 2 observations");
  }
  return report;
}

double demean_in_place(Eigen::Ref<Eigen::VectorXd> values) {
  const double mean = values.mean();
  values.array() -= mean;
  return mean;
}

TransformedPanel within_transform(const PanelDataset& data,
                                  const Eigen::MatrixXd& design,
                                  const Eigen::VectorXd& scaling,
                                  int base_year) {
  int n_obs = 0;
  for (const auto& f : data.firms) n_obs += f.length();
  if (design.rows() != n_obs || scaling.size() != n_obs) {
    throw ConfigError("design/scaling rows (" + std::to_string(design.rows()) + "/" +
                      std::to_string(scaling.size()) + ") do not match observation count (" +
                      std::to_string(n_obs) + ")");
  }

  TransformedPanel out;
  out.base_year = base_year;
  out.n_determinants = static_cast<int>(data.schema.determinants.size());
  out.input_names = data.schema.inputs;
  out.determinant_names = data.schema.determinants;

  int offset = 0;
  for (const auto& firm : data.firms) {
    const int t_len = firm.length();
    if (t_len < 2) {
      offset += t_len;
      continue;
    }
    FirmBlock block;
    block.firm_id = firm.firm_id;
    block.category = firm.category;
    block.years.reserve(t_len);
    block.time.resize(t_len);
    block.z.resize(t_len, out.n_determinants);
    for (int r = 0; r < t_len; ++r) {
      const Observation& obs = firm.observations[r];
      block.years.push_back(obs.year);
      block.time(r) = static_cast<double>(obs.year - base_year);
      for (int k = 0; k < out.n_determinants; ++k) block.z(r, k) = obs.determinants[k];
    }

    block.y_demeaned.resize(t_len);
    for (int r = 0; r < t_len; ++r) {
      block.y_demeaned(r) = std::log(firm.observations[r].output);
    }
    block.y_mean = demean_in_place(block.y_demeaned);

    block.x_demeaned = design.middleRows(offset, t_len);
    block.x_mean = block.x_demeaned.colwise().mean();
    block.x_demeaned.rowwise() -= block.x_mean;

    block.h_raw = scaling.segment(offset, t_len);
    block.h_demeaned = block.h_raw;
    demean_in_place(block.h_demeaned);

    out.firms.push_back(std::move(block));
    offset += t_len;
  }
  if (out.firms.empty()) {
    throw DataError("empty estimation set: every firm has fewer than 2 observations");
  }
  return out;
}

TransformedPanel transform_panel(const PanelDataset& data, int base_year) {
  if (base_year < 0) {
    int first = std::numeric_limits<int>::max();
    for (const auto& f : data.firms) {
      for (const auto& o : f.observations) first = std::min(first, o.year);
    }
    base_year = first;
  }
  int n_obs = 0;
  for (const auto& f : data.firms) n_obs += f.length();

  Eigen::MatrixXd design(n_obs, translog::kTermCount);
  int r = 0;
  for (const auto& firm : data.firms) {
    for (const auto& obs : firm.observations) {
      design.row(r++) = translog::design_row(obs, static_cast<double>(obs.year - base_year));
    }
  }
  return within_transform(data, design, Eigen::VectorXd::Ones(n_obs), base_year);
}

}  // namespace sfa
