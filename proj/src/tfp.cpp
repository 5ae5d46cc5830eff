#include "sfa/tfp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include "sfa/translog.hpp"

namespace sfa {

namespace {

Eigen::Vector3d log_inputs(const Observation& obs) {
  Eigen::Vector3d logs;
  for (int n = 0; n < 3; ++n) logs(n) = std::log(obs.inputs[n]);
  return logs;
}

std::string pair_label(int from, int to) {
  char buffer[16];
  std::snprintf(buffer, sizeof(buffer), "%d-%02d", from, to % 100);
  return buffer;
}

}  // namespace

Eigen::Vector3d input_growth(const Observation& from, const Observation& to) {
  const double gap = static_cast<double>(to.year - from.year);
  if (!(gap > 0.0)) {
    throw DataError("growth rate needs increasing years (firm " + from.firm_id + ")");
  }
  return (log_inputs(to) - log_inputs(from)) / gap;
}

double output_growth(const Observation& from, const Observation& to) {
  const double gap = static_cast<double>(to.year - from.year);
  return (std::log(to.output) - std::log(from.output)) / gap;
}

Eigen::Vector3d expenditure_shares(const Observation& obs) {
  if (obs.prices.size() != obs.inputs.size()) {
    throw DataError("missing factor prices for firm " + obs.firm_id + ", year " +
                    std::to_string(obs.year));
  }
  Eigen::Vector3d expenditure;
  for (int n = 0; n < 3; ++n) expenditure(n) = obs.prices[n] * obs.inputs[n];
  const double total = expenditure.sum();
  if (!(total > 0.0)) {
    throw DataError("total expenditure is zero for firm " + obs.firm_id + ", year " +
                    std::to_string(obs.year));
  }
  return expenditure / total;
}

std::vector<TfpRecord> decompose_tfp(const FirmPanel& firm, const ParameterVector& params,
                                     const std::vector<InefficiencyRecord>& inefficiency,
                                     const TfpOptions& options) {
  std::map<int, const InefficiencyRecord*> by_year;
  for (const auto& rec : inefficiency) {
    if (rec.firm_id == firm.firm_id) by_year[rec.year] = &rec;
  }

  const Eigen::VectorXd beta = params.beta();
  std::vector<TfpRecord> records;
  for (std::size_t r = 1; r < firm.observations.size(); ++r) {
    const Observation& prev = firm.observations[r - 1];
    const Observation& curr = firm.observations[r];
    const double gap = static_cast<double>(curr.year - prev.year);

    TfpRecord rec;
    rec.firm_id = firm.firm_id;
    rec.category = firm.category;
    rec.year_from = prev.year;
    rec.year_to = curr.year;
    rec.x_growth = input_growth(prev, curr);
    rec.y_growth = output_growth(prev, curr);
    rec.shares = 0.5 * (expenditure_shares(prev) + expenditure_shares(curr));

    // Midpoint evaluation: exact discretization of the Divisia integrand for
    // a quadratic-in-logs kernel.
    const Eigen::Vector3d mid_logs = 0.5 * (log_inputs(prev) + log_inputs(curr));
    const double mid_t =
        0.5 * static_cast<double>(prev.year + curr.year) - options.base_year;
    rec.gamma = translog::elasticities(beta, mid_logs(0), mid_logs(1), mid_logs(2), mid_t);
    rec.rts = translog::returns_to_scale(rec.gamma);

    rec.delta_t = options.technical_change == TechnicalChangeForm::TimePolynomial
                      ? translog::technical_change(beta, mid_t)
                      : translog::technical_change_full(beta, mid_logs(0), mid_logs(1),
                                                        mid_logs(2), mid_t);

    const auto it_curr = by_year.find(curr.year);
    const auto it_prev = by_year.find(prev.year);
    if (it_curr == by_year.end() || it_prev == by_year.end()) {
      throw DataError("no inefficiency record for firm " + firm.firm_id + " at years " +
                      std::to_string(prev.year) + "/" + std::to_string(curr.year));
    }
    const double h_curr = it_curr->second->h;
    const double h_prev = it_prev->second->h;
    const double dh_dt = (h_curr - h_prev) / gap;
    if (options.dte == DteFormula::Corrected) {
      // u_it = h_it u*, so -du/dt = -u* dh/dt with the firm-level draw
      // recovered as u_hat / h.
      const double u_star = it_curr->second->u_hat / h_curr;
      rec.delta_te = -u_star * dh_dt;
    } else {
      rec.delta_te = -it_curr->second->u_hat * dh_dt;
    }

    if (rec.rts == 0.0) {
      rec.valid = false;
      rec.scale_effect = std::numeric_limits<double>::quiet_NaN();
      rec.price_effect = std::numeric_limits<double>::quiet_NaN();
      rec.tfp_dot = std::numeric_limits<double>::quiet_NaN();
    } else {
      const Eigen::Vector3d normalized = rec.gamma / rec.rts;
      rec.scale_effect = (rec.rts - 1.0) * normalized.dot(rec.x_growth);
      rec.price_effect = (normalized - rec.shares).dot(rec.x_growth);
      rec.tfp_dot = rec.delta_t + rec.delta_te + rec.scale_effect + rec.price_effect;
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<TfpRecord> decompose_tfp(const PanelDataset& data, const ParameterVector& params,
                                     const std::vector<InefficiencyRecord>& inefficiency,
                                     const TfpOptions& options) {
  std::vector<TfpRecord> all;
  for (const auto& firm : data.firms) {
    if (firm.length() < 2) continue;
    auto records = decompose_tfp(firm, params, inefficiency, options);
    all.insert(all.end(), records.begin(), records.end());
  }
  return all;
}

std::vector<AggregateRow> aggregate(const std::vector<TfpRecord>& records,
                                    int boundary_year) {
  struct Sums {
    double tfp = 0, dt = 0, dte = 0, psi = 0, omega = 0, rts = 0;
    int n = 0;
    int skipped = 0;
    void add(const TfpRecord& rec) {
      if (!rec.valid) {
        ++skipped;
        return;
      }
      tfp += rec.tfp_dot;
      dt += rec.delta_t;
      dte += rec.delta_te;
      psi += rec.scale_effect;
      omega += rec.price_effect;
      rts += rec.rts;
      ++n;
    }
  };

  std::vector<std::string> groups;
  for (const auto& rec : records) {
    const std::string g = rec.category.empty() ? "(none)" : rec.category;
    if (std::find(groups.begin(), groups.end(), g) == groups.end()) groups.push_back(g);
  }
  std::sort(groups.begin(), groups.end());
  groups.push_back("All");

  std::vector<AggregateRow> rows;
  for (const auto& group : groups) {
    std::map<std::pair<int, int>, Sums> by_pair;
    Sums early, late;
    int min_from = std::numeric_limits<int>::max();
    int max_to = std::numeric_limits<int>::min();
    for (const auto& rec : records) {
      const std::string g = rec.category.empty() ? "(none)" : rec.category;
      if (group != "All" && g != group) continue;
      by_pair[{rec.year_from, rec.year_to}].add(rec);
      (rec.year_to <= boundary_year ? early : late).add(rec);
      min_from = std::min(min_from, rec.year_from);
      max_to = std::max(max_to, rec.year_to);
    }
    if (by_pair.empty()) continue;

    auto emit = [&](const std::string& label, const Sums& sums, bool period_mean) {
      if (sums.n == 0 && sums.skipped == 0) return;
      AggregateRow row;
      row.group = group;
      row.label = label;
      row.is_period_mean = period_mean;
      row.records = sums.n;
      row.skipped = sums.skipped;
      if (sums.n > 0) {
        row.tfp_dot = sums.tfp / sums.n;
        row.delta_t = sums.dt / sums.n;
        row.delta_te = sums.dte / sums.n;
        row.scale_effect = sums.psi / sums.n;
        row.price_effect = sums.omega / sums.n;
        row.rts = sums.rts / sums.n;
      }
      rows.push_back(std::move(row));
    };

    for (const auto& [years, sums] : by_pair) {
      emit(pair_label(years.first, years.second), sums, false);
    }
    emit("mean_" + pair_label(min_from, std::min(boundary_year, max_to)), early, true);
    emit("mean_" + pair_label(std::max(boundary_year, min_from), max_to), late, true);
  }
  return rows;
}

}  // namespace sfa
