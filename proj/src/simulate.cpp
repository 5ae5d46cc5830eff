#include "sfa/simulate.hpp"

#include <atomic>
#include <cmath>
#include <optional>
#include <thread>

#include <Eigen/SVD>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "sfa/translog.hpp"

namespace sfa {

namespace {

constexpr double kLn2Pi = 1.8378770664093454836;
constexpr double kTwoPi = 6.2831853071795864769;

const char* kCategories[] = {"Coal", "Gas", "Mixed", "TnD", "Integrated"};

// splitmix64: compact, seedable, and trivially split into substreams.
std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t Rng::next_raw() { return splitmix64(state_); }

double Rng::uniform() {
  return static_cast<double>(next_raw() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(kTwoPi * u2);
}

double Rng::half_normal(double sigma) { return std::abs(sigma * normal()); }

std::uint64_t Rng::substream(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t state = seed ^ (0xd1342543de82ef95ULL * (index + 1));
  return splitmix64(state);
}

DgpSpec DgpSpec::defaults() {
  DgpSpec spec;
  spec.beta.resize(translog::kTermCount);
  // Near-constant-returns frontier with mild curvature and slow technical
  // change, roughly the shape of the fitted generator models.
  spec.beta << 0.35, 0.25, 0.30, 0.03,
      0.05, 0.04, 0.05, -0.02, -0.01, -0.02,
      -0.004, 0.004, -0.003, 0.002;
  spec.delta.resize(2);
  spec.delta << 0.8, -0.4;  // trend, dummy
  return spec;
}

SimulatedPanel generate_panel(const DgpSpec& spec) {
  if (!(spec.sigma_u > 0.0) || !(spec.sigma_v > 0.0)) {
    throw ConfigError("DGP sigmas must be positive");
  }
  if (spec.beta.size() != translog::kTermCount) {
    throw ConfigError("DGP beta must have 14 entries");
  }
  const int n_det = static_cast<int>(spec.delta.size());
  if (n_det < 1) {
    throw ConfigError("DGP needs at least one inefficiency determinant");
  }

  VariableSchema schema;
  schema.firm_id = "firm";
  schema.year = "year";
  schema.output = "output";
  schema.inputs = {"capital", "labor", "fuel"};
  schema.prices = {"p_capital", "p_labor", "p_fuel"};
  schema.determinants.push_back("trend");
  for (int k = 1; k < n_det; ++k) {
    schema.determinants.push_back("dummy" + std::to_string(k));
  }
  schema.category = "category";

  Rng rng(spec.seed);
  SimulatedPanel sim;
  sim.data.schema = schema;
  sim.true_params = ParameterVector::pack(spec.beta, spec.delta,
                                          std::log(spec.sigma_u), std::log(spec.sigma_v));

  const double rho = spec.input_correlation;
  const double common_load = std::sqrt(std::max(0.0, rho));
  const double own_load = std::sqrt(std::max(0.0, 1.0 - rho));
  const double input_means[3] = {3.0, 2.0, 3.5};
  const double sign = spec.frontier == Frontier::Production ? -1.0 : 1.0;

  for (int i = 0; i < spec.n_firms; ++i) {
    FirmPanel firm;
    firm.firm_id = "F" + std::to_string(i + 1);
    firm.category = kCategories[i % 5];

    const int t_len = spec.t_min +
                      (spec.t_max > spec.t_min
                           ? static_cast<int>(rng.uniform() * (spec.t_max - spec.t_min + 1))
                           : 0);
    const double alpha = spec.alpha_scale * rng.normal();
    const double u_star = rng.half_normal(spec.sigma_u);
    sim.alpha.push_back(alpha);
    sim.u_star.push_back(u_star);
    sim.u.emplace_back();

    for (int t = 0; t < t_len; ++t) {
      Observation obs;
      obs.firm_id = firm.firm_id;
      obs.category = firm.category;
      obs.year = spec.base_year + t;

      const double common = rng.normal();
      double ln_x[3];
      for (int n = 0; n < 3; ++n) {
        ln_x[n] = input_means[n] + common_load * common + own_load * rng.normal();
        obs.inputs.push_back(std::exp(ln_x[n]));
      }
      for (int n = 0; n < 3; ++n) {
        obs.prices.push_back(std::exp(0.2 * rng.normal()));
      }
      obs.determinants.push_back(static_cast<double>(t) / 10.0);
      for (int k = 1; k < n_det; ++k) {
        obs.determinants.push_back(rng.bernoulli(spec.dummy_probability) ? 1.0 : 0.0);
      }

      double zd = 0.0;
      for (int k = 0; k < n_det; ++k) zd += obs.determinants[k] * spec.delta(k);
      const double h = std::exp(zd);
      const double u = h * u_star;
      sim.u.back().push_back(u);

      const double ln_y = alpha +
                          translog::log_kernel(spec.beta, ln_x[0], ln_x[1], ln_x[2],
                                               static_cast<double>(t)) +
                          rng.normal(spec.sigma_v) + sign * u;
      obs.output = std::exp(ln_y);
      firm.observations.push_back(std::move(obs));
    }
    sim.data.firms.push_back(std::move(firm));
  }
  return sim;
}

Eigen::MatrixXd dense_pi(int t_len, double sigma_v) {
  const double n = static_cast<double>(t_len);
  return sigma_v * sigma_v *
         (Eigen::MatrixXd::Identity(t_len, t_len) -
          Eigen::MatrixXd::Constant(t_len, t_len, 1.0 / n));
}

Eigen::MatrixXd dense_pseudo_inverse(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double tol = 1e-12 * std::max(m.rows(), m.cols()) * sv(0);
  Eigen::VectorXd inv = sv;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    inv(i) = sv(i) > tol ? 1.0 / sv(i) : 0.0;
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

namespace {

// Shared quadrature core: log of int_0^inf u^power * p(e | u) p(u) du over the
// half-normal u* prior, with the demeaned-normal density taken on its
// (T-1)-dimensional support via the dense pseudo-inverse and pseudo-
// determinant.
double log_half_line_integral(const FirmBlock& firm, const ParameterVector& params,
                              Frontier frontier, int power) {
  const int t_len = firm.length();
  const double sigma_u = params.sigma_u();
  const double sigma_v = params.sigma_v();

  Eigen::VectorXd h = (firm.z * params.delta()).array().exp();
  Eigen::VectorXd h_demeaned = h;
  demean_in_place(h_demeaned);
  Eigen::VectorXd eps = firm.y_demeaned - firm.x_demeaned * params.beta();

  const Eigen::MatrixXd pi = dense_pi(t_len, sigma_v);
  const Eigen::MatrixXd pinv = dense_pseudo_inverse(pi);

  // Pseudo-determinant from the singular values of Pi.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(pi);
  const auto& sv = svd.singularValues();
  const double sv_tol = 1e-12 * t_len * sv(0);
  double log_pdet = 0.0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > sv_tol) {
      log_pdet += std::log(sv(i));
      ++rank;
    }
  }

  // Residual mean given u* is -h u* for the production frontier, +h u* for
  // cost: the exponent is -(e - sign*h*u)' Pi^+ (e - sign*h*u) / 2 with
  // sign = -1 (production) or +1 (cost).
  const double sign = frontier == Frontier::Production ? -1.0 : 1.0;
  const double log_norm_const =
      -0.5 * rank * kLn2Pi - 0.5 * log_pdet  // demeaned normal
      - std::log(sigma_u) - 0.5 * kLn2Pi + std::log(2.0);  // half-normal prior

  auto log_integrand = [&](double u) {
    const Eigen::VectorXd centered = eps - sign * u * h_demeaned;
    const double quad = centered.dot(pinv * centered);
    double value = log_norm_const - 0.5 * quad - 0.5 * u * u / (sigma_u * sigma_u);
    if (power > 0) value += power * std::log(u);
    return value;
  };

  // The exponent is quadratic in u; peak location and width are used only to
  // scale the integrand into a safe numeric range.
  const double curvature =
      h_demeaned.dot(pinv * h_demeaned) + 1.0 / (sigma_u * sigma_u);
  const double slope = sign * eps.dot(pinv * h_demeaned);
  const double peak_width = 1.0 / std::sqrt(curvature);
  const double peak = std::max(slope / curvature, power > 0 ? peak_width : 0.0);
  const double log_scale = log_integrand(std::max(peak, 1e-12));

  auto scaled = [&](double u) {
    if (u <= 0.0) return 0.0;
    return std::exp(log_integrand(u) - log_scale);
  };

  const double upper = peak + 60.0 * peak_width;
  double error = 0.0;
  const double integral = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      scaled, 0.0, upper, 15, 1e-12, &error);
  return log_scale + std::log(integral);
}

}  // namespace

double oracle_loglik(const FirmBlock& firm, const ParameterVector& params,
                     Frontier frontier) {
  return log_half_line_integral(firm, params, frontier, 0);
}

std::vector<double> oracle_conditional_mean(const FirmBlock& firm,
                                            const ParameterVector& params,
                                            Frontier frontier) {
  const double log_num = log_half_line_integral(firm, params, frontier, 1);
  const double log_den = log_half_line_integral(firm, params, frontier, 0);
  const double u_star_mean = std::exp(log_num - log_den);

  const Eigen::VectorXd h = (firm.z * params.delta()).array().exp();
  std::vector<double> result(firm.length());
  for (int t = 0; t < firm.length(); ++t) {
    result[t] = h(t) * u_star_mean;
  }
  return result;
}

McReport run_monte_carlo(const DgpSpec& spec, int replications,
                         const EstimationConfig& config, int threads) {
  if (replications < 2) {
    throw ConfigError("replications must be >= 2");
  }
  const int p = 16 + static_cast<int>(spec.delta.size());

  struct RepOutcome {
    bool ok = false;
    Eigen::VectorXd estimate;
    Eigen::VectorXd stderrs;  // empty when withheld
  };
  std::vector<RepOutcome> outcomes(replications);

  auto run_one = [&](int r) {
    DgpSpec rep_spec = spec;
    rep_spec.seed = Rng::substream(spec.seed, static_cast<std::uint64_t>(r));
    EstimationConfig rep_config = config;
    rep_config.frontier = spec.frontier;
    rep_config.seed = Rng::substream(spec.seed, static_cast<std::uint64_t>(r) + 0x10000);
    try {
      const SimulatedPanel sim = generate_panel(rep_spec);
      const TransformedPanel transformed = transform_panel(sim.data, spec.base_year);
      const EstimationResult fit = maximize(transformed, rep_config);
      if (!fit.converged) return;
      outcomes[r].ok = true;
      outcomes[r].estimate = fit.params.theta;
      if (fit.stderr_valid) outcomes[r].stderrs = fit.stderrs;
    } catch (const EstimationError&) {
    } catch (const EvaluationError&) {
    }
  };

  int n_workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  n_workers = std::max(1, std::min(n_workers, replications));
  if (n_workers == 1) {
    for (int r = 0; r < replications; ++r) run_one(r);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> workers;
    workers.reserve(n_workers);
    for (int w = 0; w < n_workers; ++w) {
      workers.emplace_back([&]() {
        for (int r = next.fetch_add(1); r < replications; r = next.fetch_add(1)) {
          run_one(r);
        }
      });
    }
    for (auto& t : workers) t.join();
  }

  const SimulatedPanel probe = generate_panel(spec);
  const Eigen::VectorXd truth = probe.true_params.theta;
  std::vector<std::string> det_names = probe.data.schema.determinants;

  McReport report;
  report.replications = replications;
  Eigen::VectorXd bias_sum = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd sq_sum = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd cover_sum = Eigen::VectorXd::Zero(p);
  int successes = 0;
  int with_stderr = 0;
  for (const auto& outcome : outcomes) {
    if (!outcome.ok) {
      ++report.failures;
      continue;
    }
    ++successes;
    const Eigen::VectorXd err = outcome.estimate - truth;
    bias_sum += err;
    sq_sum += err.cwiseProduct(err);
    if (outcome.stderrs.size() == p) {
      ++with_stderr;
      for (int j = 0; j < p; ++j) {
        if (std::abs(err(j)) <= 1.96 * outcome.stderrs(j)) cover_sum(j) += 1.0;
      }
    }
  }
  if (successes == 0 || report.failures > replications / 10) {
    throw EstimationError("Monte Carlo failure rate too high: " +
                          std::to_string(report.failures) + "/" +
                          std::to_string(replications));
  }

  for (int j = 0; j < p; ++j) {
    McParameterStats stats;
    stats.name = probe.true_params.entry_name(j, det_names);
    stats.truth = truth(j);
    stats.mean_bias = bias_sum(j) / successes;
    stats.rmse = std::sqrt(sq_sum(j) / successes);
    stats.coverage = with_stderr > 0 ? cover_sum(j) / with_stderr : 0.0;
    report.parameters.push_back(std::move(stats));
  }
  return report;
}

}  // namespace sfa
