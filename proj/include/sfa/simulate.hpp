#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sfa/estimator.hpp"
#include "sfa/likelihood.hpp"
#include "sfa/panel.hpp"

namespace sfa {

/// Deterministic RNG wrapper. Normals come from Box-Muller on explicit
/// uniform pairs, so a given seed reproduces the same stream bit for bit
/// with no hidden distribution state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

  double uniform();                  // [0, 1)
  double normal();                   // standard normal
  double normal(double sd) { return sd * normal(); }
  double half_normal(double sigma);  // |N(0, sigma^2)|
  bool bernoulli(double p) { return uniform() < p; }

  /// Stream for replication r, decorrelated from the master seed.
  static std::uint64_t substream(std::uint64_t seed, std::uint64_t index);

 private:
  std::uint64_t next_raw();
  std::uint64_t state_;
};

/// Data-generating process for the within-transformed frontier model:
///   ln y_it = alpha_i + x_it' beta + v_it - h_it u*_i        (production)
/// with h_it = exp(z_it' delta), u*_i half-normal, log inputs jointly
/// Gaussian with unit variances, and determinants (t/T trend, Bernoulli
/// dummy, ...) matching the empirical regressor mix.
struct DgpSpec {
  int n_firms = 100;
  int t_min = 10;
  int t_max = 10;  // t_max > t_min draws panel lengths uniformly (unbalanced)
  int base_year = 2000;
  Eigen::VectorXd beta;        // 14
  Eigen::VectorXd delta;       // one per determinant
  double sigma_u = 0.4;
  double sigma_v = 0.10;
  double alpha_scale = 1.0;    // alpha_i ~ alpha_scale * N(0,1)
  double input_correlation = 0.5;
  double dummy_probability = 0.5;  // Bernoulli determinants beyond the trend
  Frontier frontier = Frontier::Production;
  std::uint64_t seed = 1;

  /// A coal-plant-flavoured default: near-constant-returns translog with
  /// mild curvature, trend + dummy determinants.
  static DgpSpec defaults();
};

/// Generated dataset plus the hidden truth the oracles compare against.
struct SimulatedPanel {
  PanelDataset data;
  std::vector<double> alpha;                // per firm
  std::vector<double> u_star;               // per firm
  std::vector<std::vector<double>> u;       // per firm-year: h_it * u*_i
  ParameterVector true_params;
};

SimulatedPanel generate_panel(const DgpSpec& spec);

/// Per-parameter Monte Carlo summary.
struct McParameterStats {
  std::string name;
  double truth = 0.0;
  double mean_bias = 0.0;
  double rmse = 0.0;
  double coverage = 0.0;  // share of replications whose 95% CI covers truth
};

struct McReport {
  int replications = 0;
  int failures = 0;  // non-convergence or evaluation failure
  std::vector<McParameterStats> parameters;
};

/// generate -> estimate -> record, `replications` times. Replications run on
/// `threads` workers (<= 0 picks hardware concurrency); each has its own RNG
/// substream and results merge in replication order, so the report does not
/// depend on the thread count. Throws EstimationError above 10% failures.
McReport run_monte_carlo(const DgpSpec& spec, int replications,
                         const EstimationConfig& config, int threads = 0);

/// Log-marginal likelihood of one firm by adaptive quadrature of the joint
/// density over u* in [0, inf), with the covariance handled through a dense
/// Moore-Penrose pseudo-inverse. Independent of panel_loglik's closed form;
/// meant for T_i <= 6.
double oracle_loglik(const FirmBlock& firm, const ParameterVector& params,
                     Frontier frontier = Frontier::Production);

/// E(u_it | demeaned residuals) per year, by the same quadrature:
/// h_it * E(u* | e) with E(u* | e) = (int u p(e|u) p(u) du) / (int p(e|u) p(u) du).
std::vector<double> oracle_conditional_mean(const FirmBlock& firm,
                                            const ParameterVector& params,
                                            Frontier frontier = Frontier::Production);

/// Dense Pi = sigma_v^2 (I - J/T) and its Moore-Penrose pseudo-inverse via
/// SVD; the oracle-side counterpart of the closed-form quadratic forms.
Eigen::MatrixXd dense_pi(int t_len, double sigma_v);
Eigen::MatrixXd dense_pseudo_inverse(const Eigen::MatrixXd& m);

}  // namespace sfa
