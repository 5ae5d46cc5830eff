#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sfa/likelihood.hpp"
#include "sfa/panel.hpp"

namespace sfa {

/// Estimation failed outright (no start produced a finite optimum). Exit
/// code 3.
struct EstimationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EstimationConfig {
  int max_iterations = 500;
  double gradient_tolerance = 1e-6;   // on max |g_j|
  double parameter_tolerance = 1e-9;  // relative step size
  int multistart = 3;                 // perturbed delta / variance starts
  std::uint64_t seed = 12345;
  Frontier frontier = Frontier::Production;
};

struct FixedEffectRecord {
  std::string firm_id;
  double alpha_hat = 0.0;
};

struct EstimationResult {
  ParameterVector params;
  Eigen::VectorXd stderrs;  // same packing; empty when withheld
  bool stderr_valid = false;
  double loglik = 0.0;
  bool converged = false;
  int iterations = 0;
  double max_gradient = 0.0;
  bool information_positive_definite = false;
  double information_condition = 0.0;  // ratio of extreme eigenvalues of H
  int best_start = 0;
  std::vector<FixedEffectRecord> fixed_effects;  // filled by postestimation
};

/// Deterministic starting point: beta from pooled OLS of demeaned y on
/// demeaned X, delta = 0, ln sigma_v = ln(residual sd), ln sigma_u equal.
/// Throws EstimationError naming the offending columns if the pooled design
/// is rank deficient.
ParameterVector initial_values(const TransformedPanel& data);

/// BFGS with backtracking line search, run from `multistart` starting points
/// (the OLS start plus seeded perturbations of delta and the variance
/// parameters). Best finite optimum wins; ties within 1e-8 go to the
/// smaller gradient norm. converged = true iff max |g_j| met the tolerance.
EstimationResult maximize(const TransformedPanel& data, const EstimationConfig& config);

/// Delta-method standard errors at the packed scale: sqrt(diag(H^-1)) with H
/// the negative finite-difference Hessian of total_loglik. Returns an empty
/// vector (and clears *positive_definite) when H is not positive definite.
Eigen::VectorXd standard_errors(const TransformedPanel& data, const ParameterVector& params,
                                Frontier frontier, bool* positive_definite = nullptr,
                                double* condition = nullptr);

/// Negative finite-difference Hessian of total_loglik (the observed
/// information matrix estimate).
Eigen::MatrixXd observed_information(const TransformedPanel& data,
                                     const ParameterVector& params, Frontier frontier);

/// Standard error of exp(x) at x = estimate: exp(x) * se. Used to report
/// sigma_u, sigma_v from their log-scale estimates, and 1 - e^d effects.
double delta_method_exp(double estimate, double se);

}  // namespace sfa
