#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sfa/panel.hpp"

namespace sfa {

/// Raised when a likelihood evaluation cannot produce a finite value
/// (e.g. the scaling function overflows). The optimizer treats it as a
/// rejected trial point and backtracks; it is never silently clamped.
struct EvaluationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Sign convention for the composed error. Production: y = a + xb + v - u
/// (inefficiency pulls output below the frontier). Cost flips the sign of u.
enum class Frontier { Production, Cost };

/// Full parameter set in its packed order:
///   [ beta (14) | delta (K) | ln sigma_u | ln sigma_v ]
/// Length 16 + K. Everything that crosses the optimizer boundary uses this
/// packing.
struct ParameterVector {
  Eigen::VectorXd theta;
  int n_determinants = 0;

  ParameterVector() = default;
  ParameterVector(Eigen::VectorXd packed, int n_det);

  static ParameterVector pack(const Eigen::VectorXd& beta, const Eigen::VectorXd& delta,
                              double ln_sigma_u, double ln_sigma_v);

  int size() const { return static_cast<int>(theta.size()); }
  Eigen::VectorXd beta() const { return theta.head(14); }
  Eigen::VectorXd delta() const { return theta.segment(14, n_determinants); }
  double ln_sigma_u() const { return theta(14 + n_determinants); }
  double ln_sigma_v() const { return theta(15 + n_determinants); }
  double sigma_u() const;
  double sigma_v() const;

  /// Human-readable name of packed entry j (b_K ... b_Ft, d_<name>, ln_s_u,
  /// ln_s_v). Determinant names come from the caller.
  std::string entry_name(int j, const std::vector<std::string>& determinant_names) const;
};

/// Posterior parameters of the firm-level inefficiency draw u* given the
/// demeaned residuals: u* | e ~ N(mu1, sigma1^2) truncated to [0, inf).
struct Posterior {
  double mu1 = 0.0;
  double sigma1 = 1.0;
};

/// h_it = exp(z_it' delta), per observation. Throws EvaluationError if the
/// exponent is large enough to overflow a double.
Eigen::VectorXd scaling_values(const Eigen::VectorXd& delta, const Eigen::MatrixXd& z);

/// e' Pi^- e for a demeaned vector e, where Pi = sigma_v^2 (I - J/T) and
/// Pi^- = sigma_v^{-2} (I - J/T). Because (I - J/T) fixes demeaned vectors,
/// the value is just sigma_v^{-2} * sum e_t^2; the dense pseudo-inverse
/// exists only in the test oracle. Throws if e is not demeaned.
double quadratic_form(const Eigen::VectorXd& eps_demeaned, double sigma_v);

/// mu1 and sigma1 from demeaned residual and scaling vectors. The production
/// convention gives mu1 = -e'Pi^-h / (h'Pi^-h + 1/sigma_u^2); Cost flips the
/// sign of the cross term.
Posterior mu1_sigma1(const Eigen::VectorXd& eps_demeaned,
                     const Eigen::VectorXd& h_demeaned, double sigma_u, double sigma_v,
                     Frontier frontier = Frontier::Production);

/// Marginal log-likelihood of one firm's within-transformed panel:
///   -T1/2 ln(2 pi) - T1/2 ln(sigma_v^2) - e'Pi^-e / 2
///   + mu1^2 / (2 sigma1^2) + ln(sigma1 Phi(mu1/sigma1)) - ln(sigma_u / 2)
/// with T1 = T_i - 1 (the firm's own panel length everywhere).
double panel_loglik(const FirmBlock& firm, const ParameterVector& params,
                    Frontier frontier = Frontier::Production);

/// Sum of panel_loglik over firms, accumulated in fixed firm order with
/// compensated summation so the result is independent of evaluation order.
double total_loglik(const TransformedPanel& data, const ParameterVector& params,
                    Frontier frontier = Frontier::Production);

/// Central finite-difference gradient of total_loglik, step
/// h_j = max(1e-6, 1e-7 |theta_j|). Propagates EvaluationError from any
/// stencil point.
Eigen::VectorXd loglik_gradient(const TransformedPanel& data, const ParameterVector& params,
                                Frontier frontier = Frontier::Production);

}  // namespace sfa
