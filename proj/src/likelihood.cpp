#include "sfa/likelihood.hpp"

#include <cmath>

#include "sfa/normal.hpp"
#include "sfa/translog.hpp"

namespace sfa {

namespace {

constexpr double kLn2Pi = 1.8378770664093454836;
constexpr double kLnHalf = -0.69314718055994530942;

// exp overflows just above 709; anything this large is a broken trial point.
constexpr double kMaxScalingExponent = 700.0;

}  // namespace

ParameterVector::ParameterVector(Eigen::VectorXd packed, int n_det)
    : theta(std::move(packed)), n_determinants(n_det) {
  if (theta.size() != 16 + n_det) {
    throw ConfigError("parameter vector has length " + std::to_string(theta.size()) +
                      ", expected " + std::to_string(16 + n_det));
  }
}

ParameterVector ParameterVector::pack(const Eigen::VectorXd& beta,
                                      const Eigen::VectorXd& delta, double ln_sigma_u,
                                      double ln_sigma_v) {
  if (beta.size() != translog::kTermCount) {
    throw ConfigError("beta must have 14 entries");
  }
  Eigen::VectorXd theta(16 + delta.size());
  theta << beta, delta, ln_sigma_u, ln_sigma_v;
  return ParameterVector(std::move(theta), static_cast<int>(delta.size()));
}

double ParameterVector::sigma_u() const { return std::exp(ln_sigma_u()); }
double ParameterVector::sigma_v() const { return std::exp(ln_sigma_v()); }

std::string ParameterVector::entry_name(
    int j, const std::vector<std::string>& determinant_names) const {
  if (j < 14) return translog::kTermNames[j];
  if (j < 14 + n_determinants) {
    const int k = j - 14;
    if (k < static_cast<int>(determinant_names.size())) return "d_" + determinant_names[k];
    return "d_" + std::to_string(k);
  }
  return j == 14 + n_determinants ? "ln_s_u" : "ln_s_v";
}

Eigen::VectorXd scaling_values(const Eigen::VectorXd& delta, const Eigen::MatrixXd& z) {
  if (z.cols() != delta.size()) {
    throw ConfigError("determinant row width " + std::to_string(z.cols()) +
                      " does not match delta length " + std::to_string(delta.size()));
  }
  Eigen::VectorXd exponent = z * delta;
  for (Eigen::Index i = 0; i < exponent.size(); ++i) {
    if (!std::isfinite(exponent(i)) || exponent(i) > kMaxScalingExponent) {
      throw EvaluationError("scaling exponent z'delta = " + std::to_string(exponent(i)) +
                            " overflows exp()");
    }
  }
  return exponent.array().exp();
}

double quadratic_form(const Eigen::VectorXd& eps_demeaned, double sigma_v) {
  const double tol = 1e-10 * static_cast<double>(eps_demeaned.size()) *
                     std::max(1.0, eps_demeaned.cwiseAbs().maxCoeff());
  if (std::abs(eps_demeaned.sum()) > tol) {
    throw ConfigError("quadratic_form expects a demeaned vector (sum = " +
                      std::to_string(eps_demeaned.sum()) + ")");
  }
  return eps_demeaned.squaredNorm() / (sigma_v * sigma_v);
}

Posterior mu1_sigma1(const Eigen::VectorXd& eps_demeaned,
                     const Eigen::VectorXd& h_demeaned, double sigma_u, double sigma_v,
                     Frontier frontier) {
  const double inv_sv2 = 1.0 / (sigma_v * sigma_v);
  const double cross = eps_demeaned.dot(h_demeaned) * inv_sv2;  // e' Pi^- h
  const double precision = h_demeaned.squaredNorm() * inv_sv2 + 1.0 / (sigma_u * sigma_u);
  Posterior post;
  post.sigma1 = 1.0 / std::sqrt(precision);
  const double sign = frontier == Frontier::Production ? -1.0 : 1.0;
  post.mu1 = sign * cross / precision;
  return post;
}

double panel_loglik(const FirmBlock& firm, const ParameterVector& params,
                    Frontier frontier) {
  const int t_len = firm.length();
  if (t_len < 2) {
    throw ConfigError("panel_loglik requires T >= 2 (firm " + firm.firm_id + ")");
  }
  const double sigma_u = params.sigma_u();
  const double sigma_v = params.sigma_v();
  if (!(sigma_u > 0.0) || !(sigma_v > 0.0) || !std::isfinite(sigma_u) ||
      !std::isfinite(sigma_v)) {
    throw EvaluationError("non-finite variance parameters");
  }

  Eigen::VectorXd h = scaling_values(params.delta(), firm.z);
  Eigen::VectorXd h_demeaned = h;
  demean_in_place(h_demeaned);

  Eigen::VectorXd eps = firm.y_demeaned - firm.x_demeaned * params.beta();

  const double inv_sv2 = 1.0 / (sigma_v * sigma_v);
  const double quad = eps.squaredNorm() * inv_sv2;
  const Posterior post = mu1_sigma1(eps, h_demeaned, sigma_u, sigma_v, frontier);
  const double ratio = post.mu1 / post.sigma1;

  const double t1 = static_cast<double>(t_len - 1);
  const double value = -0.5 * t1 * kLn2Pi - t1 * std::log(sigma_v) - 0.5 * quad +
                       log_norm_cdf_plus_half_square(ratio) + std::log(post.sigma1) -
                       std::log(sigma_u) - kLnHalf;
  if (!std::isfinite(value)) {
    throw EvaluationError("non-finite log-likelihood for firm " + firm.firm_id);
  }
  return value;
}

double total_loglik(const TransformedPanel& data, const ParameterVector& params,
                    Frontier frontier) {
  // Kahan summation in fixed firm order: bit-stable regardless of how the
  // per-firm terms were produced.
  double sum = 0.0;
  double carry = 0.0;
  for (const auto& firm : data.firms) {
    const double term = panel_loglik(firm, params, frontier) - carry;
    const double next = sum + term;
    carry = (next - sum) - term;
    sum = next;
  }
  return sum;
}

Eigen::VectorXd loglik_gradient(const TransformedPanel& data, const ParameterVector& params,
                                Frontier frontier) {
  const int p = params.size();
  Eigen::VectorXd grad(p);
  ParameterVector probe = params;
  for (int j = 0; j < p; ++j) {
    const double step = std::max(1e-6, 1e-7 * std::abs(params.theta(j)));
    const double original = params.theta(j);
    probe.theta(j) = original + step;
    const double upper = total_loglik(data, probe, frontier);
    probe.theta(j) = original - step;
    const double lower = total_loglik(data, probe, frontier);
    probe.theta(j) = original;
    grad(j) = (upper - lower) / (2.0 * step);
  }
  return grad;
}

}  // namespace sfa
