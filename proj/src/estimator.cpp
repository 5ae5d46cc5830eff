#include "sfa/estimator.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "sfa/simulate.hpp"
#include "sfa/translog.hpp"

namespace sfa {

namespace {

// -ln L wrapped so evaluation failures become +inf for the line search.
double negative_loglik(const TransformedPanel& data, const ParameterVector& params,
                       Frontier frontier) {
  try {
    return -total_loglik(data, params, frontier);
  } catch (const EvaluationError&) {
    return std::numeric_limits<double>::infinity();
  }
}

struct BfgsOutcome {
  ParameterVector params;
  double loglik = -std::numeric_limits<double>::infinity();
  bool converged = false;
  int iterations = 0;
  double max_gradient = std::numeric_limits<double>::infinity();
  bool finite = false;
};

BfgsOutcome bfgs_maximize(const TransformedPanel& data, ParameterVector start,
                          const EstimationConfig& config) {
  const int p = start.size();
  BfgsOutcome out;
  out.params = start;

  double f = negative_loglik(data, start, config.frontier);
  if (!std::isfinite(f)) return out;

  Eigen::VectorXd x = start.theta;
  Eigen::VectorXd grad;
  try {
    grad = -loglik_gradient(data, start, config.frontier);
  } catch (const EvaluationError&) {
    return out;
  }

  Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(p, p);
  bool scaled_once = false;
  int stalled = 0;
  int resets = 0;
  double stall_best_gradient = std::numeric_limits<double>::infinity();
  ParameterVector trial = start;

  for (int iter = 1; iter <= config.max_iterations; ++iter) {
    out.iterations = iter;
    out.max_gradient = grad.cwiseAbs().maxCoeff();
    if (out.max_gradient <= config.gradient_tolerance) {
      out.converged = true;
      break;
    }

    Eigen::VectorXd direction = -(h_inv * grad);
    if (direction.dot(grad) >= 0.0) {
      // Curvature information went bad; restart from steepest descent.
      h_inv.setIdentity();
      scaled_once = false;
      direction = -grad;
    }

    // Backtracking line search with the Armijo sufficient-decrease test.
    const double directional = grad.dot(direction);
    double alpha = 1.0;
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving) {
      trial.theta = x + alpha * direction;
      f_new = negative_loglik(data, trial, config.frontier);
      if (std::isfinite(f_new) && f_new <= f + 1e-4 * alpha * directional) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      if (!h_inv.isIdentity(1e-14)) {
        h_inv.setIdentity();
        scaled_once = false;
        continue;  // retry along steepest descent
      }
      break;  // stalled
    }

    Eigen::VectorXd grad_new;
    try {
      grad_new = -loglik_gradient(data, trial, config.frontier);
    } catch (const EvaluationError&) {
      break;
    }

    const Eigen::VectorXd step = alpha * direction;
    const Eigen::VectorXd grad_diff = grad_new - grad;
    const double sy = step.dot(grad_diff);
    if (sy > 1e-12 * step.norm() * grad_diff.norm()) {
      if (!scaled_once) {
        h_inv *= sy / grad_diff.squaredNorm();
        scaled_once = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd outer =
          Eigen::MatrixXd::Identity(p, p) - rho * step * grad_diff.transpose();
      h_inv = outer * h_inv * outer.transpose() + rho * step * step.transpose();
    }

    const double rel_step =
        step.cwiseAbs().maxCoeff() / std::max(1.0, x.cwiseAbs().maxCoeff());
    x = trial.theta;
    f = f_new;
    grad = grad_new;
    out.max_gradient = grad.cwiseAbs().maxCoeff();
    if (out.max_gradient <= config.gradient_tolerance) {
      out.converged = true;
      break;
    }
    // Steps below the parameter tolerance are still worth taking while they
    // keep cutting the gradient (the endgame on an ill-conditioned Hessian
    // moves slowly in parameter space but fast in gradient norm). A stall
    // means tiny steps with no gradient progress either.
    if (rel_step >= config.parameter_tolerance) {
      stalled = 0;
      stall_best_gradient = std::numeric_limits<double>::infinity();
    } else if (out.max_gradient < 0.9 * stall_best_gradient) {
      stalled = 0;
      stall_best_gradient = out.max_gradient;
    } else {
      ++stalled;
    }
    if (stalled >= 3) {
      if (resets == 0) {
        h_inv.setIdentity();
        scaled_once = false;
        stalled = 0;
        stall_best_gradient = std::numeric_limits<double>::infinity();
        ++resets;
        continue;
      }
      break;
    }
  }

  // Newton polish: quasi-Newton alone can plateau within an order of
  // magnitude of the tolerance on the translog's ill-conditioned Hessian.
  // Near the optimum the observed information gives quadratically
  // convergent steps and closes the gap in one or two iterations.
  if (!out.converged && std::isfinite(f) && out.max_gradient < 1.0) {
    ParameterVector current = start;
    current.theta = x;
    for (int polish = 0; polish < 5 && out.iterations < config.max_iterations; ++polish) {
      Eigen::MatrixXd info;
      try {
        info = observed_information(data, current, config.frontier);
      } catch (const EvaluationError&) {
        break;
      }
      const Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
      if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) break;
      // Minimizing f = -ll: step = -(∇²f)^{-1} ∇f = info^{-1} · (-grad).
      const Eigen::VectorXd newton = ldlt.solve(-grad);
      trial.theta = x + newton;
      const double f_new = negative_loglik(data, trial, config.frontier);
      if (!std::isfinite(f_new) || f_new > f + 1e-9 * std::max(1.0, std::abs(f))) break;
      Eigen::VectorXd grad_new;
      try {
        grad_new = -loglik_gradient(data, trial, config.frontier);
      } catch (const EvaluationError&) {
        break;
      }
      if (grad_new.cwiseAbs().maxCoeff() >= out.max_gradient) break;
      x = trial.theta;
      current.theta = x;
      f = f_new;
      grad = grad_new;
      ++out.iterations;
      out.max_gradient = grad.cwiseAbs().maxCoeff();
      if (out.max_gradient <= config.gradient_tolerance) {
        out.converged = true;
        break;
      }
    }
  }

  out.params.theta = x;
  out.loglik = -f;
  out.finite = std::isfinite(f);
  return out;
}

}  // namespace

ParameterVector initial_values(const TransformedPanel& data) {
  const int n = data.total_observations();
  const int p = translog::kTermCount;
  Eigen::MatrixXd x(n, p);
  Eigen::VectorXd y(n);
  int row = 0;
  for (const auto& firm : data.firms) {
    x.middleRows(row, firm.length()) = firm.x_demeaned;
    y.segment(row, firm.length()) = firm.y_demeaned;
    row += firm.length();
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-8);
  if (qr.rank() < p) {
    // The trailing columns of the pivot order are the dependent ones.
    const auto& perm = qr.colsPermutation().indices();
    std::ostringstream msg;
    msg << "pooled design is rank deficient (rank " << qr.rank() << " of " << p
        << "); dependent columns:";
    for (int j = qr.rank(); j < p; ++j) {
      msg << ' ' << translog::kTermNames[perm(j)];
    }
    throw EstimationError(msg.str());
  }

  const Eigen::VectorXd beta = qr.solve(y);
  const Eigen::VectorXd residuals = y - x * beta;
  const int df = std::max(1, n - static_cast<int>(data.firms.size()) - p);
  const double sd = std::sqrt(residuals.squaredNorm() / df);
  const double ln_sigma = std::log(std::max(sd, 1e-8));
  return ParameterVector::pack(beta, Eigen::VectorXd::Zero(data.n_determinants),
                               ln_sigma, ln_sigma);
}

EstimationResult maximize(const TransformedPanel& data, const EstimationConfig& config) {
  const ParameterVector base_start = initial_values(data);
  const int n_starts = std::max(1, config.multistart);

  std::vector<BfgsOutcome> outcomes;
  outcomes.reserve(n_starts);
  for (int s = 0; s < n_starts; ++s) {
    ParameterVector start = base_start;
    if (s > 0) {
      Rng rng(Rng::substream(config.seed, static_cast<std::uint64_t>(s)));
      for (int k = 0; k < start.n_determinants; ++k) {
        start.theta(14 + k) += rng.normal(0.25);
      }
      start.theta(14 + start.n_determinants) += rng.normal(0.5);   // ln sigma_u
      start.theta(15 + start.n_determinants) += rng.normal(0.25);  // ln sigma_v
    }
    outcomes.push_back(bfgs_maximize(data, std::move(start), config));
  }

  int best = -1;
  for (int s = 0; s < n_starts; ++s) {
    if (!outcomes[s].finite) continue;
    if (best < 0) {
      best = s;
      continue;
    }
    const double diff = outcomes[s].loglik - outcomes[best].loglik;
    if (diff > 1e-8 ||
        (std::abs(diff) <= 1e-8 && outcomes[s].max_gradient < outcomes[best].max_gradient)) {
      best = s;
    }
  }
  if (best < 0) {
    std::ostringstream msg;
    msg << "all " << n_starts << " starts failed to produce a finite likelihood";
    throw EstimationError(msg.str());
  }

  const BfgsOutcome& winner = outcomes[best];
  EstimationResult result;
  result.params = winner.params;
  result.loglik = winner.loglik;
  result.converged = winner.converged;
  result.iterations = winner.iterations;
  result.max_gradient = winner.max_gradient;
  result.best_start = best;

  result.stderrs = standard_errors(data, result.params, config.frontier,
                                   &result.information_positive_definite,
                                   &result.information_condition);
  result.stderr_valid = result.information_positive_definite;
  return result;
}

Eigen::MatrixXd observed_information(const TransformedPanel& data,
                                     const ParameterVector& params, Frontier frontier) {
  const int p = params.size();
  Eigen::MatrixXd hessian(p, p);
  ParameterVector probe = params;
  auto f = [&](void) { return total_loglik(data, probe, frontier); };

  Eigen::VectorXd steps(p);
  for (int j = 0; j < p; ++j) {
    steps(j) = 3e-4 * std::max(1.0, std::abs(params.theta(j)));
  }
  const double f0 = total_loglik(data, params, frontier);

  for (int j = 0; j < p; ++j) {
    const double tj = params.theta(j);
    probe.theta(j) = tj + steps(j);
    const double up = f();
    probe.theta(j) = tj - steps(j);
    const double down = f();
    probe.theta(j) = tj;
    hessian(j, j) = (up - 2.0 * f0 + down) / (steps(j) * steps(j));
  }
  for (int j = 0; j < p; ++j) {
    for (int k = j + 1; k < p; ++k) {
      const double tj = params.theta(j);
      const double tk = params.theta(k);
      probe.theta(j) = tj + steps(j);
      probe.theta(k) = tk + steps(k);
      const double pp = f();
      probe.theta(k) = tk - steps(k);
      const double pm = f();
      probe.theta(j) = tj - steps(j);
      const double mm = f();
      probe.theta(k) = tk + steps(k);
      const double mp = f();
      probe.theta(j) = tj;
      probe.theta(k) = tk;
      const double value = (pp - pm - mp + mm) / (4.0 * steps(j) * steps(k));
      hessian(j, k) = value;
      hessian(k, j) = value;
    }
  }
  return -hessian;
}

Eigen::VectorXd standard_errors(const TransformedPanel& data, const ParameterVector& params,
                                Frontier frontier, bool* positive_definite,
                                double* condition) {
  const Eigen::MatrixXd info = observed_information(data, params, frontier);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigen(info);
  const auto& values = eigen.eigenvalues();
  const bool pd = values.minCoeff() > 0.0;
  if (positive_definite) *positive_definite = pd;
  if (condition) {
    *condition = pd ? values.maxCoeff() / values.minCoeff()
                    : std::numeric_limits<double>::infinity();
  }
  if (!pd) return Eigen::VectorXd();

  const Eigen::MatrixXd inverse = eigen.eigenvectors() *
                                  values.cwiseInverse().asDiagonal() *
                                  eigen.eigenvectors().transpose();
  return inverse.diagonal().cwiseSqrt();
}

double delta_method_exp(double estimate, double se) {
  return std::exp(estimate) * se;
}

}  // namespace sfa
