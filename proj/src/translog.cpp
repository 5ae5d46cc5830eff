#include "sfa/translog.hpp"

#include <cmath>

#include "sfa/panel.hpp"

namespace sfa::translog {

Eigen::RowVectorXd design_row(double ln_k, double ln_l, double ln_f, double t) {
  Eigen::RowVectorXd row(kTermCount);
  row << ln_k, ln_l, ln_f, t,
      0.5 * ln_k * ln_k, 0.5 * ln_l * ln_l, 0.5 * ln_f * ln_f,
      ln_k * ln_l, ln_k * ln_f, ln_l * ln_f,
      0.5 * t * t, t * ln_k, t * ln_l, t * ln_f;
  return row;
}

Eigen::RowVectorXd design_row(const Observation& obs, double t) {
  for (std::size_t n = 0; n < obs.inputs.size(); ++n) {
    if (!(obs.inputs[n] > 0.0)) {
      throw DataError("firm " + obs.firm_id + ", year " + std::to_string(obs.year) +
                      ": log of non-positive input");
    }
  }
  return design_row(std::log(obs.inputs[0]), std::log(obs.inputs[1]),
                    std::log(obs.inputs[2]), t);
}

double log_kernel(const Eigen::VectorXd& beta, double ln_k, double ln_l, double ln_f,
                  double t) {
  return design_row(ln_k, ln_l, ln_f, t).dot(beta);
}

Eigen::Vector3d elasticities(const Eigen::VectorXd& beta, double ln_k, double ln_l,
                             double ln_f, double t) {
  Eigen::Vector3d gamma;
  gamma(0) = beta(0) + beta(4) * ln_k + beta(7) * ln_l + beta(8) * ln_f + beta(11) * t;
  gamma(1) = beta(1) + beta(5) * ln_l + beta(7) * ln_k + beta(9) * ln_f + beta(12) * t;
  gamma(2) = beta(2) + beta(6) * ln_f + beta(8) * ln_k + beta(9) * ln_l + beta(13) * t;
  return gamma;
}

double returns_to_scale(const Eigen::Vector3d& gamma) { return gamma.sum(); }

double technical_change(const Eigen::VectorXd& beta, double t) {
  return beta(3) + beta(10) * t;
}

double technical_change_full(const Eigen::VectorXd& beta, double ln_k, double ln_l,
                             double ln_f, double t) {
  return beta(3) + beta(10) * t + beta(11) * ln_k + beta(12) * ln_l + beta(13) * ln_f;
}

}  // namespace sfa::translog
