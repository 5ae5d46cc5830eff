#pragma once

#include <array>

#include <Eigen/Core>

namespace sfa {

struct Observation;

namespace translog {

/// Number of regressor columns. No intercept: the firm fixed effect absorbs
/// it and demeaning removes it anyway.
inline constexpr int kTermCount = 14;

/// Column order of the design row and of every coefficient vector, report
/// and coefficient file in this project (see NOTATION.md):
///   ln K, ln L, ln F, t,
///   (1/2)(ln K)^2, (1/2)(ln L)^2, (1/2)(ln F)^2,
///   ln K ln L, ln K ln F, ln L ln F,
///   (1/2)t^2, t ln K, t ln L, t ln F
/// Squared and t^2 columns carry the 1/2; the cross terms do not.
inline constexpr std::array<const char*, kTermCount> kTermNames = {
    "b_K",  "b_L",  "b_F",  "b_t",  "b_KK", "b_LL", "b_FF",
    "b_KL", "b_KF", "b_LF", "b_tt", "b_Kt", "b_Lt", "b_Ft"};

/// Builds one design row from log inputs and the time index.
Eigen::RowVectorXd design_row(double ln_k, double ln_l, double ln_f, double t);

/// Builds one design row from an observation; throws DataError on a
/// non-positive input.
Eigen::RowVectorXd design_row(const Observation& obs, double t);

/// ln f(x, t; beta): the deterministic translog kernel. The finite-difference
/// oracles in the tests differentiate this directly.
double log_kernel(const Eigen::VectorXd& beta, double ln_k, double ln_l, double ln_f,
                  double t);

/// Output elasticities gamma_n = b_n + b_nn ln x_n + sum_{k!=n} b_nk ln x_k
/// + b_nt t, for n in {K, L, F}.
Eigen::Vector3d elasticities(const Eigen::VectorXd& beta, double ln_k, double ln_l,
                             double ln_f, double t);

/// Returns to scale: the sum of the three output elasticities.
double returns_to_scale(const Eigen::Vector3d& gamma);

/// Technical change as the time polynomial b_t + b_tt * t (the reporting
/// form; see technical_change_full for the complete time derivative).
double technical_change(const Eigen::VectorXd& beta, double t);

/// Full d ln f / d t = b_t + b_tt t + b_Kt ln K + b_Lt ln L + b_Ft ln F.
double technical_change_full(const Eigen::VectorXd& beta, double ln_k, double ln_l,
                             double ln_f, double t);

}  // namespace translog
}  // namespace sfa
