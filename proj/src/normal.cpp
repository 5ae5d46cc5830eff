#include "sfa/normal.hpp"

#include <cmath>

namespace sfa {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // ln sqrt(2*pi)
constexpr double kInvSqrtPi = 0.56418958354775628695;

// Scaled complementary error function erfcx(z) = exp(z^2) erfc(z) for z >= 1,
// via the Laplace continued fraction evaluated by the modified Lentz scheme:
//   erfcx(z) = 1/sqrt(pi) * 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + 2/(z + ...)))))
double erfcx_lower_tail(double z) {
  const double tiny = 1e-300;
  double f = z;
  double c = f;
  double d = 0.0;
  for (int k = 1; k < 200; ++k) {
    const double a = 0.5 * k;  // partial numerators 1/2, 1, 3/2, 2, ...
    d = z + a * d;
    if (d == 0.0) d = tiny;
    c = z + a / c;
    if (c == 0.0) c = tiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-17) break;
  }
  return kInvSqrtPi / f;
}

// Laplace continued fraction tail S(z) = 1/(z + 2/(z + 3/(z + 4/(z + ...)))).
// The Mills ratio satisfies Phi(-z)/phi(z) = 1/(z + S-ish ...); more usefully,
// phi(t)/Phi(t) + t = S(-t) exactly for t < 0, which is the cancellation-free
// form of the truncated mean factor.
double mills_tail(double z) {
  double s = 0.0;
  // Backward recursion; depth 128 is far past convergence for z >= 8.
  for (int k = 128; k >= 2; --k) {
    s = k / (z + s);
  }
  return 1.0 / (z + s);
}

}  // namespace

double norm_pdf(double x) { return std::exp(-0.5 * x * x - kLogSqrt2Pi); }

double norm_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double log_norm_cdf(double x) {
  if (x >= -1.0) {
    // Phi >= 0.159 here; erfc is exact and log1p keeps accuracy near 0.
    return std::log1p(-0.5 * std::erfc(x * kInvSqrt2));
  }
  const double z = -x * kInvSqrt2;
  if (x > -20.0) {
    // erfc still comfortably above underflow and accurate to ~1 ulp.
    return std::log(0.5 * std::erfc(z));
  }
  // ln Phi(x) = ln(1/2) - z^2 + ln erfcx(z)
  return -0.69314718055994530942 - z * z + std::log(erfcx_lower_tail(z));
}

double inverse_mills(double x) {
  const double lpdf = -0.5 * x * x - kLogSqrt2Pi;
  return std::exp(lpdf - log_norm_cdf(x));
}

double log_norm_cdf_plus_half_square(double t) {
  if (t > -10.0) {
    return 0.5 * t * t + log_norm_cdf(t);
  }
  const double z = -t * kInvSqrt2;
  return -0.69314718055994530942 + std::log(erfcx_lower_tail(z));
}

double truncated_mean_factor(double t) {
  if (t > -8.0) {
    return t + inverse_mills(t);
  }
  return mills_tail(-t);
}

}  // namespace sfa
