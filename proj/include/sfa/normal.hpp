#pragma once

// Standard-normal helpers that stay accurate deep in the lower tail.
// The within-model likelihood evaluates ln Phi(mu1/sigma1) and the
// truncated-normal mean mu1 + sigma1*phi/Phi at arguments that can reach
// -1e3 and beyond for efficient firms, where a naive Phi underflows.

namespace sfa {

/// Standard normal density.
double norm_pdf(double x);

/// Standard normal CDF (erfc-based; underflows to 0 below x ~ -38).
double norm_cdf(double x);

/// ln Phi(x), accurate for all x. Uses a scaled-erfc continued fraction in
/// the lower tail instead of taking the log of an underflowed Phi.
double log_norm_cdf(double x);

/// Inverse Mills ratio phi(x)/Phi(x), computed as exp(ln phi - ln Phi).
double inverse_mills(double x);

/// t^2/2 + ln Phi(t), evaluated as ln(erfcx(-t/sqrt(2))/2) in the lower tail
/// so the two huge opposing terms never meet. This exact combination appears
/// in the marginal likelihood.
double log_norm_cdf_plus_half_square(double t);

/// t + phi(t)/Phi(t): the mean of a standard normal truncated to [ -t, inf )
/// shifted back, i.e. E[Z | Z > 0] for Z ~ N(t, 1). Strictly positive and
/// decreasing in -t. For t << 0 the direct sum cancels catastrophically,
/// so the lower tail switches to the Laplace continued fraction, which
/// yields the difference without cancellation.
double truncated_mean_factor(double t);

}  // namespace sfa
