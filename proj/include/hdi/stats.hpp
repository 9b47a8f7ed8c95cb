#pragma once

namespace hdi {

/// Standard normal density.
double norm_pdf(double x);

/// Standard normal cdf Phi(x).
double norm_cdf(double x);

/// Upper tail 1 - Phi(x), accurate for large x.
double norm_sf(double x);

/// Inverse of the standard normal cdf (Wichura's AS 241, ~1e-15 relative error).
double norm_quantile(double p);

/// Upper-alpha quantile z_alpha, i.e. Phi(z_alpha) = 1 - alpha.
double z_upper(double alpha);

/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
double gamma_q(double a, double x);

/// Chi-square cdf with df degrees of freedom.
double chi2_cdf(double x, double df);

/// Chi-square upper tail with df degrees of freedom.
double chi2_sf(double x, double df);

} // namespace hdi
