#pragma once

namespace bandcov {

// Standard normal CDF, absolute error well below 1e-12 over |x| <= 8
// (erfc-based, a few ulp).
double normal_cdf(double x);

// Upper-tail survival function 1 - Phi(x), precise far into the tail.
double normal_sf(double x);

// Inverse CDF; Acklam's rational approximation refined with one Halley step
// against the erfc-based CDF (~1e-15 relative). Requires 0 < prob < 1.
double normal_quantile(double prob);

// z_alpha, the upper alpha critical value: 1 - Phi(z_alpha) = alpha.
double z_alpha(double alpha);

}  // namespace bandcov
