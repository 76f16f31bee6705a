#ifndef EVMC_SPECIAL_FUNCTIONS_HPP
#define EVMC_SPECIAL_FUNCTIONS_HPP

namespace evmc {

/// Natural log of the gamma function (Lanczos approximation, g=7).
/// Accurate to better than 1e-12 relative error on [1, 1e4].
double log_gamma(double x);

/// Digamma function psi(x) for x > 0.
double digamma(double x);

/// Trigamma function psi'(x) for x > 0.
double trigamma(double x);

/// log Beta(a, b) = lnG(a) + lnG(b) - lnG(a+b).
double log_beta(double a, double b);

} // namespace evmc

#endif
