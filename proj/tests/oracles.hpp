// Test-only oracles: Monte-Carlo Dirichlet sampling, adaptive quadrature
// and simplex-grid integration. Kept independent of the library paths they
// are used to check (special functions come from <cmath> here).
#ifndef EVMC_TESTS_ORACLES_HPP
#define EVMC_TESTS_ORACLES_HPP

#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace oracles {

/// log Dirichlet density via std::lgamma only.
inline double std_dirichlet_log_pdf(const std::vector<double>& pi,
                                    const std::vector<double>& alpha) {
    double a0 = 0.0;
    double logp = 0.0;
    for (std::size_t j = 0; j < alpha.size(); ++j) {
        a0 += alpha[j];
        logp -= std::lgamma(alpha[j]);
        logp += (alpha[j] - 1.0) * std::log(pi[j]);
    }
    return logp + std::lgamma(a0);
}

/// pi ~ Dir(alpha) via normalized gamma draws.
inline std::vector<double> sample_dirichlet(const std::vector<double>& alpha,
                                            std::mt19937_64& rng) {
    std::vector<double> pi(alpha.size());
    double sum = 0.0;
    for (std::size_t j = 0; j < alpha.size(); ++j) {
        std::gamma_distribution<double> gamma(alpha[j], 1.0);
        pi[j] = gamma(rng);
        sum += pi[j];
    }
    for (double& p : pi) p /= sum;
    return pi;
}

/// KL[Dir(alpha) || Dir(1)] estimated by averaging the log-density ratio
/// over `samples` draws.
inline double mc_kl_to_uniform(const std::vector<double>& alpha, std::size_t samples,
                               std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const double j_count = static_cast<double>(alpha.size());
    const double log_uniform = std::lgamma(j_count);
    double acc = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
        const std::vector<double> pi = sample_dirichlet(alpha, rng);
        acc += std_dirichlet_log_pdf(pi, alpha) - log_uniform;
    }
    return acc / static_cast<double>(samples);
}

namespace detail {
inline double simpson(const std::function<double(double)>& f, double a, double b, double fa,
                      double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_step(const std::function<double(double)>& f, double a, double b,
                            double fa, double fm, double fb, double whole, double tol,
                            int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = simpson(f, a, m, fa, flm, fm);
    const double right = simpson(f, m, b, fm, frm, fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) {
        return left + right + (left + right - whole) / 15.0;
    }
    return adaptive_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
           adaptive_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}
} // namespace detail

/// Adaptive Simpson quadrature.
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-12) {
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = detail::simpson(f, a, b, fa, fm, fb);
    return detail::adaptive_step(f, a, b, fa, fm, fb, whole, tol, 40);
}

/// Central finite difference of a scalar function.
inline double central_difference(const std::function<double(double)>& f, double x,
                                 double h = 1e-5) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

} // namespace oracles

#endif
