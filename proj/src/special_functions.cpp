#include "evmc/special_functions.hpp"

#include <cmath>
#include <stdexcept>

namespace evmc {

namespace {

// Lanczos coefficients for g = 7, n = 9 (Godfrey).
constexpr double kLanczosG = 7.0;
constexpr double kLanczos[9] = {
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
};

constexpr double kHalfLog2Pi = 0.91893853320467274178;

} // namespace

double log_gamma(double x) {
    if (!(x > 0.0)) {
        throw std::invalid_argument("log_gamma: argument must be positive");
    }
    if (x < 0.5) {
        // Reflection keeps the approximation on its accurate branch.
        return std::log(M_PI / std::sin(M_PI * x)) - log_gamma(1.0 - x);
    }
    const double z = x - 1.0;
    double acc = kLanczos[0];
    for (int i = 1; i < 9; ++i) {
        acc += kLanczos[i] / (z + static_cast<double>(i));
    }
    const double t = z + kLanczosG + 0.5;
    return kHalfLog2Pi + (z + 0.5) * std::log(t) - t + std::log(acc);
}

double digamma(double x) {
    if (!(x > 0.0)) {
        throw std::invalid_argument("digamma: argument must be positive");
    }
    double result = 0.0;
    // Shift into the asymptotic regime.
    while (x < 12.0) {
        result -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    // ln x - 1/(2x) - sum B_{2n} / (2n x^{2n})
    result += std::log(x) - 0.5 * inv
        - inv2 * (1.0 / 12.0
        - inv2 * (1.0 / 120.0
        - inv2 * (1.0 / 252.0
        - inv2 * (1.0 / 240.0
        - inv2 * (1.0 / 132.0
        - inv2 * (691.0 / 32760.0))))));
    return result;
}

double trigamma(double x) {
    if (!(x > 0.0)) {
        throw std::invalid_argument("trigamma: argument must be positive");
    }
    double result = 0.0;
    while (x < 12.0) {
        result += 1.0 / (x * x);
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    result += inv * (1.0
        + inv * (0.5
        + inv * (1.0 / 6.0
        - inv2 * (1.0 / 30.0
        - inv2 * (1.0 / 42.0
        - inv2 * (1.0 / 30.0
        - inv2 * (5.0 / 66.0
        - inv2 * (691.0 / 2730.0))))))));
    return result;
}

double log_beta(double a, double b) {
    return log_gamma(a) + log_gamma(b) - log_gamma(a + b);
}

} // namespace evmc
