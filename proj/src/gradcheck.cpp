#include "evmc/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace evmc::nn {

double gradient_check(const std::function<double(std::span<const double>)>& f,
                      std::span<double> params, std::span<const double> analytic_grad,
                      const GradCheckOptions& opts) {
    if (params.size() != analytic_grad.size()) {
        throw std::invalid_argument("gradient_check: gradient length mismatch");
    }
    std::vector<std::size_t> coords(params.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (opts.max_coords > 0 && opts.max_coords < coords.size()) {
        std::mt19937_64 rng(opts.seed);
        std::shuffle(coords.begin(), coords.end(), rng);
        coords.resize(opts.max_coords);
    }

    double worst = 0.0;
    for (std::size_t i : coords) {
        const double saved = params[i];
        params[i] = saved + opts.step;
        const double up = f(params);
        params[i] = saved - opts.step;
        const double down = f(params);
        params[i] = saved;
        const double numeric = (up - down) / (2.0 * opts.step);
        const double analytic = analytic_grad[i];
        // Below ~1e-5 the central difference is roundoff-dominated, so tiny
        // gradients are compared absolutely at that scale.
        const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-5});
        worst = std::max(worst, std::abs(analytic - numeric) / denom);
    }
    return worst;
}

} // namespace evmc::nn
