#ifndef EVMC_GRADCHECK_HPP
#define EVMC_GRADCHECK_HPP

#include <cstddef>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace evmc::nn {

struct GradCheckOptions {
    double step = 1e-5;          // central-difference half step
    std::size_t max_coords = 0;  // 0 = check every coordinate
    std::uint64_t seed = 0;      // coordinate subsampling seed
};

/// Compares an analytic gradient against central finite differences of a
/// scalar function and returns the worst relative error. The function is
/// re-evaluated at params +/- h per checked coordinate; params are
/// restored afterwards.
double gradient_check(const std::function<double(std::span<const double>)>& f,
                      std::span<double> params, std::span<const double> analytic_grad,
                      const GradCheckOptions& opts = {});

} // namespace evmc::nn

#endif
