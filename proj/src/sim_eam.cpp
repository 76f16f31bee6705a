#include "evmc/simulators.hpp"

#include <cmath>
#include <stdexcept>

namespace evmc::sim {

namespace {

constexpr double kHalfPi = 1.5707963267948966;
// Unit-scale CMS output divided by sqrt(2) so the alpha = 2 limit is a
// standard normal; keeps the Gaussian DDM convention c = 1 exact.
constexpr double kStableNorm = 0.70710678118654752;

double uniform_range(double lo, double hi, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(lo, hi);
    return dist(rng);
}

} // namespace

double symmetric_stable_sample(double alpha, std::mt19937_64& rng) {
    if (!(alpha > 0.0) || alpha > 2.0) {
        throw std::invalid_argument("symmetric_stable_sample: alpha must lie in (0, 2]");
    }
    if (alpha == 2.0) {
        std::normal_distribution<double> normal(0.0, 1.0);
        return normal(rng);
    }
    std::uniform_real_distribution<double> angle(-kHalfPi, kHalfPi);
    std::exponential_distribution<double> expo(1.0);
    const double u = angle(rng);
    const double e = expo(rng);
    if (alpha == 1.0) {
        return std::tan(u) * kStableNorm; // Cauchy
    }
    const double s = std::sin(alpha * u) / std::pow(std::cos(u), 1.0 / alpha) *
                     std::pow(std::cos(u - alpha * u) / e, (1.0 - alpha) / alpha);
    return s * kStableNorm;
}

EamParams eam_sample_prior(int model, std::mt19937_64& rng) {
    if (model < 1 || model > 6) {
        throw std::invalid_argument("eam_sample_prior: model must be in 1..6");
    }
    EamParams p;
    p.v1 = uniform_range(0.0, 6.0, rng);
    p.v2 = uniform_range(-6.0, 0.0, rng);
    p.a = uniform_range(0.6, 3.0, rng);
    p.t0 = uniform_range(0.2, 1.5, rng);
    p.zr = model >= 2 ? uniform_range(0.3, 0.7, rng) : 0.5;
    p.alpha_stable = model >= 3 ? uniform_range(1.0, 2.0, rng) : 2.0;
    p.s_t0 = model >= 4 ? uniform_range(0.0, 0.4, rng) : 0.0;
    p.s_v = model >= 5 ? uniform_range(0.0, 2.0, rng) : 0.0;
    p.s_zr = model >= 6 ? uniform_range(0.0, 0.6, rng) : 0.0;
    return p;
}

std::vector<double> eam_pack(const EamParams& p) {
    return {p.v1, p.v2, p.a, p.t0, p.zr, p.alpha_stable, p.s_t0, p.s_v, p.s_zr};
}

EamParams eam_unpack(const std::vector<double>& theta) {
    if (theta.size() != 9) {
        throw std::invalid_argument("eam_unpack: expected 9 parameters");
    }
    EamParams p;
    p.v1 = theta[0];
    p.v2 = theta[1];
    p.a = theta[2];
    p.t0 = theta[3];
    p.zr = theta[4];
    p.alpha_stable = theta[5];
    p.s_t0 = theta[6];
    p.s_v = theta[7];
    p.s_zr = theta[8];
    return p;
}

Dataset eam_simulate(const EamParams& params, std::size_t n, const EamConfig& cfg,
                     std::mt19937_64& rng) {
    if (n == 0) throw std::invalid_argument("eam_simulate: N >= 1 required");
    if (!(params.a > 0.0) || !(params.t0 >= 0.0)) {
        throw std::invalid_argument("eam_simulate: invalid threshold or t0");
    }
    std::normal_distribution<double> normal(0.0, 1.0);
    const double dt = cfg.step;
    const double noise_scale = cfg.diffusion * std::pow(dt, 1.0 / params.alpha_stable);
    const std::size_t max_steps = static_cast<std::size_t>(cfg.time_cap / dt);
    const std::size_t n_first = (n + 1) / 2;

    Dataset ds = Dataset::make(n, 3, DataKind::exchangeable, {"rt", "choice", "condition"});
    for (std::size_t i = 0; i < n; ++i) {
        const int condition = i < n_first ? 1 : 2;
        const double v_mean = condition == 1 ? params.v1 : params.v2;
        bool done = false;
        for (int attempt = 0; attempt <= cfg.max_retries && !done; ++attempt) {
            const double t0_trial =
                params.s_t0 > 0.0
                    ? params.t0 + uniform_range(-params.s_t0 / 2.0, params.s_t0 / 2.0, rng)
                    : params.t0;
            const double v_trial = params.s_v > 0.0 ? v_mean + params.s_v * normal(rng) : v_mean;
            const double zr_trial =
                params.s_zr > 0.0
                    ? params.zr + uniform_range(-params.s_zr / 2.0, params.s_zr / 2.0, rng)
                    : params.zr;
            double x = zr_trial * params.a;
            const double drift = v_trial * dt;
            for (std::size_t step = 0; step < max_steps; ++step) {
                if (x >= params.a || x <= 0.0) {
                    ds.at(i, 0) = static_cast<double>(step) * dt + t0_trial;
                    ds.at(i, 1) = x >= params.a ? 1.0 : 0.0;
                    ds.at(i, 2) = static_cast<double>(condition);
                    done = true;
                    break;
                }
                if (params.alpha_stable == 2.0) {
                    x += drift + noise_scale * normal(rng);
                } else {
                    x += drift + noise_scale * symmetric_stable_sample(params.alpha_stable, rng);
                }
            }
        }
        if (!done) {
            throw std::runtime_error("eam_simulate: trial exceeded the time cap after " +
                                     std::to_string(cfg.max_retries) + " retries");
        }
    }
    return ds;
}

Dataset shift_rts(const Dataset& data, double k) {
    data.validate();
    const std::size_t rt_col = data.column_index("rt");
    Dataset shifted = data;
    for (std::size_t i = 0; i < shifted.rows; ++i) {
        shifted.at(i, rt_col) += k;
    }
    return shifted;
}

} // namespace evmc::sim
