#include "evmc/simulators.hpp"

#include <cmath>
#include <stdexcept>

namespace evmc::sim {

namespace {

// z / (exp(z) - 1), series-guarded near z = 0.
inline double efun(double z) {
    if (std::abs(z) < 1e-6) return 1.0 - z / 2.0;
    return z / std::expm1(z);
}

struct GatingRates {
    double am, bm, ah, bh, an, bn, p_inf, tau_p;
};

// Cortical/thalamic kinetics of the Pospischil-style model family;
// rates in 1/ms, potentials in mV.
GatingRates rates_at(double v, const HHConfig& cfg) {
    GatingRates r;
    const double vt = cfg.v_t;
    r.am = 1.28 * efun(-(v - vt - 13.0) / 4.0);
    r.bm = 1.4 * efun((v - vt - 40.0) / 5.0);
    r.ah = 0.128 * std::exp(-(v - vt - 17.0) / 18.0);
    r.bh = 4.0 / (1.0 + std::exp(-(v - vt - 40.0) / 5.0));
    r.an = 0.16 * efun(-(v - vt - 15.0) / 5.0);
    r.bn = 0.5 * std::exp(-(v - vt - 10.0) / 40.0);
    r.p_inf = 1.0 / (1.0 + std::exp(-(v + 35.0) / 10.0));
    r.tau_p = cfg.tau_max / (3.3 * std::exp((v + 35.0) / 20.0) + std::exp(-(v + 35.0) / 20.0));
    return r;
}

// Exact exponential relaxation toward the state's current target.
inline double relax(double x, double x_inf, double tau, double dt) {
    return x_inf + (x - x_inf) * std::exp(-dt / tau);
}

} // namespace

std::vector<double> hh_sample_prior(int model, std::mt19937_64& rng) {
    if (model < 1 || model > 3) {
        throw std::invalid_argument("hh_sample_prior: model must be in 1..3");
    }
    std::uniform_real_distribution<double> g_na(1.5, 30.0);
    std::uniform_real_distribution<double> g_k(0.3, 15.0);
    std::vector<double> theta{g_na(rng), g_k(rng)};
    if (model >= 2) {
        std::uniform_real_distribution<double> g_m(0.005, 0.3);
        theta.push_back(g_m(rng));
    }
    if (model >= 3) {
        std::uniform_real_distribution<double> g_l(0.01, 0.18);
        theta.push_back(g_l(rng));
    }
    return theta;
}

Dataset hh_simulate_full(int model, const std::vector<double>& theta, double t_ms,
                         const HHConfig& cfg, std::mt19937_64& rng) {
    if (model < 1 || model > 3) {
        throw std::invalid_argument("hh_simulate: model must be in 1..3");
    }
    const std::size_t expected = model == 1 ? 2 : (model == 2 ? 3 : 4);
    if (theta.size() != expected) {
        throw std::invalid_argument("hh_simulate: theta size mismatch for model " +
                                    std::to_string(model));
    }
    if (!(t_ms > 0.0) || !(cfg.dt > 0.0)) {
        throw std::invalid_argument("hh_simulate: T and dt must be positive");
    }
    const double g_na = theta[0];
    const double g_k = theta[1];
    const double g_m = model >= 2 ? theta[2] : cfg.g_m_default;
    const double g_leak = model >= 3 ? theta[3] : cfg.g_leak_default;

    const std::size_t steps = static_cast<std::size_t>(std::llround(t_ms / cfg.dt));
    if (steps == 0) throw std::invalid_argument("hh_simulate: T shorter than dt");

    std::normal_distribution<double> normal(0.0, 1.0);
    const double noise = cfg.sigma * std::sqrt(cfg.dt);

    double v = cfg.v0;
    GatingRates r = rates_at(v, cfg);
    double m = r.am / (r.am + r.bm);
    double h = r.ah / (r.ah + r.bh);
    double n = r.an / (r.an + r.bn);
    double p = r.p_inf;

    Dataset ds = Dataset::make(steps, 5, DataKind::time_series, {"v", "m", "h", "n", "p"});
    for (std::size_t i = 0; i < steps; ++i) {
        r = rates_at(v, cfg);
        m = relax(m, r.am / (r.am + r.bm), 1.0 / (r.am + r.bm), cfg.dt);
        h = relax(h, r.ah / (r.ah + r.bh), 1.0 / (r.ah + r.bh), cfg.dt);
        n = relax(n, r.an / (r.an + r.bn), 1.0 / (r.an + r.bn), cfg.dt);
        p = relax(p, r.p_inf, r.tau_p, cfg.dt);

        const double cna = g_na * m * m * m * h;
        const double ck = g_k * n * n * n * n;
        const double cm = g_m * p;
        const double g_tot = g_leak + cna + ck + cm;
        const double v_inf = (g_leak * cfg.e_leak + cna * cfg.e_na + ck * cfg.e_k +
                              cm * cfg.e_k + cfg.i_inj) / g_tot;
        v = relax(v, v_inf, cfg.c_m / g_tot, cfg.dt);
        if (cfg.sigma > 0.0) v += noise * normal(rng);
        if (std::abs(v) > cfg.blow_up_mv) {
            throw std::runtime_error("hh_simulate: numerical blow-up, |V| = " +
                                     std::to_string(std::abs(v)) + " mV at step " +
                                     std::to_string(i));
        }
        ds.at(i, 0) = v;
        ds.at(i, 1) = m;
        ds.at(i, 2) = h;
        ds.at(i, 3) = n;
        ds.at(i, 4) = p;
    }
    return ds;
}

Dataset hh_simulate(int model, const std::vector<double>& theta, double t_ms,
                    const HHConfig& cfg, std::mt19937_64& rng) {
    Dataset full = hh_simulate_full(model, theta, t_ms, cfg, rng);
    Dataset ds = Dataset::make(full.rows, 1, DataKind::time_series, {"v"});
    for (std::size_t i = 0; i < full.rows; ++i) ds.at(i, 0) = full.at(i, 0);
    return ds;
}

std::size_t spike_count(const Dataset& voltage_trace) {
    const std::size_t col = voltage_trace.column_index("v");
    std::size_t count = 0;
    bool armed = true;
    // -20 mV catches the low-conductance cells whose peaks stay below 0 mV;
    // hysteresis avoids double counts on noisy plateaus.
    for (std::size_t i = 0; i < voltage_trace.rows; ++i) {
        const double v = voltage_trace.at(i, col);
        if (armed && v >= -20.0) {
            count++;
            armed = false;
        } else if (!armed && v < -45.0) {
            armed = true;
        }
    }
    return count;
}

} // namespace evmc::sim
