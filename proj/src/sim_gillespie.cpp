#include "evmc/simulators.hpp"

#include <cmath>
#include <stdexcept>

namespace evmc::sim {

Dataset gillespie_simulate(int model, double theta, const GillespieConfig& cfg,
                           std::mt19937_64& rng) {
    if (model != 1 && model != 2) {
        throw std::invalid_argument("gillespie_simulate: model must be 1 or 2");
    }
    if (!(theta > 0.0)) {
        throw std::invalid_argument("gillespie_simulate: rate must be positive");
    }
    if (cfg.z0 < 0 || cfg.y0 < 0) {
        throw std::invalid_argument("gillespie_simulate: negative initial counts");
    }
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<double> rows;
    double t = 0.0;
    int z = cfg.z0;
    int y = cfg.y0;
    rows.insert(rows.end(), {t, static_cast<double>(z), static_cast<double>(y)});
    while (true) {
        const double a = model == 1 ? theta * z * y : theta * z;
        if (a <= 0.0) break;
        const double wait = -std::log(1.0 - unit(rng)) / a;
        if (t + wait > cfg.t_max) break;
        t += wait;
        z -= 1;
        y += 1;
        rows.insert(rows.end(), {t, static_cast<double>(z), static_cast<double>(y)});
    }

    Dataset ds = Dataset::make(rows.size() / 3, 3, DataKind::time_series, {"t", "z", "y"});
    ds.values = std::move(rows);
    return ds;
}

Dataset regrid_trajectory(const Dataset& trajectory, std::size_t points, double t_max) {
    trajectory.validate();
    if (trajectory.cols != 3) {
        throw std::invalid_argument("regrid_trajectory: expected columns (t, z, y)");
    }
    if (points < 2) {
        throw std::invalid_argument("regrid_trajectory: need at least 2 grid points");
    }
    Dataset out = Dataset::make(points, 3, DataKind::time_series, {"t", "z", "y"});
    const std::size_t n = trajectory.rows;
    std::size_t seg = 0;
    for (std::size_t i = 0; i < points; ++i) {
        const double t = t_max * static_cast<double>(i) / static_cast<double>(points - 1);
        while (seg + 1 < n && trajectory.at(seg + 1, 0) <= t) seg++;
        out.at(i, 0) = t;
        if (seg + 1 >= n || trajectory.at(seg, 0) >= t) {
            out.at(i, 1) = trajectory.at(seg, 1);
            out.at(i, 2) = trajectory.at(seg, 2);
        } else {
            const double t0 = trajectory.at(seg, 0);
            const double t1 = trajectory.at(seg + 1, 0);
            const double w = (t - t0) / (t1 - t0);
            out.at(i, 1) = (1.0 - w) * trajectory.at(seg, 1) + w * trajectory.at(seg + 1, 1);
            out.at(i, 2) = (1.0 - w) * trajectory.at(seg, 2) + w * trajectory.at(seg + 1, 2);
        }
    }
    return out;
}

} // namespace evmc::sim
