#include "evmc/simulators.hpp"

#include <stdexcept>

namespace evmc::sim {

namespace {

std::vector<double> uniform_prior(std::size_t j) {
    return std::vector<double>(j, 1.0 / static_cast<double>(j));
}

} // namespace

ComparisonProblem beta_binomial_problem(double a1, double b1, double a2, double b2,
                                        std::size_t n_min, std::size_t n_max) {
    ComparisonProblem problem;
    problem.kind = DataKind::exchangeable;
    problem.size_min = n_min;
    problem.size_max = n_max;
    auto add = [&](int index, double a, double b) {
        ModelSpec spec;
        spec.index = index;
        spec.label = "beta(" + std::to_string(a) + "," + std::to_string(b) + ")";
        spec.sample_prior = [a, b](std::mt19937_64& rng) {
            std::gamma_distribution<double> ga(a, 1.0);
            std::gamma_distribution<double> gb(b, 1.0);
            const double x = ga(rng);
            const double y = gb(rng);
            return std::vector<double>{x / (x + y)};
        };
        spec.simulate = [](const std::vector<double>& theta, std::size_t size,
                           std::mt19937_64& rng) {
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            Dataset ds = Dataset::make(size, 1, DataKind::exchangeable, {"x"});
            for (std::size_t i = 0; i < size; ++i) {
                ds.at(i, 0) = unit(rng) < theta[0] ? 1.0 : 0.0;
            }
            return ds;
        };
        problem.models.push_back(std::move(spec));
    };
    add(1, a1, b1);
    add(2, a2, b2);
    problem.model_prior = uniform_prior(2);
    problem.validate();
    return problem;
}

ComparisonProblem gmm_problem(const GmmGridConfig& cfg, std::size_t n_min, std::size_t n_max) {
    ComparisonProblem problem;
    problem.kind = DataKind::exchangeable;
    problem.size_min = n_min;
    problem.size_max = n_max;
    const std::size_t count = cfg.grid_side * cfg.grid_side;
    for (std::size_t m = 0; m < count; ++m) {
        ModelSpec spec;
        spec.index = static_cast<int>(m + 1);
        spec.label = "gmm" + std::to_string(m);
        spec.sample_prior = [cfg](std::mt19937_64& rng) {
            std::gamma_distribution<double> ga(cfg.mix_a, 1.0);
            std::gamma_distribution<double> gb(cfg.mix_b, 1.0);
            const double x = ga(rng);
            const double y = gb(rng);
            return std::vector<double>{x / (x + y)};
        };
        spec.simulate = [cfg, m](const std::vector<double>& theta, std::size_t size,
                                 std::mt19937_64& rng) {
            return simulate_gmm(cfg, m, theta[0], size, rng);
        };
        problem.models.push_back(std::move(spec));
    }
    problem.model_prior = uniform_prior(count);
    problem.validate();
    return problem;
}

ComparisonProblem mjp_problem(double theta_max, std::size_t grid_points,
                              const GillespieConfig& cfg) {
    if (!(theta_max > 0.0)) {
        throw std::invalid_argument("mjp_problem: theta_max must be positive");
    }
    ComparisonProblem problem;
    problem.kind = DataKind::time_series;
    problem.size_min = grid_points;
    problem.size_max = grid_points;
    for (int model = 1; model <= 2; ++model) {
        ModelSpec spec;
        spec.index = model;
        spec.label = model == 1 ? "z+y->2y" : "z->y";
        spec.sample_prior = [theta_max](std::mt19937_64& rng) {
            std::uniform_real_distribution<double> dist(0.0, theta_max);
            double theta = dist(rng);
            while (theta <= 0.0) theta = dist(rng);
            return std::vector<double>{theta};
        };
        spec.simulate = [model, cfg](const std::vector<double>& theta, std::size_t size,
                                     std::mt19937_64& rng) {
            Dataset trajectory = gillespie_simulate(model, theta[0], cfg, rng);
            Dataset grid = regrid_trajectory(trajectory, size, cfg.t_max);
            // standardize to O(1) so the recurrent gates stay unsaturated
            const double count_scale = 0.5 * (cfg.z0 + cfg.y0);
            for (std::size_t i = 0; i < grid.rows; ++i) {
                grid.at(i, 0) = 2.0 * grid.at(i, 0) / cfg.t_max - 1.0;
                grid.at(i, 1) = grid.at(i, 1) / count_scale - 1.0;
                grid.at(i, 2) = grid.at(i, 2) / count_scale - 1.0;
            }
            return grid;
        };
        problem.models.push_back(std::move(spec));
    }
    problem.model_prior = uniform_prior(2);
    problem.validate();
    return problem;
}

ComparisonProblem eam_problem(int n_models, std::size_t n_min, std::size_t n_max,
                              const EamConfig& cfg) {
    if (n_models < 2 || n_models > 6) {
        throw std::invalid_argument("eam_problem: n_models must be in 2..6");
    }
    ComparisonProblem problem;
    problem.kind = DataKind::exchangeable;
    problem.size_min = n_min;
    problem.size_max = n_max;
    for (int model = 1; model <= n_models; ++model) {
        ModelSpec spec;
        spec.index = model;
        spec.label = "eam" + std::to_string(model);
        spec.sample_prior = [model](std::mt19937_64& rng) {
            return eam_pack(eam_sample_prior(model, rng));
        };
        spec.simulate = [cfg](const std::vector<double>& theta, std::size_t size,
                              std::mt19937_64& rng) {
            return eam_simulate(eam_unpack(theta), size, cfg, rng);
        };
        problem.models.push_back(std::move(spec));
    }
    problem.model_prior = uniform_prior(static_cast<std::size_t>(n_models));
    problem.validate();
    return problem;
}

ComparisonProblem hh_problem(const HHConfig& cfg, std::size_t t_min, std::size_t t_max) {
    ComparisonProblem problem;
    problem.kind = DataKind::time_series;
    problem.size_min = t_min;
    problem.size_max = t_max;
    for (int model = 1; model <= 3; ++model) {
        ModelSpec spec;
        spec.index = model;
        spec.label = "hh" + std::to_string(model);
        spec.sample_prior = [model](std::mt19937_64& rng) {
            return hh_sample_prior(model, rng);
        };
        spec.simulate = [model, cfg](const std::vector<double>& theta, std::size_t size,
                                     std::mt19937_64& rng) {
            Dataset ds = hh_simulate(model, theta, static_cast<double>(size), cfg, rng);
            // volts arrive in [-90, 40] mV; shift/scale to O(1) for the nets
            for (double& v : ds.values) v = (v + 65.0) / 20.0;
            return ds;
        };
        problem.models.push_back(std::move(spec));
    }
    problem.model_prior = uniform_prior(3);
    problem.validate();
    return problem;
}

} // namespace evmc::sim
