#include "evmc/simulators.hpp"

#include <cmath>
#include <stdexcept>

#include "evmc/special_functions.hpp"

namespace evmc::sim {

void ComparisonProblem::validate() const {
    if (models.size() < 2) {
        throw std::invalid_argument("ComparisonProblem: need at least 2 models");
    }
    if (model_prior.size() != models.size()) {
        throw std::invalid_argument("ComparisonProblem: prior length mismatch");
    }
    double sum = 0.0;
    for (double p : model_prior) {
        if (!(p >= 0.0)) throw std::invalid_argument("ComparisonProblem: negative prior");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw std::invalid_argument("ComparisonProblem: prior does not sum to 1");
    }
    if (size_min == 0 || size_min > size_max) {
        throw std::invalid_argument("ComparisonProblem: bad size bounds");
    }
}

std::size_t ComparisonProblem::draw_size(std::mt19937_64& rng) const {
    std::uniform_int_distribution<std::size_t> dist(size_min, size_max);
    return dist(rng);
}

std::size_t ComparisonProblem::draw_model(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng);
    double acc = 0.0;
    for (std::size_t j = 0; j < model_prior.size(); ++j) {
        acc += model_prior[j];
        if (u < acc) return j;
    }
    return model_prior.size() - 1;
}

Dataset simulate_beta_binomial(double a, double b, std::size_t n, std::mt19937_64& rng) {
    if (!(a > 0.0) || !(b > 0.0)) {
        throw std::invalid_argument("simulate_beta_binomial: shape parameters must be > 0");
    }
    if (n == 0) throw std::invalid_argument("simulate_beta_binomial: N >= 1 required");
    std::gamma_distribution<double> ga(a, 1.0);
    std::gamma_distribution<double> gb(b, 1.0);
    const double x = ga(rng);
    const double y = gb(rng);
    const double theta = x / (x + y);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Dataset ds = Dataset::make(n, 1, DataKind::exchangeable, {"x"});
    for (std::size_t i = 0; i < n; ++i) {
        ds.at(i, 0) = unit(rng) < theta ? 1.0 : 0.0;
    }
    return ds;
}

double beta_binomial_log_marginal(std::size_t n, std::size_t k, double a, double b) {
    if (k > n) throw std::invalid_argument("beta_binomial_log_marginal: K out of range");
    if (!(a > 0.0) || !(b > 0.0)) {
        throw std::invalid_argument("beta_binomial_log_marginal: bad shape parameters");
    }
    const double nn = static_cast<double>(n);
    const double kk = static_cast<double>(k);
    const double log_choose = log_gamma(nn + 1.0) - log_gamma(kk + 1.0) - log_gamma(nn - kk + 1.0);
    return log_choose + log_beta(a + kk, b + nn - kk) - log_beta(a, b);
}

std::vector<double> analytic_two_model_posterior(const Dataset& data, double a1, double b1,
                                                 double a2, double b2,
                                                 const std::vector<double>& model_prior) {
    data.validate();
    if (data.cols != 1) {
        throw std::invalid_argument("analytic_two_model_posterior: expected a single column");
    }
    if (model_prior.size() != 2 || !(model_prior[0] > 0.0) || !(model_prior[1] > 0.0)) {
        throw std::invalid_argument("analytic_two_model_posterior: bad model prior");
    }
    std::size_t successes = 0;
    for (std::size_t i = 0; i < data.rows; ++i) {
        const double v = data.at(i, 0);
        if (v != 0.0 && v != 1.0) {
            throw std::invalid_argument("analytic_two_model_posterior: non-binary data");
        }
        if (v == 1.0) successes++;
    }
    const double l1 = beta_binomial_log_marginal(data.rows, successes, a1, b1) +
                      std::log(model_prior[0]);
    const double l2 = beta_binomial_log_marginal(data.rows, successes, a2, b2) +
                      std::log(model_prior[1]);
    const double m = std::max(l1, l2);
    const double w1 = std::exp(l1 - m);
    const double w2 = std::exp(l2 - m);
    return {w1 / (w1 + w2), w2 / (w1 + w2)};
}

void gmm_means(const GmmGridConfig& cfg, std::size_t m, double mu0[2], double mu1[2]) {
    const std::size_t side = cfg.grid_side;
    if (side < 2) throw std::invalid_argument("gmm_means: grid side must be >= 2");
    if (m >= side * side) throw std::invalid_argument("gmm_means: model index out of range");
    const std::size_t i = m / side;
    const std::size_t j = m % side;
    const double fi = static_cast<double>(i) / static_cast<double>(side - 1);
    const double fj = static_cast<double>(j) / static_cast<double>(side - 1);
    mu0[0] = cfg.lo_min + fi * (cfg.lo_max - cfg.lo_min);
    mu0[1] = cfg.lo_min + fj * (cfg.lo_max - cfg.lo_min);
    mu1[0] = cfg.hi_min + fi * (cfg.hi_max - cfg.hi_min);
    mu1[1] = cfg.hi_min + fj * (cfg.hi_max - cfg.hi_min);
}

Dataset simulate_gmm(const GmmGridConfig& cfg, std::size_t m, double pi, std::size_t n,
                     std::mt19937_64& rng) {
    if (!(pi > 0.0) || !(pi < 1.0)) {
        throw std::invalid_argument("simulate_gmm: mixture weight must lie in (0, 1)");
    }
    if (n == 0) throw std::invalid_argument("simulate_gmm: N >= 1 required");
    double mu0[2], mu1[2];
    gmm_means(cfg, m, mu0, mu1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    Dataset ds = Dataset::make(n, 2, DataKind::exchangeable, {"x0", "x1"});
    for (std::size_t i = 0; i < n; ++i) {
        const double* mu = unit(rng) < pi ? mu1 : mu0;
        ds.at(i, 0) = mu[0] + normal(rng);
        ds.at(i, 1) = mu[1] + normal(rng);
    }
    return ds;
}

} // namespace evmc::sim
