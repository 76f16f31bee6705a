#ifndef EVMC_SIMULATORS_HPP
#define EVMC_SIMULATORS_HPP

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "evmc/dataset.hpp"

namespace evmc::sim {

/// A candidate model: a prior sampler over its parameters plus a stochastic
/// forward simulator. `size` is the dataset-size parameter drawn from p(N)
/// (observation count for exchangeable data, duration for time series).
struct ModelSpec {
    int index = 0;
    std::string label;
    std::function<std::vector<double>(std::mt19937_64&)> sample_prior;
    std::function<Dataset(const std::vector<double>& theta, std::size_t size,
                          std::mt19937_64&)> simulate;
};

struct ComparisonProblem {
    std::vector<ModelSpec> models;
    std::vector<double> model_prior; // sums to 1
    std::size_t size_min = 1;
    std::size_t size_max = 1;
    DataKind kind = DataKind::exchangeable;

    std::size_t model_count() const { return models.size(); }
    void validate() const;

    /// Draw a dataset size from the discrete-uniform p(N).
    std::size_t draw_size(std::mt19937_64& rng) const;
    /// Draw a model index from p(M).
    std::size_t draw_model(std::mt19937_64& rng) const;
};

// ---------------------------------------------------------------- beta-binomial

/// theta ~ Beta(a, b) once, then N iid Bernoulli(theta) rows.
Dataset simulate_beta_binomial(double a, double b, std::size_t n, std::mt19937_64& rng);

/// log p(x_{1:N}) = log[ C(N,K) Beta(a+K, b+N-K) / Beta(a, b) ].
double beta_binomial_log_marginal(std::size_t n, std::size_t k, double a, double b);

/// Exact two-model posterior for a binary dataset under Beta(a1,b1) vs
/// Beta(a2,b2) priors; the analytic oracle for the toy comparison.
std::vector<double> analytic_two_model_posterior(const Dataset& data,
                                                 double a1, double b1,
                                                 double a2, double b2,
                                                 const std::vector<double>& model_prior);

// ---------------------------------------------------------------- GMM grid

struct GmmGridConfig {
    std::size_t grid_side = 20;
    double lo_min = -10.0, lo_max = 0.0; // box of the first component means
    double hi_min = 0.0, hi_max = 10.0;  // box of the second component means
    double mix_a = 30.0, mix_b = 30.0;   // Beta prior of the mixture weight
};

/// Component means of model m on the two grids.
void gmm_means(const GmmGridConfig& cfg, std::size_t m, double mu0[2], double mu1[2]);

/// N rows of the 2-component 2D mixture with weight pi.
Dataset simulate_gmm(const GmmGridConfig& cfg, std::size_t m, double pi, std::size_t n,
                     std::mt19937_64& rng);

// ---------------------------------------------------------------- Gillespie MJP

struct GillespieConfig {
    int z0 = 40;
    int y0 = 3;
    double t_max = 0.1; // seconds
};

/// Exact SSA for the conversion models
///   model 1: z + y -> 2y  (propensity theta * z * y)
///   model 2: z -> y       (propensity theta * z)
/// Returns the jump-time trajectory with columns (t, z, y), including the
/// initial state at t = 0.
Dataset gillespie_simulate(int model, double theta, const GillespieConfig& cfg,
                           std::mt19937_64& rng);

/// Linear interpolation of a jump trajectory onto a fixed uniform grid over
/// [0, t_max]; the network-facing representation.
Dataset regrid_trajectory(const Dataset& trajectory, std::size_t points, double t_max);

// ---------------------------------------------------------------- EAM / DDM

/// Free and frozen parameters of an evidence-accumulation model.
struct EamParams {
    double v1 = 0.0;          // drift, condition 1
    double v2 = 0.0;          // drift, condition 2
    double a = 1.0;           // boundary separation
    double t0 = 0.3;          // non-decision time
    double zr = 0.5;          // relative start point
    double alpha_stable = 2.0; // noise stability index; 2 = Gaussian
    double s_t0 = 0.0;        // trial-to-trial range of t0
    double s_v = 0.0;         // trial-to-trial sd of drift
    double s_zr = 0.0;        // trial-to-trial range of zr
};

struct EamConfig {
    double diffusion = 1.0;   // c in dx = v dt + c dxi
    double step = 1e-3;       // Euler-Maruyama step, seconds
    double time_cap = 10.0;   // per-trial cap, seconds
    int max_retries = 100;    // resampling budget per trial
};

/// Draw parameters from the nested model priors (model in 1..6); frozen
/// parameters take their fixed values.
EamParams eam_sample_prior(int model, std::mt19937_64& rng);

std::vector<double> eam_pack(const EamParams& p);
EamParams eam_unpack(const std::vector<double>& theta);

/// N trials with an even condition split; rows (rt seconds, choice, condition).
Dataset eam_simulate(const EamParams& params, std::size_t n, const EamConfig& cfg,
                     std::mt19937_64& rng);

/// rt' = rt + k; everything else unchanged.
Dataset shift_rts(const Dataset& data, double k);

/// Symmetric alpha-stable draw, Chambers-Mallows-Stuck, scaled so that
/// alpha = 2 yields a standard normal.
double symmetric_stable_sample(double alpha, std::mt19937_64& rng);

// ---------------------------------------------------------------- Hodgkin-Huxley

struct HHConfig {
    double i_inj = 3.0;      // µA/cm^2, constant injected current
    double sigma = 0.5;      // mV per sqrt(ms), membrane noise
    double dt = 0.2;         // ms, integration and sampling step
    double c_m = 1.0;        // µF/cm^2
    double e_na = 50.0;      // mV
    double e_k = -90.0;      // mV (also the M-current reversal)
    double e_leak = -70.0;   // mV
    double v_t = -60.0;      // mV, spike threshold adjustment
    double tau_max = 1000.0; // ms, M-current time constant scale
    double v0 = -70.0;       // mV, initial potential
    double g_m_default = 0.07;
    double g_leak_default = 0.1;
    double blow_up_mv = 200.0;
};

/// Conductance priors of the nested models (model in 1..3):
///   theta_1 = (g_na, g_k), theta_2 += g_m, theta_3 += g_leak.
std::vector<double> hh_sample_prior(int model, std::mt19937_64& rng);

/// Integrate the five-state membrane system for T milliseconds and return
/// the sampled potential (single column "v", one row per dt).
/// Throws std::runtime_error on numerical blow-up (|V| > 200 mV).
Dataset hh_simulate(int model, const std::vector<double>& theta, double t_ms,
                    const HHConfig& cfg, std::mt19937_64& rng);

/// Same integration with the full state recorded (columns v, m, h, n, p).
Dataset hh_simulate_full(int model, const std::vector<double>& theta, double t_ms,
                         const HHConfig& cfg, std::mt19937_64& rng);

/// Upward crossings of -20 mV with -45 mV re-arm hysteresis.
std::size_t spike_count(const Dataset& voltage_trace);

// ---------------------------------------------------------------- problem builders

ComparisonProblem beta_binomial_problem(double a1 = 1.0, double b1 = 1.0,
                                        double a2 = 30.0, double b2 = 30.0,
                                        std::size_t n_min = 1, std::size_t n_max = 100);

ComparisonProblem gmm_problem(const GmmGridConfig& cfg, std::size_t n_min = 1,
                              std::size_t n_max = 250);

/// Both MJP models with rate ~ U(0, theta_max); datasets are jump
/// trajectories regridded to `size` points.
ComparisonProblem mjp_problem(double theta_max = 100.0, std::size_t grid_points = 100,
                              const GillespieConfig& cfg = {});

/// The first `n_models` nested EAMs (2..6).
ComparisonProblem eam_problem(int n_models = 6, std::size_t n_min = 1,
                              std::size_t n_max = 300, const EamConfig& cfg = {});

/// Three nested conductance models; size parameter is T in ms.
ComparisonProblem hh_problem(const HHConfig& cfg = {}, std::size_t t_min = 100,
                             std::size_t t_max = 400);

} // namespace evmc::sim

#endif
