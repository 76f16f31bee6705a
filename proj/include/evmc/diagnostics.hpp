#ifndef EVMC_DIAGNOSTICS_HPP
#define EVMC_DIAGNOSTICS_HPP

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "evmc/architectures.hpp"
#include "evmc/simulators.hpp"

namespace evmc::diag {

using ProbabilityVector = std::vector<double>;

/// Fraction of argmax assignments matching the truth; ties broken by the
/// lowest model index.
double accuracy(const std::vector<ProbabilityVector>& predictions,
                const std::vector<std::size_t>& labels);

std::size_t argmax_model(const ProbabilityVector& probs);

struct CalibrationBin {
    double bin_center = 0.0;
    double mean_predicted = 0.0;
    double empirical_frequency = 0.0;
    std::size_t count = 0;
};

/// One-vs-rest reliability table for model j over equal-width bins.
std::vector<CalibrationBin> calibration_curve(const std::vector<ProbabilityVector>& predictions,
                                              const std::vector<std::size_t>& labels,
                                              std::size_t n_bins, std::size_t model_j);

/// Bin-weighted |accuracy - confidence| over max-probability predictions.
double expected_calibration_error(const std::vector<ProbabilityVector>& predictions,
                                  const std::vector<std::size_t>& labels,
                                  std::size_t n_bins = 10);

/// max{0, T - accuracy among predictions with confidence > T}; zero when
/// nothing lies above the threshold.
double overconfidence(const std::vector<ProbabilityVector>& predictions,
                      const std::vector<std::size_t>& labels, double threshold = 0.95);

struct BootstrapSummary {
    double mean = 0.0;
    double sd = 0.0;
    double lo = 0.0; // 2.5 percentile
    double hi = 0.0; // 97.5 percentile
};

/// Percentile bootstrap of a metric over datasets resampled with
/// replacement; the metric receives resampled index lists.
BootstrapSummary bootstrap(const std::function<double(std::span<const std::size_t>)>& metric,
                           std::size_t set_size, std::size_t n_boot, std::mt19937_64& rng);

struct CalibrationReport {
    std::size_t evaluation_size = 0;
    std::size_t n_bins = 10;
    double accuracy = 0.0;
    double ece = 0.0;
    double overconfidence = 0.0;
    double overconfidence_threshold = 0.95;
    double mean_uncertainty = 0.0;
    BootstrapSummary accuracy_bootstrap;
    std::vector<std::vector<CalibrationBin>> per_model_curves;
};

/// Simulate `count` validation sets at a fixed size, run amortized
/// inference and build the full report.
CalibrationReport evaluate_checkpoint(const arch::EvidentialNetwork& network,
                                      const sim::ComparisonProblem& problem,
                                      std::size_t count, std::size_t size,
                                      std::uint64_t seed, std::size_t n_bins = 10,
                                      std::size_t n_boot = 100);

void write_report_json(const CalibrationReport& report, const std::string& path,
                       const std::string& config_echo, std::uint64_t seed);
void write_curves_csv(const CalibrationReport& report, const std::string& path);

struct SweepSpec {
    enum class Kind { over_n, over_k, over_parameter };
    Kind kind = Kind::over_n;
    std::vector<double> grid;
    std::size_t sets_per_point = 100;
    std::size_t size = 0; // dataset size for over_k / over_parameter sweeps
    std::uint64_t seed = 1;
    // over_parameter only: simulate from this model with theta pinned except
    // for the swept entry.
    std::size_t model = 1; // 1-based
    std::vector<double> pinned_theta;
    std::size_t sweep_index = 0;

    void validate() const;
};

struct SweepPoint {
    double x = 0.0;
    double mean_uncertainty = 0.0;
    double sd = 0.0;
};

/// Mean uncertainty over freshly simulated (optionally shifted or
/// parameter-pinned) validation sets per grid point.
std::vector<SweepPoint> uncertainty_sweep(const arch::EvidentialNetwork& network,
                                          const sim::ComparisonProblem& problem,
                                          const SweepSpec& spec);

void write_sweep_csv(const std::vector<SweepPoint>& points, const std::string& path);

} // namespace evmc::diag

#endif
