#include "evmc/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "evmc/rng.hpp"
#include "evmc/training.hpp"

namespace evmc::diag {

std::size_t argmax_model(const ProbabilityVector& probs) {
    if (probs.empty()) throw std::invalid_argument("argmax_model: empty vector");
    std::size_t best = 0;
    for (std::size_t j = 1; j < probs.size(); ++j) {
        if (probs[j] > probs[best]) best = j;
    }
    return best;
}

double accuracy(const std::vector<ProbabilityVector>& predictions,
                const std::vector<std::size_t>& labels) {
    if (predictions.empty()) throw std::invalid_argument("accuracy: empty evaluation set");
    if (predictions.size() != labels.size()) {
        throw std::invalid_argument("accuracy: prediction/label length mismatch");
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (argmax_model(predictions[i]) == labels[i]) correct++;
    }
    return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

namespace {

std::size_t bin_of(double p, std::size_t n_bins) {
    auto k = static_cast<std::size_t>(p * static_cast<double>(n_bins));
    return std::min(k, n_bins - 1);
}

} // namespace

std::vector<CalibrationBin> calibration_curve(const std::vector<ProbabilityVector>& predictions,
                                              const std::vector<std::size_t>& labels,
                                              std::size_t n_bins, std::size_t model_j) {
    if (predictions.empty()) throw std::invalid_argument("calibration_curve: empty input");
    if (predictions.size() != labels.size()) {
        throw std::invalid_argument("calibration_curve: length mismatch");
    }
    if (n_bins == 0) throw std::invalid_argument("calibration_curve: n_bins >= 1");
    std::vector<CalibrationBin> bins(n_bins);
    for (std::size_t k = 0; k < n_bins; ++k) {
        bins[k].bin_center = (static_cast<double>(k) + 0.5) / static_cast<double>(n_bins);
    }
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (model_j >= predictions[i].size()) {
            throw std::invalid_argument("calibration_curve: model index out of range");
        }
        const double p = predictions[i][model_j];
        CalibrationBin& bin = bins[bin_of(p, n_bins)];
        bin.count++;
        bin.mean_predicted += p;
        if (labels[i] == model_j) bin.empirical_frequency += 1.0;
    }
    for (auto& bin : bins) {
        if (bin.count > 0) {
            bin.mean_predicted /= static_cast<double>(bin.count);
            bin.empirical_frequency /= static_cast<double>(bin.count);
        }
    }
    return bins;
}

double expected_calibration_error(const std::vector<ProbabilityVector>& predictions,
                                  const std::vector<std::size_t>& labels,
                                  std::size_t n_bins) {
    if (predictions.empty()) {
        throw std::invalid_argument("expected_calibration_error: empty input");
    }
    if (predictions.size() != labels.size()) {
        throw std::invalid_argument("expected_calibration_error: length mismatch");
    }
    struct Cell {
        double conf = 0.0;
        double acc = 0.0;
        std::size_t count = 0;
    };
    std::vector<Cell> cells(n_bins);
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const std::size_t pick = argmax_model(predictions[i]);
        const double conf = predictions[i][pick];
        Cell& cell = cells[bin_of(conf, n_bins)];
        cell.count++;
        cell.conf += conf;
        if (pick == labels[i]) cell.acc += 1.0;
    }
    double ece = 0.0;
    const double total = static_cast<double>(predictions.size());
    for (const auto& cell : cells) {
        if (cell.count == 0) continue;
        const double n = static_cast<double>(cell.count);
        ece += (n / total) * std::abs(cell.acc / n - cell.conf / n);
    }
    return ece;
}

double overconfidence(const std::vector<ProbabilityVector>& predictions,
                      const std::vector<std::size_t>& labels, double threshold) {
    if (predictions.size() != labels.size()) {
        throw std::invalid_argument("overconfidence: length mismatch");
    }
    std::size_t above = 0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const std::size_t pick = argmax_model(predictions[i]);
        if (predictions[i][pick] > threshold) {
            above++;
            if (pick == labels[i]) correct++;
        }
    }
    if (above == 0) return 0.0;
    const double acc = static_cast<double>(correct) / static_cast<double>(above);
    return std::max(0.0, threshold - acc);
}

BootstrapSummary bootstrap(const std::function<double(std::span<const std::size_t>)>& metric,
                           std::size_t set_size, std::size_t n_boot, std::mt19937_64& rng) {
    if (set_size < 2) throw std::invalid_argument("bootstrap: set size >= 2 required");
    if (n_boot == 0) throw std::invalid_argument("bootstrap: n_boot >= 1 required");
    std::uniform_int_distribution<std::size_t> pick(0, set_size - 1);
    std::vector<double> values(n_boot);
    std::vector<std::size_t> indices(set_size);
    for (std::size_t b = 0; b < n_boot; ++b) {
        for (auto& idx : indices) idx = pick(rng);
        values[b] = metric(indices);
    }
    BootstrapSummary summary;
    summary.mean = std::accumulate(values.begin(), values.end(), 0.0) /
                   static_cast<double>(n_boot);
    double ss = 0.0;
    for (double v : values) ss += (v - summary.mean) * (v - summary.mean);
    summary.sd = n_boot > 1 ? std::sqrt(ss / static_cast<double>(n_boot - 1)) : 0.0;

    std::sort(values.begin(), values.end());
    auto quantile = [&values](double q) {
        const double pos = q * static_cast<double>(values.size() - 1);
        const auto lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, values.size() - 1);
        const double w = pos - static_cast<double>(lo);
        return (1.0 - w) * values[lo] + w * values[hi];
    };
    summary.lo = quantile(0.025);
    summary.hi = quantile(0.975);
    return summary;
}

namespace {

struct Evaluation {
    std::vector<ProbabilityVector> predictions;
    std::vector<std::size_t> labels;
    std::vector<double> uncertainties;
};

Evaluation simulate_and_infer(const arch::EvidentialNetwork& network,
                              const sim::ComparisonProblem& problem, std::size_t count,
                              std::size_t size, std::uint64_t seed) {
    std::vector<Dataset> datasets;
    datasets.reserve(count);
    Evaluation eval;
    for (std::size_t i = 0; i < count; ++i) {
        std::mt19937_64 rng = make_rng(child_seed(seed, i));
        const std::size_t j = problem.draw_model(rng);
        auto theta = problem.models[j].sample_prior(rng);
        datasets.push_back(problem.models[j].simulate(theta, size, rng));
        eval.labels.push_back(j);
    }
    auto results = train::infer(network, datasets);
    eval.predictions.reserve(count);
    eval.uncertainties.reserve(count);
    for (auto& [ev, post] : results) {
        eval.predictions.push_back(post.probs);
        eval.uncertainties.push_back(post.uncertainty);
    }
    return eval;
}

} // namespace

CalibrationReport evaluate_checkpoint(const arch::EvidentialNetwork& network,
                                      const sim::ComparisonProblem& problem,
                                      std::size_t count, std::size_t size,
                                      std::uint64_t seed, std::size_t n_bins,
                                      std::size_t n_boot) {
    Evaluation eval = simulate_and_infer(network, problem, count, size, seed);
    CalibrationReport report;
    report.evaluation_size = count;
    report.n_bins = n_bins;
    report.accuracy = accuracy(eval.predictions, eval.labels);
    report.ece = expected_calibration_error(eval.predictions, eval.labels, n_bins);
    report.overconfidence = overconfidence(eval.predictions, eval.labels, 0.95);
    report.mean_uncertainty =
        std::accumulate(eval.uncertainties.begin(), eval.uncertainties.end(), 0.0) /
        static_cast<double>(count);

    std::mt19937_64 rng = make_rng(child_seed(seed, 0xb007));
    report.accuracy_bootstrap = bootstrap(
        [&eval](std::span<const std::size_t> idx) {
            std::size_t correct = 0;
            for (std::size_t i : idx) {
                if (argmax_model(eval.predictions[i]) == eval.labels[i]) correct++;
            }
            return static_cast<double>(correct) / static_cast<double>(idx.size());
        },
        count, n_boot, rng);

    for (std::size_t j = 0; j < problem.model_count(); ++j) {
        report.per_model_curves.push_back(
            calibration_curve(eval.predictions, eval.labels, n_bins, j));
    }
    return report;
}

void write_report_json(const CalibrationReport& report, const std::string& path,
                       const std::string& config_echo, std::uint64_t seed) {
    nlohmann::json j;
    j["evaluation_size"] = report.evaluation_size;
    j["n_bins"] = report.n_bins;
    j["accuracy"] = report.accuracy;
    j["ece"] = report.ece;
    j["overconfidence"] = report.overconfidence;
    j["overconfidence_threshold"] = report.overconfidence_threshold;
    j["mean_uncertainty"] = report.mean_uncertainty;
    j["accuracy_bootstrap"] = {{"mean", report.accuracy_bootstrap.mean},
                               {"sd", report.accuracy_bootstrap.sd},
                               {"lo", report.accuracy_bootstrap.lo},
                               {"hi", report.accuracy_bootstrap.hi}};
    j["seed"] = seed;
    if (!config_echo.empty()) {
        j["config"] = nlohmann::json::parse(config_echo);
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << j.dump(2) << "\n";
}

void write_curves_csv(const CalibrationReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "model,bin_center,mean_predicted,empirical_frequency,count\n";
    char buf[160];
    for (std::size_t j = 0; j < report.per_model_curves.size(); ++j) {
        for (const auto& bin : report.per_model_curves[j]) {
            std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%zu\n", j + 1,
                          bin.bin_center, bin.mean_predicted, bin.empirical_frequency,
                          bin.count);
            out << buf;
        }
    }
}

void SweepSpec::validate() const {
    if (grid.empty()) throw std::invalid_argument("SweepSpec: empty grid");
    if (sets_per_point == 0) throw std::invalid_argument("SweepSpec: sets_per_point >= 1");
    if (kind == Kind::over_parameter) {
        if (model == 0) throw std::invalid_argument("SweepSpec: model is 1-based");
        if (sweep_index >= pinned_theta.size()) {
            throw std::invalid_argument("SweepSpec: sweep_index out of range");
        }
    }
}

std::vector<SweepPoint> uncertainty_sweep(const arch::EvidentialNetwork& network,
                                          const sim::ComparisonProblem& problem,
                                          const SweepSpec& spec) {
    spec.validate();
    problem.validate();
    std::vector<SweepPoint> points;
    points.reserve(spec.grid.size());

    for (std::size_t g = 0; g < spec.grid.size(); ++g) {
        const double x = spec.grid[g];
        std::vector<Dataset> datasets;
        datasets.reserve(spec.sets_per_point);
        const std::uint64_t point_seed = child_seed(spec.seed, g);
        const std::size_t size = spec.size > 0 ? spec.size : problem.size_max;
        for (std::size_t i = 0; i < spec.sets_per_point; ++i) {
            std::mt19937_64 rng = make_rng(child_seed(point_seed, i));
            switch (spec.kind) {
                case SweepSpec::Kind::over_n: {
                    const std::size_t j = problem.draw_model(rng);
                    auto theta = problem.models[j].sample_prior(rng);
                    datasets.push_back(problem.models[j].simulate(
                        theta, static_cast<std::size_t>(x), rng));
                    break;
                }
                case SweepSpec::Kind::over_k: {
                    const std::size_t j = problem.draw_model(rng);
                    auto theta = problem.models[j].sample_prior(rng);
                    Dataset ds = problem.models[j].simulate(theta, size, rng);
                    datasets.push_back(sim::shift_rts(ds, x));
                    break;
                }
                case SweepSpec::Kind::over_parameter: {
                    std::vector<double> theta = spec.pinned_theta;
                    theta[spec.sweep_index] = x;
                    datasets.push_back(
                        problem.models[spec.model - 1].simulate(theta, size, rng));
                    break;
                }
            }
        }
        auto results = train::infer(network, datasets);
        double mean = 0.0;
        for (const auto& [ev, post] : results) mean += post.uncertainty;
        mean /= static_cast<double>(results.size());
        double ss = 0.0;
        for (const auto& [ev, post] : results) {
            ss += (post.uncertainty - mean) * (post.uncertainty - mean);
        }
        const double sd = results.size() > 1
                              ? std::sqrt(ss / static_cast<double>(results.size() - 1))
                              : 0.0;
        points.push_back({x, mean, sd});
    }
    return points;
}

void write_sweep_csv(const std::vector<SweepPoint>& points, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "x,mean_uncertainty,sd\n";
    char buf[120];
    for (const auto& p : points) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", p.x, p.mean_uncertainty, p.sd);
        out << buf;
    }
}

} // namespace evmc::diag
