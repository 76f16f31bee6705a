#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "evmc/diagnostics.hpp"
#include "evmc/rng.hpp"

using namespace evmc;
using namespace evmc::diag;

TEST_CASE("accuracy") {
    std::vector<ProbabilityVector> all_right{{0.9, 0.1}, {0.2, 0.8}};
    CHECK(accuracy(all_right, {0, 1}) == doctest::Approx(1.0));

    SUBCASE("chance level for random predictions on J=2") {
        std::mt19937_64 rng(1);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::vector<ProbabilityVector> preds;
        std::vector<std::size_t> labels;
        for (int i = 0; i < 20000; ++i) {
            const double p = unit(rng);
            preds.push_back({p, 1.0 - p});
            labels.push_back(unit(rng) < 0.5 ? 0 : 1);
        }
        CHECK(accuracy(preds, labels) == doctest::Approx(0.5).epsilon(0.03));
    }

    SUBCASE("ties break to the lowest index") {
        std::vector<ProbabilityVector> tied{{0.5, 0.5}};
        CHECK(accuracy(tied, {0}) == doctest::Approx(1.0));
        CHECK(accuracy(tied, {1}) == doctest::Approx(0.0));
    }

    CHECK_THROWS_AS(accuracy({{0.5, 0.5}}, {0, 1}), std::invalid_argument);
    CHECK_THROWS_AS(accuracy({}, {}), std::invalid_argument);
}

TEST_CASE("calibration_curve") {
    SUBCASE("labels drawn from the stated probabilities sit on the diagonal") {
        std::mt19937_64 rng(4);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::vector<ProbabilityVector> preds;
        std::vector<std::size_t> labels;
        for (int i = 0; i < 50000; ++i) {
            const double p = unit(rng);
            preds.push_back({p, 1.0 - p});
            labels.push_back(unit(rng) < p ? 0 : 1);
        }
        auto bins = calibration_curve(preds, labels, 10, 0);
        std::size_t total = 0;
        for (const auto& bin : bins) {
            total += bin.count;
            if (bin.count > 100) {
                const double noise =
                    3.0 / std::sqrt(static_cast<double>(bin.count)); // 3 sigma-ish
                CHECK(std::abs(bin.empirical_frequency - bin.mean_predicted) < noise);
            }
        }
        CHECK(total == preds.size());
    }

    SUBCASE("constant prediction 1.0 with half the labels true") {
        std::vector<ProbabilityVector> preds;
        std::vector<std::size_t> labels;
        for (int i = 0; i < 100; ++i) {
            preds.push_back({1.0, 0.0});
            labels.push_back(i % 2 == 0 ? 0 : 1);
        }
        auto bins = calibration_curve(preds, labels, 10, 0);
        CHECK(bins[9].count == 100);
        CHECK(bins[9].mean_predicted == doctest::Approx(1.0));
        CHECK(bins[9].empirical_frequency == doctest::Approx(0.5));
        for (std::size_t k = 0; k < 9; ++k) CHECK(bins[k].count == 0);
    }

    CHECK_THROWS_AS(calibration_curve({}, {}, 10, 0), std::invalid_argument);
}

TEST_CASE("expected_calibration_error") {
    SUBCASE("perfect oracle gives zero") {
        std::vector<ProbabilityVector> preds{{1.0, 0.0}, {0.0, 1.0}, {1.0, 0.0}};
        CHECK(expected_calibration_error(preds, {0, 1, 0}) == doctest::Approx(0.0));
    }

    SUBCASE("constant half-half prediction on balanced data gives zero") {
        std::vector<ProbabilityVector> preds;
        std::vector<std::size_t> labels;
        for (int i = 0; i < 1000; ++i) {
            preds.push_back({0.5, 0.5});
            labels.push_back(i % 2 == 0 ? 0 : 1); // argmax ties to 0, so acc = 0.5
        }
        CHECK(expected_calibration_error(preds, labels) == doctest::Approx(0.0).epsilon(1e-12));
    }

    SUBCASE("known miscalibration: predict 0.9, true rate 0.6") {
        std::vector<ProbabilityVector> preds;
        std::vector<std::size_t> labels;
        for (int i = 0; i < 1000; ++i) {
            preds.push_back({0.9, 0.1});
            labels.push_back(i % 10 < 6 ? 0 : 1);
        }
        CHECK(expected_calibration_error(preds, labels) == doctest::Approx(0.3).epsilon(1e-9));
    }

    SUBCASE("predictions equal to empirical bin frequencies give zero") {
        // confidence c in each bin with exactly c-fraction correct labels
        std::vector<ProbabilityVector> preds;
        std::vector<std::size_t> labels;
        for (double c : {0.55, 0.65, 0.75, 0.85, 0.95}) {
            const int n = 200;
            const int correct = static_cast<int>(std::lround(c * n));
            for (int i = 0; i < n; ++i) {
                preds.push_back({c, 1.0 - c});
                labels.push_back(i < correct ? 0 : 1);
            }
        }
        CHECK(expected_calibration_error(preds, labels) < 0.005);
    }
}

TEST_CASE("overconfidence") {
    SUBCASE("empty above-threshold set") {
        std::vector<ProbabilityVector> preds{{0.6, 0.4}, {0.5, 0.5}};
        CHECK(overconfidence(preds, {0, 1}, 0.95) == doctest::Approx(0.0));
    }

    SUBCASE("all above-threshold predictions correct") {
        std::vector<ProbabilityVector> preds{{0.99, 0.01}, {0.97, 0.03}, {0.6, 0.4}};
        CHECK(overconfidence(preds, {0, 0, 1}, 0.95) == doctest::Approx(0.0));
    }

    SUBCASE("above-threshold accuracy 0.80 at T=0.95 gives 0.15") {
        std::vector<ProbabilityVector> preds;
        std::vector<std::size_t> labels;
        for (int i = 0; i < 10; ++i) {
            preds.push_back({0.99, 0.01});
            labels.push_back(i < 8 ? 0 : 1);
        }
        CHECK(overconfidence(preds, labels, 0.95) == doctest::Approx(0.15).epsilon(1e-12));
    }
}

TEST_CASE("bootstrap") {
    std::mt19937_64 rng(8);

    SUBCASE("constant metric gives a zero-width interval") {
        auto metric = [](std::span<const std::size_t>) { return 0.42; };
        auto summary = bootstrap(metric, 50, 100, rng);
        CHECK(summary.mean == doctest::Approx(0.42));
        CHECK(summary.sd == doctest::Approx(0.0));
        CHECK(summary.lo == doctest::Approx(0.42));
        CHECK(summary.hi == doctest::Approx(0.42));
    }

    SUBCASE("n_boot = 1 on a constant metric returns that constant") {
        auto metric = [](std::span<const std::size_t>) { return -3.5; };
        auto summary = bootstrap(metric, 10, 1, rng);
        CHECK(summary.mean == doctest::Approx(-3.5));
        CHECK(summary.lo == doctest::Approx(-3.5));
        CHECK(summary.hi == doctest::Approx(-3.5));
    }

    SUBCASE("interval covers the true accuracy about 95% of the time") {
        const double p_true = 0.9;
        const std::size_t set_size = 200;
        int covered = 0;
        const int meta_trials = 200;
        for (int t = 0; t < meta_trials; ++t) {
            std::mt19937_64 meta(make_rng(child_seed(999, t)));
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            std::vector<int> correct(set_size);
            for (auto& c : correct) c = unit(meta) < p_true ? 1 : 0;
            auto metric = [&correct](std::span<const std::size_t> idx) {
                double acc = 0.0;
                for (std::size_t i : idx) acc += correct[i];
                return acc / static_cast<double>(idx.size());
            };
            auto summary = bootstrap(metric, set_size, 200, meta);
            if (summary.lo <= p_true && p_true <= summary.hi) covered++;
        }
        const double coverage = static_cast<double>(covered) / meta_trials;
        CHECK(coverage > 0.85);
        CHECK(coverage <= 1.0);
    }

    CHECK_THROWS_AS(bootstrap([](std::span<const std::size_t>) { return 0.0; }, 1, 10, rng),
                    std::invalid_argument);
}

TEST_CASE("uncertainty_sweep smoke test") {
    auto problem = sim::beta_binomial_problem();
    arch::InvariantNetConfig cfg;
    cfg.input_dim = 1;
    cfg.hidden_width = 8;
    cfg.pooled_width = 8;
    cfg.output_count = 2;
    arch::InvariantNetwork net(cfg, 77);

    SweepSpec spec;
    spec.kind = SweepSpec::Kind::over_n;
    spec.grid = {5, 20, 50};
    spec.sets_per_point = 10;
    spec.seed = 4;

    auto points = uncertainty_sweep(net, problem, spec);
    CHECK(points.size() == 3);
    for (const auto& p : points) {
        CHECK(p.mean_uncertainty > 0.0);
        CHECK(p.mean_uncertainty <= 1.0);
    }
    auto again = uncertainty_sweep(net, problem, spec);
    for (std::size_t i = 0; i < points.size(); ++i) {
        CHECK(points[i].mean_uncertainty == again[i].mean_uncertainty);
    }

    SweepSpec bad;
    bad.grid = {};
    CHECK_THROWS_AS(uncertainty_sweep(net, problem, bad), std::invalid_argument);
}
