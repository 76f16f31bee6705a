#include <doctest.h>

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "evmc/config.hpp"
#include "evmc/rng.hpp"
#include "evmc/training.hpp"
#include "oracles.hpp"

using namespace evmc;
using namespace evmc::train;

TEST_CASE("generate_batch follows the sampling recipe") {
    auto problem = sim::beta_binomial_problem();

    SUBCASE("shared size draw, binary data, one-hot labels") {
        TrainingBatch batch = generate_batch(problem, 64, 123);
        CHECK(batch.inputs.shape[0] == 64);
        CHECK(batch.inputs.shape[1] == batch.size);
        CHECK(batch.inputs.shape[2] == 1);
        CHECK(batch.size >= 1);
        CHECK(batch.size <= 100);
        for (double v : batch.inputs.data) CHECK((v == 0.0 || v == 1.0));
        for (std::size_t b = 0; b < 64; ++b) {
            double row_sum = 0.0;
            for (std::size_t j = 0; j < 2; ++j) row_sum += batch.labels.at(b, j);
            CHECK(row_sum == 1.0);
        }
    }

    SUBCASE("degenerate model prior pins every label") {
        auto pinned = problem;
        pinned.model_prior = {1.0, 0.0};
        TrainingBatch batch = generate_batch(pinned, 32, 5);
        for (std::size_t b = 0; b < 32; ++b) {
            CHECK(batch.labels.at(b, 0) == 1.0);
        }
    }

    SUBCASE("label frequencies track the model prior (3-sigma binomial)") {
        std::size_t count_m1 = 0;
        std::size_t total = 0;
        for (std::uint64_t it = 0; it < 400; ++it) {
            TrainingBatch batch = generate_batch(problem, 25, child_seed(77, it));
            for (std::size_t i : batch.model_indices) count_m1 += i == 0 ? 1 : 0;
            total += 25;
        }
        const double p_hat = static_cast<double>(count_m1) / static_cast<double>(total);
        const double sigma = std::sqrt(0.25 / static_cast<double>(total));
        CHECK(std::abs(p_hat - 0.5) < 3.0 * sigma);
    }

    SUBCASE("fan-out across sim threads does not change the batch") {
        TrainingBatch a = generate_batch(problem, 48, 999, 1);
        TrainingBatch b = generate_batch(problem, 48, 999, 4);
        CHECK(a.size == b.size);
        CHECK(a.inputs.data == b.inputs.data);
        CHECK(a.labels.data == b.labels.data);
    }
}

TEST_CASE("regularized_log_loss") {
    nn::Tensor labels({1, 2});
    labels.at(0, 0) = 1.0;

    SUBCASE("uniform evidences give log 2") {
        nn::Tensor alpha({1, 2});
        alpha.data = {1.0, 1.0};
        CHECK(regularized_log_loss(alpha, labels, 0.0).value ==
              doctest::Approx(std::log(2.0)).epsilon(1e-12));
    }

    SUBCASE("confident correct evidence") {
        nn::Tensor alpha({1, 2});
        alpha.data = {9.0, 1.0};
        CHECK(regularized_log_loss(alpha, labels, 0.0).value ==
              doctest::Approx(-std::log(0.9)).epsilon(1e-12));
        // masked evidence is uniform, so the KL term vanishes
        CHECK(regularized_log_loss(alpha, labels, 1.0).value ==
              doctest::Approx(-std::log(0.9)).epsilon(1e-12));
    }

    SUBCASE("gradient matches central differences, lambda > 0") {
        nn::Tensor alpha({2, 3});
        alpha.data = {2.0, 5.0, 1.5, 1.2, 3.0, 7.0};
        nn::Tensor y({2, 3});
        y.at(0, 1) = 1.0;
        y.at(1, 2) = 1.0;
        const LossResult res = regularized_log_loss(alpha, y, 0.7);
        for (std::size_t i = 0; i < alpha.numel(); ++i) {
            auto f = [&](double t) {
                nn::Tensor perturbed = alpha;
                perturbed.data[i] = t;
                return regularized_log_loss(perturbed, y, 0.7).value;
            };
            const double fd = oracles::central_difference(f, alpha.data[i], 1e-6);
            CHECK(res.grad.data[i] == doctest::Approx(fd).epsilon(1e-5));
        }
    }

    SUBCASE("alpha below 1 rejected with the row index") {
        nn::Tensor alpha({1, 2});
        alpha.data = {0.5, 2.0};
        CHECK_THROWS_AS(regularized_log_loss(alpha, labels, 0.0), std::invalid_argument);
    }
}

TEST_CASE("strict propriety of the unregularized loss on a simplex grid") {
    // expected loss under label distribution q, evaluated through the loss
    // implementation itself, must be minimized at the grid point nearest q
    std::mt19937_64 rng(2718);
    std::uniform_real_distribution<double> unit(0.05, 1.0);
    for (int rep = 0; rep < 2; ++rep) {
        double q1 = unit(rng), q2 = unit(rng), q3 = unit(rng);
        const double qs = q1 + q2 + q3;
        const std::vector<double> q{q1 / qs, q2 / qs, q3 / qs};

        const double step = 0.05;
        double best_loss = 1e300;
        std::vector<double> best_p;
        for (double p1 = step; p1 < 1.0; p1 += step) {
            for (double p2 = step; p1 + p2 < 1.0; p2 += step) {
                const double p3 = 1.0 - p1 - p2;
                if (p3 < step / 2) continue;
                const double pmin = std::min({p1, p2, p3});
                nn::Tensor alpha({1, 3});
                alpha.data = {p1 / pmin, p2 / pmin, p3 / pmin};
                double expected = 0.0;
                for (std::size_t j = 0; j < 3; ++j) {
                    nn::Tensor label({1, 3});
                    label.at(0, j) = 1.0;
                    expected += q[j] * regularized_log_loss(alpha, label, 0.0).value;
                }
                if (expected < best_loss) {
                    best_loss = expected;
                    best_p = {p1, p2, p3};
                }
            }
        }
        // nearest grid point to q
        double best_dist = 1e300;
        std::vector<double> nearest;
        for (double p1 = step; p1 < 1.0; p1 += step) {
            for (double p2 = step; p1 + p2 < 1.0; p2 += step) {
                const double p3 = 1.0 - p1 - p2;
                if (p3 < step / 2) continue;
                const double d = (p1 - q[0]) * (p1 - q[0]) + (p2 - q[1]) * (p2 - q[1]) +
                                 (p3 - q[2]) * (p3 - q[2]);
                if (d < best_dist) {
                    best_dist = d;
                    nearest = {p1, p2, p3};
                }
            }
        }
        CHECK(best_p[0] == doctest::Approx(nearest[0]).epsilon(1e-12));
        CHECK(best_p[1] == doctest::Approx(nearest[1]).epsilon(1e-12));
    }
}

TEST_CASE("lambda annealing ramps linearly over the first third") {
    TrainingConfig cfg;
    cfg.iterations = 3000;
    cfg.lambda = 1.0;
    cfg.anneal_lambda = true;
    CHECK(lambda_at(cfg, 0) == doctest::Approx(0.0));
    CHECK(lambda_at(cfg, 500) == doctest::Approx(0.5));
    CHECK(lambda_at(cfg, 1000) == doctest::Approx(1.0));
    CHECK(lambda_at(cfg, 2500) == doctest::Approx(1.0));
    cfg.anneal_lambda = false;
    CHECK(lambda_at(cfg, 1) == doctest::Approx(1.0));
}

TEST_CASE("train on the toy problem") {
    auto problem = sim::beta_binomial_problem(1, 1, 30, 30, 1, 20);
    arch::InvariantNetConfig net_cfg;
    net_cfg.input_dim = 1;
    net_cfg.hidden_width = 8;
    net_cfg.pooled_width = 8;
    net_cfg.output_count = 2;

    SUBCASE("zero iterations returns the initialized network unchanged") {
        arch::InvariantNetwork net(net_cfg, 42);
        const auto before = net.params().flatten_values();
        TrainingConfig cfg;
        cfg.iterations = 0;
        TrainResult result = evmc::train::train(problem, net, cfg);
        CHECK(result.iterations_run == 0);
        CHECK(net.params().flatten_values() == before);
    }

    SUBCASE("loss decreases over a short run and the run is reproducible") {
        TrainingConfig cfg;
        cfg.iterations = 300;
        cfg.batch_size = 16;
        cfg.seed = 7;
        cfg.adam.learning_rate = 1e-3;
        cfg.early_stop = false;

        arch::InvariantNetwork net_a(net_cfg, 42);
        TrainResult run_a = evmc::train::train(problem, net_a, cfg);
        arch::InvariantNetwork net_b(net_cfg, 42);
        TrainResult run_b = evmc::train::train(problem, net_b, cfg);

        CHECK(run_a.iterations_run == 300);
        double head = 0.0, tail = 0.0;
        for (std::size_t i = 0; i < 50; ++i) head += run_a.trace[i].loss;
        for (std::size_t i = 250; i < 300; ++i) tail += run_a.trace[i].loss;
        CHECK(tail < head);

        CHECK(net_a.params().flatten_values() == net_b.params().flatten_values());
        for (std::size_t i = 0; i < run_a.trace.size(); ++i) {
            CHECK(run_a.trace[i].loss == run_b.trace[i].loss);
        }
    }

    SUBCASE("kind mismatch rejected") {
        arch::SequenceNetConfig seq_cfg;
        seq_cfg.input_dim = 1;
        seq_cfg.conv = {{4, 3, 1}};
        seq_cfg.head = {8};
        seq_cfg.output_count = 2;
        arch::SequenceNetwork seq(seq_cfg, 1);
        TrainingConfig cfg;
        CHECK_THROWS_AS(evmc::train::train(problem, seq, cfg), std::invalid_argument);
    }
}

TEST_CASE("infer") {
    auto problem = sim::beta_binomial_problem();
    arch::InvariantNetConfig net_cfg;
    net_cfg.input_dim = 1;
    net_cfg.hidden_width = 8;
    net_cfg.pooled_width = 8;
    net_cfg.output_count = 2;
    arch::InvariantNetwork net(net_cfg, 11);

    std::mt19937_64 rng(5);
    std::vector<Dataset> datasets;
    for (int i = 0; i < 10; ++i) {
        datasets.push_back(sim::simulate_beta_binomial(1, 1, 20 + i, rng));
    }

    SUBCASE("pure function of the checkpoint") {
        const auto params_before = net.params().flatten_values();
        auto first = infer(net, datasets);
        auto second = infer(net, datasets);
        CHECK(net.params().flatten_values() == params_before);
        for (std::size_t i = 0; i < first.size(); ++i) {
            CHECK(first[i].first.alpha == second[i].first.alpha);
            CHECK(first[i].second.probs == second[i].second.probs);
        }
        for (const auto& [ev, post] : first) {
            CHECK(post.uncertainty > 0.0);
            CHECK(post.uncertainty <= 1.0);
        }
    }

    SUBCASE("kind and width mismatches rejected") {
        Dataset wrong_kind = datasets[0];
        wrong_kind.kind = DataKind::time_series;
        CHECK_THROWS_AS(infer(net, {wrong_kind}), std::invalid_argument);
        Dataset wrong_width = Dataset::make(5, 2, DataKind::exchangeable);
        CHECK_THROWS_AS(infer(net, {wrong_width}), std::invalid_argument);
    }

    SUBCASE("amortized inference is fast: 5000 datasets at N=100 under 60 s") {
        std::vector<Dataset> many;
        many.reserve(5000);
        std::mt19937_64 gen(9);
        for (int i = 0; i < 5000; ++i) {
            many.push_back(sim::simulate_beta_binomial(1, 1, 100, gen));
        }
        const auto t0 = std::chrono::steady_clock::now();
        auto results = infer(net, many);
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        CHECK(results.size() == 5000);
        CHECK(secs < 60.0);
    }
}
