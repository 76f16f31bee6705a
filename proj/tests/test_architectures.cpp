#include <doctest.h>

#include <algorithm>
#include <stdexcept>
#include <cmath>
#include <numeric>
#include <random>

#include "evmc/architectures.hpp"
#include "evmc/gradcheck.hpp"
#include "evmc/training.hpp"

using namespace evmc;
using arch::InvariantNetConfig;
using arch::InvariantNetwork;
using arch::SequenceNetConfig;
using arch::SequenceNetwork;
using nn::Tape;
using nn::Tensor;

namespace {

Tensor random_input(std::size_t batch, std::size_t n, std::size_t d, std::uint64_t seed,
                    double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-scale, scale);
    Tensor x({batch, n, d});
    for (double& v : x.data) v = dist(rng);
    return x;
}

Tensor permute_rows(const Tensor& x, const std::vector<std::size_t>& perm) {
    Tensor y = x;
    const std::size_t n = x.shape[1], d = x.shape[2];
    for (std::size_t b = 0; b < x.shape[0]; ++b) {
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t c = 0; c < d; ++c) {
                y.at(b, j, c) = x.at(b, perm[j], c);
            }
        }
    }
    return y;
}

} // namespace

TEST_CASE("equivariant composition: permuting rows permutes outputs") {
    // z_i = f3(x_i, z~) built from tape primitives with random weights
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> dist(-0.7, 0.7);
    auto rand_tensor = [&](std::vector<std::size_t> shape) {
        Tensor t(std::move(shape));
        for (double& v : t.data) v = dist(rng);
        return t;
    };
    const std::size_t d = 3, w = 5, n = 6;
    Tensor w2 = rand_tensor({d, w}), b2 = rand_tensor({w});
    Tensor w1 = rand_tensor({w, w}), b1 = rand_tensor({w});
    Tensor w3 = rand_tensor({d + w, w}), b3 = rand_tensor({w});

    auto module = [&](Tape& t, const Tensor& input) {
        auto x = t.leaf(input);
        auto e = t.dense(x, t.leaf(w2), t.leaf(b2), nn::Activation::elu);
        auto zt = t.dense(t.sum_over_set(e), t.leaf(w1), t.leaf(b1), nn::Activation::elu);
        auto cat = t.concat_last(x, t.broadcast_axis1(zt, input.shape[1]));
        return t.dense(cat, t.leaf(w3), t.leaf(b3), nn::Activation::elu);
    };

    Tensor x = random_input(2, n, d, 42);
    std::vector<std::size_t> perm{4, 2, 0, 5, 1, 3};
    Tape t1, t2;
    auto y = module(t1, x);
    auto y_perm = module(t2, permute_rows(x, perm));
    for (std::size_t b = 0; b < 2; ++b) {
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t c = 0; c < w; ++c) {
                CHECK(t2.value(y_perm).at(b, j, c) ==
                      doctest::Approx(t1.value(y).at(b, perm[j], c)).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("invariant network is permutation invariant") {
    InvariantNetConfig cfg;
    cfg.input_dim = 2;
    cfg.hidden_width = 16;
    cfg.pooled_width = 16;
    cfg.output_count = 3;
    InvariantNetwork net(cfg, 2024);

    Tensor x = random_input(2, 12, 2, 7);
    const Tensor base = net.alpha(x);
    std::mt19937_64 rng(8);
    std::vector<std::size_t> perm(12);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (int rep = 0; rep < 100; ++rep) {
        std::shuffle(perm.begin(), perm.end(), rng);
        const Tensor permuted = net.alpha(permute_rows(x, perm));
        for (std::size_t i = 0; i < base.numel(); ++i) {
            CHECK(std::abs(permuted.data[i] - base.data[i]) /
                      std::max(1.0, std::abs(base.data[i])) <
                  1e-9);
        }
    }
}

TEST_CASE("invariant network outputs valid evidence vectors") {
    InvariantNetConfig cfg;
    cfg.input_dim = 1;
    cfg.hidden_width = 8;
    cfg.pooled_width = 8;
    cfg.output_count = 2;
    InvariantNetwork net(cfg, 5);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Tensor x = random_input(3, 1 + seed % 20, 1, seed, 50.0);
        const Tensor alpha = net.alpha(x);
        for (double a : alpha.data) {
            CHECK(a >= 1.0);
            CHECK(std::isfinite(a));
        }
    }
    SUBCASE("empty set rejected") {
        Tensor empty({1, 0, 1});
        CHECK_THROWS_AS(net.alpha(empty), std::invalid_argument);
    }
}

TEST_CASE("sequence network basics") {
    SequenceNetConfig cfg;
    cfg.input_dim = 2;
    cfg.lstm_hidden = 6;
    cfg.conv = {{4, 3, 1}, {5, 3, 2}};
    cfg.head = {8};
    cfg.output_count = 2;
    SequenceNetwork net(cfg, 99);

    SUBCASE("constant-zero series with a zeroed head maps to all-ones evidence") {
        for (std::size_t i = 0; i < net.params().count(); ++i) {
            auto& p = net.params().param(i);
            if (p.name == "head.out.W" || p.name == "head.out.b") {
                for (double& v : p.value.data) v = 0.0;
            }
        }
        Tensor x({2, 12, 2});
        const Tensor alpha = net.alpha(x);
        for (double a : alpha.data) CHECK(a == doctest::Approx(1.0));
    }

    SUBCASE("different series lengths both yield valid evidences") {
        for (std::size_t n : {7, 31}) {
            Tensor x = random_input(2, n, 2, n);
            const Tensor alpha = net.alpha(x);
            for (double a : alpha.data) {
                CHECK(a >= 1.0);
                CHECK(std::isfinite(a));
            }
        }
    }

    SUBCASE("series shorter than the receptive minimum rejected") {
        CHECK(net.min_rows() == 5); // receptive footprint of the conv stack
        Tensor x = random_input(1, 4, 2, 3);
        CHECK_THROWS_AS(net.alpha(x), std::invalid_argument);
    }
}

namespace {

/// End-to-end finite-difference check of d(loss)/d(parameters).
double end_to_end_gradcheck(arch::EvidentialNetwork& net, const Tensor& x,
                            const Tensor& labels, double lambda, std::uint64_t seed) {
    auto& store = net.params();
    std::vector<double> flat = store.flatten_values();

    Tape tape;
    auto params = net.bind(tape, true);
    auto alpha = net.forward(tape, tape.leaf(x, false), params);
    auto loss = train::regularized_log_loss(tape.value(alpha), labels, lambda);
    tape.backward(alpha, loss.grad);
    std::vector<double> analytic;
    for (auto id : params) {
        const auto& g = tape.grad(id).data;
        analytic.insert(analytic.end(), g.begin(), g.end());
    }

    auto f = [&](std::span<const double> p) {
        std::vector<double> values(p.begin(), p.end());
        store.load_values(values);
        return train::regularized_log_loss(net.alpha(x), labels, lambda).value;
    };
    const double err = nn::gradient_check(f, flat, analytic, {1e-5, 400, seed});
    store.load_values(flat);
    return err;
}

} // namespace

TEST_CASE("end-to-end gradient checks at desk scale") {
    Tensor labels({2, 3});
    labels.at(0, 1) = 1.0;
    labels.at(1, 0) = 1.0;

    SUBCASE("invariant network with regularized loss") {
        for (std::uint64_t seed = 1; seed <= 6; ++seed) {
            InvariantNetConfig cfg;
            cfg.input_dim = 2;
            cfg.equivariant_modules = 2;
            cfg.hidden_width = 6;
            cfg.pooled_width = 5;
            cfg.output_count = 3;
            InvariantNetwork net(cfg, seed);
            // push the head away from the clamp so central differences stay
            // on one side of the kink
            for (std::size_t i = 0; i < net.params().count(); ++i) {
                if (net.params().param(i).name == "final.f1.1.b") {
                    for (double& v : net.params().param(i).value.data) v = 3.0;
                }
            }
            Tensor x = random_input(2, 5, 2, seed * 13);
            const Tensor alpha = net.alpha(x);
            REQUIRE(*std::min_element(alpha.data.begin(), alpha.data.end()) > 1.05);
            CHECK(end_to_end_gradcheck(net, x, labels, 0.5, seed) < 1e-4);
        }
    }

    SUBCASE("sequence network with regularized loss") {
        for (std::uint64_t seed = 1; seed <= 6; ++seed) {
            SequenceNetConfig cfg;
            cfg.input_dim = 2;
            cfg.lstm_hidden = 5;
            cfg.conv = {{4, 2, 1}};
            cfg.head = {6};
            cfg.output_count = 3;
            SequenceNetwork net(cfg, seed);
            for (std::size_t i = 0; i < net.params().count(); ++i) {
                if (net.params().param(i).name == "head.out.b") {
                    for (double& v : net.params().param(i).value.data) v = 3.0;
                }
            }
            Tensor x = random_input(2, 6, 2, seed * 29, 0.8);
            const Tensor alpha = net.alpha(x);
            REQUIRE(*std::min_element(alpha.data.begin(), alpha.data.end()) > 1.05);
            CHECK(end_to_end_gradcheck(net, x, labels, 0.5, seed) < 1e-4);
        }
    }
}
