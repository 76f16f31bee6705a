#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <random>

#include "evmc/gradcheck.hpp"
#include "evmc/optimizer.hpp"
#include "evmc/rng.hpp"
#include "evmc/tape.hpp"

using namespace evmc;
using nn::Activation;
using nn::Tape;
using nn::Tensor;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, std::mt19937_64& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> dist(-scale, scale);
    Tensor t(std::move(shape));
    for (double& v : t.data) v = dist(rng);
    return t;
}

std::vector<double> flatten(const std::vector<Tensor>& tensors) {
    std::vector<double> flat;
    for (const auto& t : tensors) flat.insert(flat.end(), t.data.begin(), t.data.end());
    return flat;
}

void unflatten(const std::vector<double>& flat, std::vector<Tensor>& tensors) {
    std::size_t off = 0;
    for (auto& t : tensors) {
        std::copy(flat.begin() + off, flat.begin() + off + t.numel(), t.data.begin());
        off += t.numel();
    }
}

/// Max relative error between tape gradients and central differences of the
/// projected scalar sum(r * output).
double check_graph_gradients(
    std::vector<Tensor> leaves,
    const std::function<Tape::NodeId(Tape&, const std::vector<Tape::NodeId>&)>& build,
    std::uint64_t seed) {
    Tape probe;
    std::vector<Tape::NodeId> ids;
    for (const auto& t : leaves) ids.push_back(probe.leaf(t, true));
    const Tape::NodeId out = build(probe, ids);
    std::mt19937_64 rng(seed);
    Tensor proj = random_tensor(probe.value(out).shape, rng);

    probe.backward(out, proj);
    std::vector<Tensor> grads;
    for (Tape::NodeId id : ids) grads.push_back(probe.grad(id));
    std::vector<double> analytic = flatten(grads);

    std::vector<double> flat = flatten(leaves);
    auto f = [&](std::span<const double> params) {
        std::vector<double> p(params.begin(), params.end());
        unflatten(p, leaves);
        Tape tape;
        std::vector<Tape::NodeId> nids;
        for (const auto& t : leaves) nids.push_back(tape.leaf(t, false));
        const Tape::NodeId o = build(tape, nids);
        const Tensor& val = tape.value(o);
        double s = 0.0;
        for (std::size_t i = 0; i < val.numel(); ++i) s += proj.data[i] * val.data[i];
        return s;
    };
    return nn::gradient_check(f, flat, analytic, {1e-5, 0, seed});
}

} // namespace

TEST_CASE("dense layer forward") {
    Tape tape;
    std::mt19937_64 rng(1);
    Tensor x = random_tensor({3, 4}, rng);

    SUBCASE("zero weights, constant bias") {
        Tensor w({4, 2});
        Tensor b({2});
        b.data = {1.5, -2.0};
        auto y = tape.dense(tape.leaf(x), tape.leaf(w), tape.leaf(b), Activation::linear);
        for (std::size_t r = 0; r < 3; ++r) {
            CHECK(tape.value(y).at(r, 0) == doctest::Approx(1.5));
            CHECK(tape.value(y).at(r, 1) == doctest::Approx(-2.0));
        }
    }

    SUBCASE("identity weights") {
        Tensor w({4, 4});
        for (std::size_t i = 0; i < 4; ++i) w.at(i, i) = 1.0;
        Tensor b({4});
        auto y = tape.dense(tape.leaf(x), tape.leaf(w), tape.leaf(b), Activation::linear);
        for (std::size_t i = 0; i < x.numel(); ++i) {
            CHECK(tape.value(y).data[i] == doctest::Approx(x.data[i]));
        }
    }

    SUBCASE("shape mismatch rejected") {
        Tensor w({5, 2});
        Tensor b({2});
        CHECK_THROWS_AS(tape.dense(tape.leaf(x), tape.leaf(w), tape.leaf(b), Activation::linear),
                        std::invalid_argument);
    }
}

TEST_CASE("dense gradients match finite differences over 20 seeds") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        std::mt19937_64 rng(seed);
        const std::size_t batch = 1 + seed % 3, in = 2 + seed % 3, out = 1 + seed % 4;
        std::vector<Tensor> leaves{random_tensor({batch, in}, rng),
                                   random_tensor({in, out}, rng), random_tensor({out}, rng)};
        const double err = check_graph_gradients(
            leaves,
            [](Tape& t, const std::vector<Tape::NodeId>& ids) {
                return t.dense(ids[0], ids[1], ids[2], Activation::elu);
            },
            seed);
        CHECK(err < 1e-4);
    }
}

TEST_CASE("lstm forward") {
    const std::size_t hidden = 3;

    SUBCASE("all-zero parameters give zero output") {
        Tape tape;
        std::mt19937_64 rng(2);
        Tensor x = random_tensor({2, 4, 2}, rng);
        auto y = tape.lstm(tape.leaf(x), tape.leaf(Tensor({2, 4 * hidden})),
                           tape.leaf(Tensor({hidden, 4 * hidden})),
                           tape.leaf(Tensor({4 * hidden})));
        for (double v : tape.value(y).data) CHECK(v == doctest::Approx(0.0));
    }

    SUBCASE("deterministic replay") {
        std::mt19937_64 rng(3);
        Tensor x = random_tensor({1, 5, 2}, rng);
        Tensor wx = random_tensor({2, 4 * hidden}, rng);
        Tensor wh = random_tensor({hidden, 4 * hidden}, rng);
        Tensor b = random_tensor({4 * hidden}, rng);
        Tape t1, t2;
        auto y1 = t1.lstm(t1.leaf(x), t1.leaf(wx), t1.leaf(wh), t1.leaf(b));
        auto y2 = t2.lstm(t2.leaf(x), t2.leaf(wx), t2.leaf(wh), t2.leaf(b));
        CHECK(t1.value(y1).data == t2.value(y2).data);
    }

    SUBCASE("gradients through time match finite differences") {
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            std::mt19937_64 rng(seed);
            const std::size_t d = 1 + seed % 2;
            const std::size_t n = 1 + seed % 4;
            std::vector<Tensor> leaves{random_tensor({2, n, d}, rng, 0.8),
                                       random_tensor({d, 4 * hidden}, rng, 0.6),
                                       random_tensor({hidden, 4 * hidden}, rng, 0.6),
                                       random_tensor({4 * hidden}, rng, 0.4)};
            const double err = check_graph_gradients(
                leaves,
                [](Tape& t, const std::vector<Tape::NodeId>& ids) {
                    return t.lstm(ids[0], ids[1], ids[2], ids[3]);
                },
                seed);
            CHECK(err < 1e-4);
        }
    }
}

TEST_CASE("conv1d forward") {
    SUBCASE("box filter gives moving sums") {
        Tape tape;
        Tensor x({1, 5, 1});
        x.data = {1, 2, 3, 4, 5};
        Tensor k({3, 1, 1});
        k.data = {1, 1, 1};
        auto y = tape.conv1d(tape.leaf(x), tape.leaf(k), tape.leaf(Tensor({1})), 1);
        CHECK(tape.value(y).shape == std::vector<std::size_t>{1, 3, 1});
        CHECK(tape.value(y).data[0] == doctest::Approx(6.0));
        CHECK(tape.value(y).data[1] == doctest::Approx(9.0));
        CHECK(tape.value(y).data[2] == doctest::Approx(12.0));
    }

    SUBCASE("kernel = stride = N collapses to one step") {
        Tape tape;
        std::mt19937_64 rng(5);
        Tensor x = random_tensor({2, 4, 2}, rng);
        Tensor k = random_tensor({4, 2, 3}, rng);
        auto y = tape.conv1d(tape.leaf(x), tape.leaf(k), tape.leaf(Tensor({3})), 4);
        CHECK(tape.value(y).shape == std::vector<std::size_t>{2, 1, 3});
    }

    SUBCASE("series shorter than kernel rejected") {
        Tape tape;
        Tensor x({1, 2, 1});
        Tensor k({3, 1, 1});
        CHECK_THROWS_AS(tape.conv1d(tape.leaf(x), tape.leaf(k), tape.leaf(Tensor({1})), 1),
                        std::invalid_argument);
    }

    SUBCASE("gradients match finite differences") {
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            std::mt19937_64 rng(seed);
            const std::size_t n = 4 + seed % 3;
            const std::size_t k = 2 + seed % 2;
            const std::size_t stride = 1 + seed % 2;
            std::vector<Tensor> leaves{random_tensor({2, n, 2}, rng),
                                       random_tensor({k, 2, 3}, rng),
                                       random_tensor({3}, rng)};
            const double err = check_graph_gradients(
                leaves,
                [stride](Tape& t, const std::vector<Tape::NodeId>& ids) {
                    return t.conv1d(ids[0], ids[1], ids[2], stride);
                },
                seed);
            CHECK(err < 1e-4);
        }
    }
}

TEST_CASE("pooling") {
    SUBCASE("single element is the identity for both modes") {
        Tape tape;
        std::mt19937_64 rng(6);
        Tensor x = random_tensor({2, 1, 3}, rng);
        auto s = tape.sum_over_set(tape.leaf(x));
        auto m = tape.mean_over_time(tape.leaf(x));
        for (std::size_t i = 0; i < 6; ++i) {
            CHECK(tape.value(s).data[i] == doctest::Approx(x.data[i]));
            CHECK(tape.value(m).data[i] == doctest::Approx(x.data[i]));
        }
    }

    SUBCASE("sum pooling commutes with row permutation") {
        std::mt19937_64 rng(7);
        Tensor x = random_tensor({1, 6, 3}, rng);
        Tensor shuffled = x;
        std::vector<std::size_t> perm{3, 0, 5, 1, 4, 2};
        for (std::size_t j = 0; j < 6; ++j) {
            for (std::size_t c = 0; c < 3; ++c) shuffled.at(0, j, c) = x.at(0, perm[j], c);
        }
        Tape t1, t2;
        auto s1 = t1.sum_over_set(t1.leaf(x));
        auto s2 = t2.sum_over_set(t2.leaf(shuffled));
        for (std::size_t c = 0; c < 3; ++c) {
            CHECK(std::abs(t1.value(s1).at(0, c) - t2.value(s2).at(0, c)) < 1e-12);
        }
    }

    SUBCASE("empty axis rejected") {
        Tape tape;
        Tensor x({2, 0, 3});
        CHECK_THROWS_AS(tape.sum_over_set(tape.leaf(x)), std::invalid_argument);
        CHECK_THROWS_AS(tape.mean_over_time(tape.leaf(x)), std::invalid_argument);
    }

    SUBCASE("gradients match finite differences") {
        std::mt19937_64 rng(8);
        std::vector<Tensor> leaves{random_tensor({2, 4, 3}, rng)};
        CHECK(check_graph_gradients(
                  leaves,
                  [](Tape& t, const std::vector<Tape::NodeId>& ids) {
                      return t.sum_over_set(ids[0]);
                  },
                  8) < 1e-6);
        CHECK(check_graph_gradients(
                  leaves,
                  [](Tape& t, const std::vector<Tape::NodeId>& ids) {
                      return t.mean_over_time(ids[0]);
                  },
                  9) < 1e-6);
    }
}

TEST_CASE("evidence head") {
    Tape tape;
    Tensor x({1, 3});
    x.data = {0.2, -3.0, 5.0};
    auto y = tape.evidence_head(tape.leaf(x));
    CHECK(std::vector<double>(tape.value(y).data.begin(), tape.value(y).data.end()) ==
          std::vector<double>{1.0, 1.0, 5.0});

    Tensor ones({1, 2});
    ones.data = {1.0, 1.0};
    auto y2 = tape.evidence_head(tape.leaf(ones));
    CHECK(std::vector<double>(tape.value(y2).data.begin(), tape.value(y2).data.end()) ==
          std::vector<double>{1.0, 1.0});

    SUBCASE("gradient check away from the kink") {
        std::mt19937_64 rng(10);
        Tensor far({2, 3});
        for (double& v : far.data) {
            std::uniform_real_distribution<double> dist(0.2, 2.0);
            double draw = dist(rng);
            v = draw > 1.0 ? draw + 0.1 : draw - 0.3; // keep |x - 1| > 0.1
        }
        std::vector<Tensor> leaves{far};
        CHECK(check_graph_gradients(
                  leaves,
                  [](Tape& t, const std::vector<Tape::NodeId>& ids) {
                      return t.evidence_head(ids[0]);
                  },
                  10) < 1e-6);
    }
}

TEST_CASE("adam optimizer") {
    nn::AdamConfig cfg;
    cfg.learning_rate = 1e-3;

    SUBCASE("zero gradients leave parameters unchanged") {
        nn::ParameterStore store;
        std::mt19937_64 rng(11);
        store.add("w", random_tensor({3, 3}, rng));
        const auto before = store.flatten_values();
        store.adam_step({Tensor({3, 3})}, cfg);
        CHECK(store.flatten_values() == before);
    }

    SUBCASE("first step moves by about lr for unit gradient") {
        nn::ParameterStore store;
        Tensor w({1});
        w.data = {0.5};
        store.add("w", w);
        Tensor g({1});
        g.data = {1.0};
        store.adam_step({g}, cfg);
        // bias-corrected m_hat / sqrt(v_hat) = 1 at the first step
        CHECK(store.param(0).value.data[0] ==
              doctest::Approx(0.5 - cfg.learning_rate).epsilon(1e-6));
    }

    SUBCASE("repeated identical gradients keep moving against them") {
        nn::ParameterStore store;
        Tensor w({1});
        w.data = {0.5};
        store.add("w", w);
        Tensor g({1});
        g.data = {2.0};
        store.adam_step({g}, cfg);
        const double after_one = store.param(0).value.data[0];
        store.adam_step({g}, cfg);
        const double after_two = store.param(0).value.data[0];
        CHECK(after_one < 0.5);
        CHECK(after_two < after_one);
    }

    SUBCASE("non-finite gradients abort without touching parameters") {
        nn::ParameterStore store;
        Tensor w({2});
        w.data = {0.5, 0.25};
        store.add("w", w);
        Tensor g({2});
        g.data = {1.0, std::numeric_limits<double>::quiet_NaN()};
        CHECK_THROWS_AS(store.adam_step({g}, cfg), std::runtime_error);
        CHECK(std::vector<double>(store.param(0).value.data.begin(),
                                  store.param(0).value.data.end()) ==
              std::vector<double>{0.5, 0.25});
        CHECK(store.step_count() == 0);
    }

    SUBCASE("learning rate decays exponentially") {
        nn::AdamConfig decay;
        decay.learning_rate = 1e-4;
        decay.decay_rate = 0.99;
        decay.decay_steps = 1000.0;
        CHECK(nn::ParameterStore::scheduled_lr(decay, 1) == doctest::Approx(1e-4));
        CHECK(nn::ParameterStore::scheduled_lr(decay, 1001) ==
              doctest::Approx(1e-4 * 0.99).epsilon(1e-6));
    }
}

TEST_CASE("gradient_check utility") {
    SUBCASE("linear function is exact") {
        std::vector<double> params{0.3, -0.7, 1.1};
        std::vector<double> grad{2.0, -1.0, 0.5};
        auto f = [](std::span<const double> p) {
            return 2.0 * p[0] - 1.0 * p[1] + 0.5 * p[2];
        };
        CHECK(nn::gradient_check(f, params, grad) < 1e-9);
    }

    SUBCASE("corrupted gradient is detected") {
        std::vector<double> params{0.3, -0.7};
        std::vector<double> grad{2.0 + 0.5, -1.0}; // corrupted first coordinate
        auto f = [](std::span<const double> p) { return 2.0 * p[0] - 1.0 * p[1]; };
        CHECK(nn::gradient_check(f, params, grad) > 1e-2);
    }
}

TEST_CASE("determinism: identical seeds give bit-identical init and updates") {
    auto run = []() {
        std::mt19937_64 rng(make_rng(1234));
        nn::ParameterStore store;
        store.add("w", nn::glorot_uniform({4, 4}, 4, 4, rng));
        Tensor g({4, 4});
        std::mt19937_64 grng(77);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        for (double& v : g.data) v = dist(grng);
        nn::AdamConfig cfg;
        for (int i = 0; i < 5; ++i) store.adam_step({g}, cfg);
        return store.flatten_values();
    };
    CHECK(run() == run());
}
