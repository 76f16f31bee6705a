#include "evmc/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <future>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "evmc/rng.hpp"
#include "evmc/tape.hpp"

namespace evmc::train {

void TrainingConfig::validate() const {
    if (batch_size == 0) throw std::invalid_argument("TrainingConfig: batch_size >= 1");
    if (lambda < 0.0) throw std::invalid_argument("TrainingConfig: lambda >= 0");
    if (shards == 0) throw std::invalid_argument("TrainingConfig: shards >= 1");
}

TrainingBatch generate_batch(const sim::ComparisonProblem& problem, std::size_t batch_size,
                             std::uint64_t seed, std::size_t sim_threads) {
    problem.validate();
    if (batch_size == 0) throw std::invalid_argument("generate_batch: batch_size >= 1");

    std::mt19937_64 master = make_rng(mix_seed(seed));
    const std::size_t size = problem.draw_size(master);
    const std::size_t j_count = problem.model_count();

    std::vector<Dataset> datasets(batch_size);
    std::vector<std::size_t> indices(batch_size);

    auto simulate_range = [&](std::size_t begin, std::size_t end) {
        for (std::size_t b = begin; b < end; ++b) {
            std::mt19937_64 rng = make_rng(child_seed(seed, b));
            const std::size_t j = problem.draw_model(rng);
            const auto& model = problem.models[j];
            std::vector<double> theta = model.sample_prior(rng);
            try {
                datasets[b] = model.simulate(theta, size, rng);
            } catch (const std::exception& e) {
                throw std::runtime_error("generate_batch: simulator for model " +
                                         model.label + " failed on dataset " +
                                         std::to_string(b) + ": " + e.what());
            }
            indices[b] = j;
        }
    };

    const std::size_t workers = std::min<std::size_t>(std::max<std::size_t>(sim_threads, 1),
                                                      batch_size);
    if (workers <= 1) {
        simulate_range(0, batch_size);
    } else {
        std::vector<std::future<void>> futures;
        const std::size_t chunk = (batch_size + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t begin = w * chunk;
            const std::size_t end = std::min(batch_size, begin + chunk);
            if (begin >= end) break;
            futures.push_back(std::async(std::launch::async, simulate_range, begin, end));
        }
        for (auto& f : futures) f.get();
    }

    TrainingBatch batch;
    batch.size = size;
    batch.inputs = arch::stack_batch(datasets);
    batch.labels = nn::Tensor({batch_size, j_count});
    for (std::size_t b = 0; b < batch_size; ++b) {
        batch.labels.at(b, indices[b]) = 1.0;
    }
    batch.model_indices = std::move(indices);
    return batch;
}

LossResult regularized_log_loss_slice(const nn::Tensor& alpha, const nn::Tensor& labels,
                                      double lambda, std::size_t row_begin,
                                      std::size_t row_end, double divisor) {
    if (alpha.rank() != 2 || !alpha.same_shape(labels)) {
        throw std::invalid_argument("regularized_log_loss: alpha/labels shape mismatch");
    }
    const std::size_t j_count = alpha.shape[1];
    LossResult result;
    result.grad = nn::Tensor::zeros_like(alpha);
    const double inv = 1.0 / divisor;

    for (std::size_t b = row_begin; b < row_end; ++b) {
        std::size_t true_index = j_count;
        double a0 = 0.0;
        for (std::size_t j = 0; j < j_count; ++j) {
            const double a = alpha.at(b, j);
            if (!(a >= 1.0)) {
                throw std::invalid_argument("regularized_log_loss: alpha < 1 in row " +
                                            std::to_string(b));
            }
            a0 += a;
            if (labels.at(b, j) == 1.0) true_index = j;
        }
        if (true_index == j_count) {
            throw std::invalid_argument("regularized_log_loss: row " + std::to_string(b) +
                                        " has no one-hot label");
        }
        const double a_true = alpha.at(b, true_index);
        double row_loss = -std::log(a_true / a0);

        for (std::size_t j = 0; j < j_count; ++j) {
            double g = 1.0 / a0;
            if (j == true_index) g -= 1.0 / a_true;
            result.grad.at(b, j) += g * inv;
        }

        if (lambda > 0.0) {
            EvidenceVector masked;
            masked.alpha.resize(j_count);
            for (std::size_t j = 0; j < j_count; ++j) {
                masked.alpha[j] = j == true_index ? 1.0 : alpha.at(b, j);
            }
            row_loss += lambda * kl_to_uniform(masked);
            const std::vector<double> kl_grad = kl_to_uniform_grad(masked);
            for (std::size_t j = 0; j < j_count; ++j) {
                if (j != true_index) {
                    result.grad.at(b, j) += lambda * kl_grad[j] * inv;
                }
            }
        }

        if (!std::isfinite(row_loss)) {
            throw std::runtime_error("regularized_log_loss: non-finite loss at batch index " +
                                     std::to_string(b));
        }
        result.value += row_loss * inv;
    }
    return result;
}

LossResult regularized_log_loss(const nn::Tensor& alpha, const nn::Tensor& labels,
                                double lambda) {
    return regularized_log_loss_slice(alpha, labels, lambda, 0, alpha.shape[0],
                                      static_cast<double>(alpha.shape[0]));
}

double lambda_at(const TrainingConfig& cfg, std::size_t iteration) {
    if (!cfg.anneal_lambda || cfg.lambda == 0.0) return cfg.lambda;
    const std::size_t ramp = cfg.lambda_ramp > 0
                                 ? cfg.lambda_ramp
                                 : std::max<std::size_t>(cfg.iterations / 3, 1);
    if (iteration >= ramp) return cfg.lambda;
    return cfg.lambda * static_cast<double>(iteration) / static_cast<double>(ramp);
}

namespace {

struct ShardOutput {
    double loss = 0.0;
    std::vector<nn::Tensor> grads;
};

// Forward + backward for a contiguous row slice of the batch on its own tape.
ShardOutput run_shard(const arch::EvidentialNetwork& network, const TrainingBatch& batch,
                      std::size_t row_begin, std::size_t row_end, double lambda) {
    const std::size_t n = batch.inputs.shape[1];
    const std::size_t d = batch.inputs.shape[2];
    const std::size_t j_count = batch.labels.shape[1];
    const std::size_t rows = row_end - row_begin;

    nn::Tensor x({rows, n, d});
    std::copy(batch.inputs.data.begin() + row_begin * n * d,
              batch.inputs.data.begin() + row_end * n * d, x.data.begin());
    nn::Tensor y({rows, j_count});
    std::copy(batch.labels.data.begin() + row_begin * j_count,
              batch.labels.data.begin() + row_end * j_count, y.data.begin());

    nn::Tape tape;
    auto params = network.bind(tape, true);
    nn::Tape::NodeId alpha = network.forward(tape, tape.leaf(x, false), params);
    LossResult loss = regularized_log_loss_slice(tape.value(alpha), y, lambda, 0, rows,
                                                 static_cast<double>(batch.labels.shape[0]));
    tape.backward(alpha, loss.grad);

    ShardOutput out;
    out.loss = loss.value;
    out.grads.reserve(params.size());
    for (nn::Tape::NodeId id : params) {
        out.grads.push_back(tape.grad(id));
    }
    return out;
}

} // namespace

TrainResult train(const sim::ComparisonProblem& problem, arch::EvidentialNetwork& network,
                  const TrainingConfig& config,
                  const std::function<void(std::size_t, const TrainResult&)>& on_checkpoint) {
    config.validate();
    problem.validate();
    if (network.data_kind() != problem.kind) {
        throw std::invalid_argument("train: network kind does not match problem kind");
    }
    if (network.output_count() != problem.model_count()) {
        throw std::invalid_argument("train: network output count does not match model count");
    }

    TrainResult result;
    result.stop_reason = "iterations";
    if (config.iterations == 0) return result;

    const auto t_start = std::chrono::steady_clock::now();
    auto wall = [&t_start]() {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    };

    auto make_batch = [&](std::size_t iter) {
        return generate_batch(problem, config.batch_size, child_seed(config.seed, iter),
                              config.sim_threads);
    };

    std::future<TrainingBatch> next;
    if (config.pipeline) next = std::async(std::launch::async, make_batch, 1);

    const std::size_t ramp_end =
        config.anneal_lambda
            ? (config.lambda_ramp > 0 ? config.lambda_ramp
                                      : std::max<std::size_t>(config.iterations / 3, 1))
            : 0;
    std::vector<double> losses;
    losses.reserve(config.iterations);

    for (std::size_t iter = 1; iter <= config.iterations; ++iter) {
        TrainingBatch batch = config.pipeline ? next.get() : make_batch(iter);
        if (config.pipeline && iter + 1 <= config.iterations) {
            next = std::async(std::launch::async, make_batch, iter + 1);
        }
        const double lambda = lambda_at(config, iter);

        const std::size_t b = config.batch_size;
        const std::size_t shards = std::min(config.shards, b);
        std::vector<ShardOutput> outputs(shards);
        std::vector<std::exception_ptr> errors(shards);
        {
            std::vector<std::thread> threads;
            const std::size_t chunk = (b + shards - 1) / shards;
            for (std::size_t s = 1; s < shards; ++s) {
                const std::size_t begin = s * chunk;
                const std::size_t end = std::min(b, begin + chunk);
                threads.emplace_back([&, s, begin, end]() {
                    try {
                        if (begin < end) {
                            outputs[s] = run_shard(network, batch, begin, end, lambda);
                        }
                    } catch (...) {
                        errors[s] = std::current_exception();
                    }
                });
            }
            try {
                outputs[0] = run_shard(network, batch, 0, std::min(b, chunk), lambda);
            } catch (...) {
                errors[0] = std::current_exception();
            }
            for (auto& t : threads) t.join();
        }
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }

        double loss = 0.0;
        std::vector<nn::Tensor> grads;
        for (std::size_t s = 0; s < shards; ++s) {
            if (outputs[s].grads.empty()) continue;
            loss += outputs[s].loss;
            if (grads.empty()) {
                grads = std::move(outputs[s].grads);
            } else {
                for (std::size_t p = 0; p < grads.size(); ++p) {
                    const auto& src = outputs[s].grads[p].data;
                    auto& dst = grads[p].data;
                    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
                }
            }
        }
        network.params().adam_step(grads, config.adam);

        losses.push_back(loss);
        result.trace.push_back({iter, loss, lambda, wall()});
        result.iterations_run = iter;

        if (config.checkpoint_every > 0 && on_checkpoint &&
            iter % config.checkpoint_every == 0 && iter != config.iterations) {
            on_checkpoint(iter, result);
        }

        const std::size_t dw = config.divergence_window;
        if (losses.size() >= 2 * dw) {
            const double recent = std::accumulate(losses.end() - dw, losses.end(), 0.0) / dw;
            const double before =
                std::accumulate(losses.end() - 2 * dw, losses.end() - dw, 0.0) / dw;
            if (recent > config.divergence_factor * before && before > 0.0) {
                result.stop_reason = "diverged";
                throw std::runtime_error(
                    "train: divergence detected at iteration " + std::to_string(iter) +
                    " (running mean " + std::to_string(recent) + " vs " +
                    std::to_string(before) + ")");
            }
        }

        const std::size_t w = config.plateau_window;
        if (config.early_stop && iter >= ramp_end + 2 * w && losses.size() >= 2 * w &&
            iter % w == 0) {
            const double recent = std::accumulate(losses.end() - w, losses.end(), 0.0) / w;
            const double before =
                std::accumulate(losses.end() - 2 * w, losses.end() - w, 0.0) / w;
            if (before > 0.0 && std::abs(recent - before) / before < config.plateau_rel_change) {
                result.stop_reason = "plateau";
                break;
            }
        }
    }

    const std::size_t tail = std::min<std::size_t>(losses.size(),
                                                   std::max<std::size_t>(config.plateau_window, 1));
    if (!losses.empty()) {
        result.final_loss = std::accumulate(losses.end() - tail, losses.end(), 0.0) /
                            static_cast<double>(tail);
    }
    return result;
}

std::vector<std::pair<EvidenceVector, ModelPosterior>> infer(
    const arch::EvidentialNetwork& network, const std::vector<Dataset>& datasets) {
    std::vector<std::pair<EvidenceVector, ModelPosterior>> out(datasets.size());

    // Group equal-shape datasets so they share forward passes.
    std::vector<std::size_t> order(datasets.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return datasets[a].rows < datasets[b].rows;
    });

    constexpr std::size_t kMaxGroup = 256;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i + 1;
        while (j < order.size() && j - i < kMaxGroup &&
               datasets[order[j]].rows == datasets[order[i]].rows) {
            ++j;
        }
        std::vector<Dataset> group;
        group.reserve(j - i);
        for (std::size_t k = i; k < j; ++k) {
            const Dataset& ds = datasets[order[k]];
            ds.validate();
            if (ds.kind != network.data_kind()) {
                throw std::invalid_argument("infer: dataset kind does not match the network");
            }
            if (ds.cols != network.input_dim()) {
                throw std::invalid_argument("infer: dataset has " + std::to_string(ds.cols) +
                                            " columns, network expects " +
                                            std::to_string(network.input_dim()));
            }
            if (ds.rows < network.min_rows()) {
                throw std::invalid_argument("infer: dataset shorter than the network minimum");
            }
            group.push_back(ds);
        }
        nn::Tensor alpha = network.alpha(arch::stack_batch(group));
        for (std::size_t k = i; k < j; ++k) {
            std::vector<double> a(alpha.shape[1]);
            for (std::size_t c = 0; c < a.size(); ++c) a[c] = alpha.at(k - i, c);
            EvidenceVector ev(std::move(a));
            ModelPosterior post = to_posterior(ev);
            out[order[k]] = {std::move(ev), std::move(post)};
        }
        i = j;
    }
    return out;
}

void write_trace_csv(const std::vector<TraceEntry>& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "iteration,loss,lambda,wall_seconds\n";
    char buf[128];
    for (const auto& e : trace) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.6f\n", e.iteration, e.loss, e.lambda,
                      e.wall_seconds);
        out << buf;
    }
}

} // namespace evmc::train
