#ifndef EVMC_TRAINING_HPP
#define EVMC_TRAINING_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "evmc/architectures.hpp"
#include "evmc/dirichlet.hpp"
#include "evmc/optimizer.hpp"
#include "evmc/simulators.hpp"

namespace evmc::train {

/// One mini-batch: B datasets sharing a single size draw plus one-hot labels.
struct TrainingBatch {
    nn::Tensor inputs; // [B, N, d]
    nn::Tensor labels; // [B, J]
    std::vector<std::size_t> model_indices;
    std::size_t size = 0; // the shared N (or T) draw
};

struct TrainingConfig {
    std::size_t batch_size = 64;
    std::size_t iterations = 10000;
    double lambda = 0.0;
    bool anneal_lambda = false;    // linear ramp to lambda
    std::size_t lambda_ramp = 0;   // ramp length; 0 = first third of iterations
    std::uint64_t seed = 1;
    nn::AdamConfig adam;
    bool early_stop = true;
    std::size_t plateau_window = 2000;
    double plateau_rel_change = 1e-3;
    std::size_t divergence_window = 1000;
    double divergence_factor = 5.0;
    std::size_t shards = 2;      // gradient shards; fixed count keeps runs reproducible
    bool pipeline = true;        // simulate one batch ahead of the optimizer
    std::size_t sim_threads = 1; // per-batch simulation fan-out
    std::size_t checkpoint_every = 0;

    void validate() const;
};

struct TraceEntry {
    std::size_t iteration;
    double loss;
    double lambda;
    double wall_seconds;
};

struct TrainResult {
    std::vector<TraceEntry> trace;
    std::size_t iterations_run = 0;
    double final_loss = 0.0; // mean loss over the last completed window
    std::string stop_reason;
};

/// Algorithm-style batch simulation: one shared size draw, then per dataset
/// a model index, a prior draw and a forward simulation. Every dataset gets
/// its own seeded rng stream derived from (seed, index), so fan-out across
/// sim_threads does not change the result.
TrainingBatch generate_batch(const sim::ComparisonProblem& problem, std::size_t batch_size,
                             std::uint64_t seed, std::size_t sim_threads = 1);

struct LossResult {
    double value = 0.0;
    nn::Tensor grad; // d(loss)/d(alpha), [B, J]
};

/// Batch mean of -sum_j m_j log(alpha_j / alpha_0) + lambda * KL of the
/// truth-masked evidence vector to the uniform Dirichlet. lambda = 0
/// recovers the strictly proper logarithmic loss.
LossResult regularized_log_loss(const nn::Tensor& alpha, const nn::Tensor& labels,
                                double lambda);

/// Loss over a row slice [row_begin, row_end) with an explicit divisor, so
/// shard contributions add up to the full-batch mean.
LossResult regularized_log_loss_slice(const nn::Tensor& alpha, const nn::Tensor& labels,
                                      double lambda, std::size_t row_begin,
                                      std::size_t row_end, double divisor);

/// Effective lambda at an iteration under the annealing schedule.
double lambda_at(const TrainingConfig& cfg, std::size_t iteration);

/// Online training loop: simulate -> forward -> loss -> Adam. Deterministic
/// under a fixed config. Throws std::runtime_error on divergence.
TrainResult train(const sim::ComparisonProblem& problem, arch::EvidentialNetwork& network,
                  const TrainingConfig& config,
                  const std::function<void(std::size_t, const TrainResult&)>& on_checkpoint = {});

/// Amortized inference: per dataset the evidence vector, the posterior
/// probabilities and the uncertainty score. Never mutates the network.
std::vector<std::pair<EvidenceVector, ModelPosterior>> infer(
    const arch::EvidentialNetwork& network, const std::vector<Dataset>& datasets);

void write_trace_csv(const std::vector<TraceEntry>& trace, const std::string& path);

} // namespace evmc::train

#endif
