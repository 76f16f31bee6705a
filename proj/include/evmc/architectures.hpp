#ifndef EVMC_ARCHITECTURES_HPP
#define EVMC_ARCHITECTURES_HPP

#include <cstdint>
#include <memory>
#include <vector>

#include "evmc/dataset.hpp"
#include "evmc/optimizer.hpp"
#include "evmc/tape.hpp"

namespace evmc::arch {

/// Deep permutation-invariant network: a stack of equivariant modules
/// followed by an invariant module with the shifted-ReLU evidence head.
struct InvariantNetConfig {
    std::size_t input_dim = 1;
    std::size_t equivariant_modules = 2; // L
    std::size_t inner_depth = 2;         // FC layers inside f2 / f3
    std::size_t hidden_width = 64;
    std::size_t pooled_width = 64;       // width of the set summary z~
    std::size_t output_count = 2;        // J

    void validate() const;
};

struct ConvSpec {
    std::size_t filters = 32;
    std::size_t kernel = 3;
    std::size_t stride = 1;
};

/// LSTM + Conv1D sequence network for time series.
struct SequenceNetConfig {
    std::size_t input_dim = 1;
    std::size_t lstm_hidden = 64;
    std::vector<ConvSpec> conv = {{32, 3, 1}, {64, 3, 2}};
    std::vector<std::size_t> head = {64, 64};
    std::size_t output_count = 2; // J

    void validate() const;
};

class EvidentialNetwork {
public:
    virtual ~EvidentialNetwork() = default;

    virtual DataKind data_kind() const = 0;
    virtual std::size_t input_dim() const = 0;
    virtual std::size_t output_count() const = 0;
    /// Smallest admissible number of rows in a dataset.
    virtual std::size_t min_rows() const { return 1; }

    nn::ParameterStore& params() { return store_; }
    const nn::ParameterStore& params() const { return store_; }

    /// Create one tape leaf per parameter, in store order.
    std::vector<nn::Tape::NodeId> bind(nn::Tape& tape, bool requires_grad) const;

    /// Forward an input batch [B, N, d] to evidences alpha [B, J].
    virtual nn::Tape::NodeId forward(nn::Tape& tape, nn::Tape::NodeId x,
                                     const std::vector<nn::Tape::NodeId>& p) const = 0;

    /// Inference convenience: batch [B, N, d] -> alpha values [B, J].
    nn::Tensor alpha(const nn::Tensor& x) const;

protected:
    nn::ParameterStore store_;
};

class InvariantNetwork final : public EvidentialNetwork {
public:
    InvariantNetwork(InvariantNetConfig config, std::uint64_t init_seed);

    const InvariantNetConfig& config() const { return config_; }
    DataKind data_kind() const override { return DataKind::exchangeable; }
    std::size_t input_dim() const override { return config_.input_dim; }
    std::size_t output_count() const override { return config_.output_count; }

    nn::Tape::NodeId forward(nn::Tape& tape, nn::Tape::NodeId x,
                             const std::vector<nn::Tape::NodeId>& p) const override;

private:
    InvariantNetConfig config_;
};

class SequenceNetwork final : public EvidentialNetwork {
public:
    SequenceNetwork(SequenceNetConfig config, std::uint64_t init_seed);

    const SequenceNetConfig& config() const { return config_; }
    DataKind data_kind() const override { return DataKind::time_series; }
    std::size_t input_dim() const override { return config_.input_dim; }
    std::size_t output_count() const override { return config_.output_count; }
    std::size_t min_rows() const override;

    nn::Tape::NodeId forward(nn::Tape& tape, nn::Tape::NodeId x,
                             const std::vector<nn::Tape::NodeId>& p) const override;

private:
    SequenceNetConfig config_;
};

/// Stack a batch of same-shape datasets into a [B, N, d] tensor.
nn::Tensor stack_batch(const std::vector<Dataset>& datasets);

} // namespace evmc::arch

#endif
