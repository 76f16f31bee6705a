#ifndef EVMC_CHECKPOINT_HPP
#define EVMC_CHECKPOINT_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "evmc/architectures.hpp"

namespace evmc::io {

/// Serialized network: architecture echo, flat little-endian parameter
/// block with named offsets, optional optimizer state and training
/// metadata. File layout: magic "EVMC", u32 version, length-prefixed JSON
/// header, raw f64 parameter block, optional Adam state, FNV-1a checksum.
struct NetworkCheckpoint {
    static constexpr std::uint32_t kVersion = 1;

    DataKind kind = DataKind::exchangeable;
    bool is_invariant = true;
    arch::InvariantNetConfig invariant_config;
    arch::SequenceNetConfig sequence_config;

    std::vector<std::pair<std::string, std::vector<std::size_t>>> param_layout;
    std::vector<double> params;

    bool has_optimizer_state = false;
    std::uint64_t adam_step = 0;
    std::vector<double> moments; // first moments then second moments

    std::uint64_t iterations = 0;
    double final_loss = 0.0;
    double lambda = 0.0;
    std::uint64_t seed = 0;
    std::string stop_reason;

    std::size_t param_count() const { return params.size(); }
};

struct TrainingMeta {
    std::uint64_t iterations = 0;
    double final_loss = 0.0;
    double lambda = 0.0;
    std::uint64_t seed = 0;
    std::string stop_reason;
};

NetworkCheckpoint make_checkpoint(const arch::EvidentialNetwork& network,
                                  const TrainingMeta& meta,
                                  bool include_optimizer_state = false);

/// Rebuild the network and load its parameters (and Adam state when
/// present). Throws on layout mismatch.
std::unique_ptr<arch::EvidentialNetwork> restore_network(const NetworkCheckpoint& checkpoint);

void save_checkpoint(const NetworkCheckpoint& checkpoint, const std::string& path);

/// Throws std::runtime_error on bad magic, version mismatch, checksum
/// failure or truncation; never returns a partial checkpoint.
NetworkCheckpoint load_checkpoint(const std::string& path);

} // namespace evmc::io

#endif
