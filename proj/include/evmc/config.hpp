#ifndef EVMC_CONFIG_HPP
#define EVMC_CONFIG_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "evmc/architectures.hpp"
#include "evmc/diagnostics.hpp"
#include "evmc/simulators.hpp"
#include "evmc/training.hpp"

namespace evmc::io {

/// A fully resolved experiment: problem, architecture, training plan and
/// evaluation/sweep/simulate specs, parsed from a strict JSON file.
struct ExperimentConfig {
    std::string problem_id; // beta_binomial | gmm_grid | mjp | eam | hh
    std::uint64_t seed = 0;
    std::string out_dir = ".";

    sim::ComparisonProblem problem;
    bool is_invariant = true;
    arch::InvariantNetConfig invariant_config;
    arch::SequenceNetConfig sequence_config;
    train::TrainingConfig training;

    std::size_t validation_sets = 1000;
    std::vector<std::size_t> eval_sizes;
    std::size_t eval_bins = 10;
    std::size_t eval_bootstrap = 100;

    bool has_sweep = false;
    diag::SweepSpec sweep;

    std::size_t sim_count = 100;
    std::size_t sim_size = 0; // 0 = draw from p(N)
    int sim_model = 0;        // 0 = draw from the model prior

    std::string config_echo; // canonical JSON of the parsed file
};

/// Parse and validate; unknown fields are rejected with their full path.
ExperimentConfig load_experiment_config(const std::string& path);
ExperimentConfig parse_experiment_config(const std::string& json_text);

std::unique_ptr<arch::EvidentialNetwork> build_network(const ExperimentConfig& config,
                                                       std::uint64_t init_seed);

} // namespace evmc::io

#endif
