#ifndef EVMC_OPTIMIZER_HPP
#define EVMC_OPTIMIZER_HPP

#include <cstdint>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "evmc/tensor.hpp"

namespace evmc::nn {

struct AdamConfig {
    double learning_rate = 1e-4;
    double decay_rate = 0.99;      // exponential learning-rate decay
    double decay_steps = 1000.0;   // lr = lr0 * decay^(step / decay_steps)
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct Parameter {
    std::string name;
    Tensor value;
    Tensor m; // first moment
    Tensor v; // second moment
};

/// Named parameter tensors plus their Adam state. Updates are sequential;
/// a store must not receive concurrent adam_step calls.
class ParameterStore {
public:
    std::size_t add(const std::string& name, Tensor init);

    std::size_t count() const { return params_.size(); }
    Parameter& param(std::size_t i) { return params_[i]; }
    const Parameter& param(std::size_t i) const { return params_[i]; }
    const Parameter& param(const std::string& name) const;
    bool has(const std::string& name) const { return index_.count(name) > 0; }

    std::uint64_t step_count() const { return step_; }
    void set_step_count(std::uint64_t s) { step_ = s; }

    /// Current learning rate for the next step under the decay schedule.
    static double scheduled_lr(const AdamConfig& cfg, std::uint64_t next_step);

    /// One Adam update from per-parameter gradients (ordered like the
    /// store). Throws std::runtime_error on non-finite gradients without
    /// touching any parameter.
    void adam_step(const std::vector<Tensor>& grads, const AdamConfig& cfg);

    std::size_t total_size() const;
    std::vector<double> flatten_values() const;
    void load_values(const std::vector<double>& flat);
    std::vector<double> flatten_moments() const; // m then v, same layout
    void load_moments(const std::vector<double>& flat);

private:
    std::vector<Parameter> params_;
    std::unordered_map<std::string, std::size_t> index_;
    std::uint64_t step_ = 0;
};

/// Uniform(-limit, limit) with limit = sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform(std::vector<std::size_t> shape, std::size_t fan_in,
                      std::size_t fan_out, std::mt19937_64& rng);

} // namespace evmc::nn

#endif
