#include "evmc/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace evmc::nn {

std::size_t ParameterStore::add(const std::string& name, Tensor init) {
    if (index_.count(name)) {
        throw std::invalid_argument("ParameterStore: duplicate parameter " + name);
    }
    Parameter p;
    p.name = name;
    p.m = Tensor::zeros_like(init);
    p.v = Tensor::zeros_like(init);
    p.value = std::move(init);
    params_.push_back(std::move(p));
    index_[name] = params_.size() - 1;
    return params_.size() - 1;
}

const Parameter& ParameterStore::param(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) {
        throw std::invalid_argument("ParameterStore: unknown parameter " + name);
    }
    return params_[it->second];
}

double ParameterStore::scheduled_lr(const AdamConfig& cfg, std::uint64_t next_step) {
    const double t = static_cast<double>(next_step - 1);
    return cfg.learning_rate * std::pow(cfg.decay_rate, t / cfg.decay_steps);
}

void ParameterStore::adam_step(const std::vector<Tensor>& grads, const AdamConfig& cfg) {
    if (grads.size() != params_.size()) {
        throw std::invalid_argument("adam_step: gradient count mismatch");
    }
    for (std::size_t i = 0; i < grads.size(); ++i) {
        if (!grads[i].same_shape(params_[i].value)) {
            throw std::invalid_argument("adam_step: gradient shape mismatch for " +
                                        params_[i].name);
        }
        if (!grads[i].all_finite()) {
            throw std::runtime_error("adam_step: non-finite gradient for " + params_[i].name);
        }
    }
    step_ += 1;
    const double lr = scheduled_lr(cfg, step_);
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Parameter& p = params_[i];
        const auto& g = grads[i].data;
        for (std::size_t k = 0; k < g.size(); ++k) {
            p.m.data[k] = cfg.beta1 * p.m.data[k] + (1.0 - cfg.beta1) * g[k];
            p.v.data[k] = cfg.beta2 * p.v.data[k] + (1.0 - cfg.beta2) * g[k] * g[k];
            const double m_hat = p.m.data[k] / bc1;
            const double v_hat = p.v.data[k] / bc2;
            p.value.data[k] -= lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
        }
    }
}

std::size_t ParameterStore::total_size() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.numel();
    return n;
}

std::vector<double> ParameterStore::flatten_values() const {
    std::vector<double> flat;
    flat.reserve(total_size());
    for (const auto& p : params_) {
        flat.insert(flat.end(), p.value.data.begin(), p.value.data.end());
    }
    return flat;
}

void ParameterStore::load_values(const std::vector<double>& flat) {
    if (flat.size() != total_size()) {
        throw std::invalid_argument("load_values: size mismatch");
    }
    std::size_t off = 0;
    for (auto& p : params_) {
        std::copy(flat.begin() + off, flat.begin() + off + p.value.numel(),
                  p.value.data.begin());
        off += p.value.numel();
    }
}

std::vector<double> ParameterStore::flatten_moments() const {
    std::vector<double> flat;
    flat.reserve(2 * total_size());
    for (const auto& p : params_) flat.insert(flat.end(), p.m.data.begin(), p.m.data.end());
    for (const auto& p : params_) flat.insert(flat.end(), p.v.data.begin(), p.v.data.end());
    return flat;
}

void ParameterStore::load_moments(const std::vector<double>& flat) {
    if (flat.size() != 2 * total_size()) {
        throw std::invalid_argument("load_moments: size mismatch");
    }
    std::size_t off = 0;
    for (auto& p : params_) {
        std::copy(flat.begin() + off, flat.begin() + off + p.m.numel(), p.m.data.begin());
        off += p.m.numel();
    }
    for (auto& p : params_) {
        std::copy(flat.begin() + off, flat.begin() + off + p.v.numel(), p.v.data.begin());
        off += p.v.numel();
    }
}

Tensor glorot_uniform(std::vector<std::size_t> shape, std::size_t fan_in,
                      std::size_t fan_out, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Tensor t(std::move(shape));
    for (double& v : t.data) v = dist(rng);
    return t;
}

} // namespace evmc::nn
