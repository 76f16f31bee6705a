#include "evmc/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace evmc::nn {

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

Tensor::Tensor(std::initializer_list<std::size_t> s) : shape(s) {
    data.assign(shape_numel(shape), 0.0);
}

Tensor::Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
    data.assign(shape_numel(shape), 0.0);
}

Tensor Tensor::zeros(std::vector<std::size_t> s) { return Tensor(std::move(s)); }

Tensor Tensor::zeros_like(const Tensor& other) { return Tensor(other.shape); }

bool Tensor::all_finite() const {
    for (double v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Tensor::check_valid(const char* context) const {
    if (shape_numel(shape) != data.size()) {
        throw std::invalid_argument(std::string(context) + ": shape/buffer mismatch");
    }
    if (!all_finite()) {
        throw std::invalid_argument(std::string(context) + ": non-finite values");
    }
}

} // namespace evmc::nn
