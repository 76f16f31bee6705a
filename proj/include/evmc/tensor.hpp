#ifndef EVMC_TENSOR_HPP
#define EVMC_TENSOR_HPP

#include <cstddef>
#include <cstdlib>
#include <initializer_list>
#include <new>
#include <vector>

namespace evmc::nn {

/// 64-byte aligned allocator. Keeping every buffer identically aligned
/// pins the SIMD peeling inside the linear algebra kernels, which is what
/// makes training runs bit-reproducible across heap layouts.
template <typename T, std::size_t Alignment = 64>
struct AlignedAllocator {
    using value_type = T;

    AlignedAllocator() noexcept = default;
    template <typename U>
    AlignedAllocator(const AlignedAllocator<U, Alignment>&) noexcept {}

    T* allocate(std::size_t n) {
        const std::size_t bytes =
            (n * sizeof(T) + Alignment - 1) / Alignment * Alignment;
        void* p = std::aligned_alloc(Alignment, bytes);
        if (!p) throw std::bad_alloc();
        return static_cast<T*>(p);
    }
    void deallocate(T* p, std::size_t) noexcept { std::free(p); }

    template <typename U>
    struct rebind {
        using other = AlignedAllocator<U, Alignment>;
    };
    friend bool operator==(const AlignedAllocator&, const AlignedAllocator&) { return true; }
    friend bool operator!=(const AlignedAllocator&, const AlignedAllocator&) { return false; }
};

using AlignedBuffer = std::vector<double, AlignedAllocator<double>>;

/// Dense row-major tensor of doubles. Rank 1-3 is what the layer set uses.
struct Tensor {
    std::vector<std::size_t> shape;
    AlignedBuffer data;

    Tensor() = default;
    Tensor(std::initializer_list<std::size_t> s);
    explicit Tensor(std::vector<std::size_t> s);

    static Tensor zeros(std::vector<std::size_t> s);
    static Tensor zeros_like(const Tensor& other);

    std::size_t numel() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t dim(std::size_t i) const { return shape[i]; }

    double& at(std::size_t i) { return data[i]; }
    double at(std::size_t i) const { return data[i]; }
    double& at(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * shape[1] + j]; }
    double& at(std::size_t i, std::size_t j, std::size_t k) {
        return data[(i * shape[1] + j) * shape[2] + k];
    }
    double at(std::size_t i, std::size_t j, std::size_t k) const {
        return data[(i * shape[1] + j) * shape[2] + k];
    }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    bool all_finite() const;

    /// Throws std::invalid_argument when the shape product disagrees with
    /// the buffer length or a non-finite entry is present.
    void check_valid(const char* context) const;
};

std::size_t shape_numel(const std::vector<std::size_t>& shape);

} // namespace evmc::nn

#endif
