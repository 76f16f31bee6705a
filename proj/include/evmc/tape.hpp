#ifndef EVMC_TAPE_HPP
#define EVMC_TAPE_HPP

#include <cstddef>
#include <functional>
#include <vector>

#include "evmc/tensor.hpp"

namespace evmc::nn {

enum class Activation { linear, elu, relu };

/// Reverse-mode tape over the fixed layer set used by the evidential
/// networks: dense, LSTM, 1D convolution, set/time pooling, concatenation
/// and the shifted-ReLU evidence head. Build a fresh tape per forward pass;
/// node ids are indices in creation order, so reverse order is a valid
/// topological order for backpropagation.
class Tape {
public:
    using NodeId = std::size_t;

    NodeId leaf(Tensor value, bool requires_grad = false);

    /// [.., in] x [in, out] -> [.., out]; leading dims are batch-like.
    NodeId matmul(NodeId a, NodeId w);
    /// Broadcast-add a length-w vector across the last axis.
    NodeId add_row(NodeId x, NodeId bias);
    NodeId elu(NodeId x);
    NodeId relu(NodeId x);
    /// Evidence head alpha = max(1, x); subgradient 1 at the tie x = 1.
    NodeId evidence_head(NodeId x);
    /// Concatenate along the last axis; leading shapes must agree.
    NodeId concat_last(NodeId a, NodeId b);
    /// [B, N, h] -> [B, h], summing or averaging over axis 1.
    NodeId sum_over_set(NodeId x);
    NodeId mean_over_time(NodeId x);
    /// [B, h] -> [B, n, h]; backward sums over the broadcast axis.
    NodeId broadcast_axis1(NodeId z, std::size_t n);
    /// Zero-copy view with identical element count.
    NodeId reshape(NodeId x, std::vector<std::size_t> shape);

    /// Single-layer LSTM, final hidden state only. x: [B, N, d],
    /// wx: [d, 4H], wh: [H, 4H], b: [4H] with gate order (i, f, g, o).
    NodeId lstm(NodeId x, NodeId wx, NodeId wh, NodeId b);

    /// Valid cross-correlation along the time axis. x: [B, N, d],
    /// kernel: [K, d, F], bias: [F] -> [B, N', F], N' = (N-K)/stride + 1.
    NodeId conv1d(NodeId x, NodeId kernel, NodeId bias, std::size_t stride);

    /// Dense layer y = act(x W + b).
    NodeId dense(NodeId x, NodeId w, NodeId b, Activation act);

    const Tensor& value(NodeId id) const { return nodes_[id].value; }
    const Tensor& grad(NodeId id) const { return nodes_[id].grad; }

    /// Seed d(root) and propagate to every earlier node.
    void backward(NodeId root, const Tensor& seed);

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        std::function<void(Tape&)> backfn;
    };

    NodeId push(Tensor value, bool requires_grad, std::function<void(Tape&)> backfn);
    Tensor& grad_mut(NodeId id) { return nodes_[id].grad; }

    std::vector<Node> nodes_;
};

} // namespace evmc::nn

#endif
