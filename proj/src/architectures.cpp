#include "evmc/architectures.hpp"

#include <stdexcept>
#include <string>

#include "evmc/rng.hpp"

namespace evmc::arch {

using nn::Activation;
using nn::ParameterStore;
using nn::Tape;
using nn::Tensor;

void InvariantNetConfig::validate() const {
    if (input_dim == 0 || equivariant_modules == 0 || inner_depth == 0 ||
        hidden_width == 0 || pooled_width == 0 || output_count < 2) {
        throw std::invalid_argument("InvariantNetConfig: widths/depths must be >= 1, J >= 2");
    }
}

void SequenceNetConfig::validate() const {
    if (input_dim == 0 || lstm_hidden == 0 || output_count < 2 || conv.empty()) {
        throw std::invalid_argument("SequenceNetConfig: need >= 1 conv layer and J >= 2");
    }
    for (const auto& c : conv) {
        if (c.filters == 0 || c.kernel == 0 || c.stride == 0) {
            throw std::invalid_argument("SequenceNetConfig: zero conv dimension");
        }
    }
}

std::vector<Tape::NodeId> EvidentialNetwork::bind(Tape& tape, bool requires_grad) const {
    std::vector<Tape::NodeId> ids;
    ids.reserve(store_.count());
    for (std::size_t i = 0; i < store_.count(); ++i) {
        ids.push_back(tape.leaf(store_.param(i).value, requires_grad));
    }
    return ids;
}

Tensor EvidentialNetwork::alpha(const nn::Tensor& x) const {
    Tape tape;
    auto p = bind(tape, false);
    Tape::NodeId out = forward(tape, tape.leaf(x, false), p);
    return tape.value(out);
}

namespace {

struct DenseIds {
    std::size_t w;
    std::size_t b;
};

DenseIds add_dense(ParameterStore& store, const std::string& name, std::size_t in,
                   std::size_t out, std::mt19937_64& rng) {
    DenseIds ids{};
    ids.w = store.add(name + ".W", nn::glorot_uniform({in, out}, in, out, rng));
    ids.b = store.add(name + ".b", Tensor({out}));
    return ids;
}

Tape::NodeId apply_dense(Tape& tape, Tape::NodeId x, const std::vector<Tape::NodeId>& p,
                         std::size_t& cursor, Activation act) {
    Tape::NodeId w = p[cursor++];
    Tape::NodeId b = p[cursor++];
    return tape.dense(x, w, b, act);
}

} // namespace

InvariantNetwork::InvariantNetwork(InvariantNetConfig config, std::uint64_t init_seed)
    : config_(config) {
    config_.validate();
    std::mt19937_64 rng = make_rng(init_seed);
    const std::size_t w = config_.hidden_width;
    const std::size_t z = config_.pooled_width;

    std::size_t width = config_.input_dim;
    for (std::size_t l = 0; l < config_.equivariant_modules; ++l) {
        const std::string prefix = "eq" + std::to_string(l + 1);
        std::size_t cur = width;
        for (std::size_t k = 0; k < config_.inner_depth; ++k) {
            add_dense(store_, prefix + ".inv.f2." + std::to_string(k), cur, w, rng);
            cur = w;
        }
        add_dense(store_, prefix + ".inv.f1", w, z, rng);
        cur = width + z;
        for (std::size_t k = 0; k < config_.inner_depth; ++k) {
            add_dense(store_, prefix + ".f3." + std::to_string(k), cur, w, rng);
            cur = w;
        }
        width = w;
    }
    std::size_t cur = width;
    for (std::size_t k = 0; k < config_.inner_depth; ++k) {
        add_dense(store_, "final.f2." + std::to_string(k), cur, w, rng);
        cur = w;
    }
    add_dense(store_, "final.f1.0", w, w, rng);
    add_dense(store_, "final.f1.1", w, config_.output_count, rng);
    // Start the evidence head well above the max(1, .) clamp: below it the
    // subgradient is zero, so a head that drifts under the clamp for every
    // input can never recover.
    for (double& v : store_.param(store_.count() - 1).value.data) v = 2.0;
}

Tape::NodeId InvariantNetwork::forward(Tape& tape, Tape::NodeId x,
                                       const std::vector<Tape::NodeId>& p) const {
    const Tensor& xv = tape.value(x);
    if (xv.rank() != 3 || xv.shape[2] != config_.input_dim) {
        throw std::invalid_argument("InvariantNetwork: expected [B, N, " +
                                    std::to_string(config_.input_dim) + "] input");
    }
    if (xv.shape[1] == 0) {
        throw std::invalid_argument("InvariantNetwork: empty set");
    }
    const std::size_t n = xv.shape[1];
    std::size_t cursor = 0;
    Tape::NodeId cur = x;
    for (std::size_t l = 0; l < config_.equivariant_modules; ++l) {
        Tape::NodeId e = cur;
        for (std::size_t k = 0; k < config_.inner_depth; ++k) {
            e = apply_dense(tape, e, p, cursor, Activation::elu);
        }
        Tape::NodeId pooled = tape.sum_over_set(e);
        Tape::NodeId summary = apply_dense(tape, pooled, p, cursor, Activation::elu);
        Tape::NodeId tiled = tape.broadcast_axis1(summary, n);
        Tape::NodeId cat = tape.concat_last(cur, tiled);
        Tape::NodeId row = cat;
        for (std::size_t k = 0; k < config_.inner_depth; ++k) {
            row = apply_dense(tape, row, p, cursor, Activation::elu);
        }
        cur = row;
    }
    Tape::NodeId e = cur;
    for (std::size_t k = 0; k < config_.inner_depth; ++k) {
        e = apply_dense(tape, e, p, cursor, Activation::elu);
    }
    Tape::NodeId pooled = tape.sum_over_set(e);
    Tape::NodeId h = apply_dense(tape, pooled, p, cursor, Activation::elu);
    Tape::NodeId pre = apply_dense(tape, h, p, cursor, Activation::linear);
    return tape.evidence_head(pre);
}

SequenceNetwork::SequenceNetwork(SequenceNetConfig config, std::uint64_t init_seed)
    : config_(std::move(config)) {
    config_.validate();
    std::mt19937_64 rng = make_rng(init_seed);
    const std::size_t d = config_.input_dim;
    const std::size_t hidden = config_.lstm_hidden;

    store_.add("lstm.wx", nn::glorot_uniform({d, 4 * hidden}, d + hidden, hidden, rng));
    store_.add("lstm.wh", nn::glorot_uniform({hidden, 4 * hidden}, d + hidden, hidden, rng));
    {
        Tensor b({4 * hidden});
        for (std::size_t i = hidden; i < 2 * hidden; ++i) b.data[i] = 1.0; // forget gate
        store_.add("lstm.b", std::move(b));
    }
    std::size_t channels = d;
    for (std::size_t i = 0; i < config_.conv.size(); ++i) {
        const auto& spec = config_.conv[i];
        store_.add("conv" + std::to_string(i) + ".K",
                   nn::glorot_uniform({spec.kernel, channels, spec.filters},
                                      spec.kernel * channels, spec.filters, rng));
        store_.add("conv" + std::to_string(i) + ".b", Tensor({spec.filters}));
        channels = spec.filters;
    }
    std::size_t cur = hidden + channels;
    for (std::size_t i = 0; i < config_.head.size(); ++i) {
        add_dense(store_, "head." + std::to_string(i), cur, config_.head[i], rng);
        cur = config_.head[i];
    }
    add_dense(store_, "head.out", cur, config_.output_count, rng);
    // Same clamp-evasion as the invariant head.
    for (double& v : store_.param(store_.count() - 1).value.data) v = 2.0;
}

std::size_t SequenceNetwork::min_rows() const {
    std::size_t required = 1;
    for (std::size_t i = config_.conv.size(); i-- > 0;) {
        required = (required - 1) * config_.conv[i].stride + config_.conv[i].kernel;
    }
    return required;
}

Tape::NodeId SequenceNetwork::forward(Tape& tape, Tape::NodeId x,
                                      const std::vector<Tape::NodeId>& p) const {
    const Tensor& xv = tape.value(x);
    if (xv.rank() != 3 || xv.shape[2] != config_.input_dim) {
        throw std::invalid_argument("SequenceNetwork: expected [B, N, " +
                                    std::to_string(config_.input_dim) + "] input");
    }
    if (xv.shape[1] < min_rows()) {
        throw std::invalid_argument("SequenceNetwork: series of length " +
                                    std::to_string(xv.shape[1]) + " shorter than receptive " +
                                    "minimum " + std::to_string(min_rows()));
    }
    std::size_t cursor = 0;
    Tape::NodeId u = tape.lstm(x, p[cursor], p[cursor + 1], p[cursor + 2]);
    cursor += 3;
    Tape::NodeId c = x;
    for (std::size_t i = 0; i < config_.conv.size(); ++i) {
        c = tape.conv1d(c, p[cursor], p[cursor + 1], config_.conv[i].stride);
        cursor += 2;
        c = tape.elu(c);
    }
    Tape::NodeId v = tape.mean_over_time(c);
    Tape::NodeId z = tape.concat_last(u, v);
    for (std::size_t i = 0; i < config_.head.size(); ++i) {
        z = apply_dense(tape, z, p, cursor, Activation::elu);
    }
    Tape::NodeId pre = apply_dense(tape, z, p, cursor, Activation::linear);
    return tape.evidence_head(pre);
}

nn::Tensor stack_batch(const std::vector<Dataset>& datasets) {
    if (datasets.empty()) {
        throw std::invalid_argument("stack_batch: empty batch");
    }
    const std::size_t n = datasets[0].rows;
    const std::size_t d = datasets[0].cols;
    Tensor x({datasets.size(), n, d});
    for (std::size_t b = 0; b < datasets.size(); ++b) {
        const Dataset& ds = datasets[b];
        if (ds.rows != n || ds.cols != d) {
            throw std::invalid_argument("stack_batch: datasets disagree in shape");
        }
        std::copy(ds.values.begin(), ds.values.end(), x.data.begin() + b * n * d);
    }
    return x;
}

} // namespace evmc::arch
