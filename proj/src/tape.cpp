#include "evmc/tape.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <utility>
#include <stdexcept>

namespace evmc::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using Stride = Eigen::OuterStride<>;
using StridedConstMap = Eigen::Map<const RowMat, 0, Stride>;
using StridedMap = Eigen::Map<RowMat, 0, Stride>;

ConstMatMap as_matrix(const Tensor& t, std::size_t rows, std::size_t cols) {
    return ConstMatMap(t.data.data(), static_cast<Eigen::Index>(rows),
                       static_cast<Eigen::Index>(cols));
}

MatMap as_matrix(Tensor& t, std::size_t rows, std::size_t cols) {
    return MatMap(t.data.data(), static_cast<Eigen::Index>(rows),
                  static_cast<Eigen::Index>(cols));
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

} // namespace

Tape::NodeId Tape::push(Tensor value, bool requires_grad, std::function<void(Tape&)> backfn) {
    Node node;
    node.grad = Tensor::zeros_like(value);
    node.value = std::move(value);
    node.requires_grad = requires_grad;
    node.backfn = std::move(backfn);
    nodes_.push_back(std::move(node));
    return nodes_.size() - 1;
}

Tape::NodeId Tape::leaf(Tensor value, bool requires_grad) {
    return push(std::move(value), requires_grad, nullptr);
}

Tape::NodeId Tape::matmul(NodeId a, NodeId w) {
    const Tensor& av = nodes_[a].value;
    const Tensor& wv = nodes_[w].value;
    if (av.rank() < 2 || wv.rank() != 2 || av.shape.back() != wv.shape[0]) {
        throw std::invalid_argument("matmul: shape mismatch");
    }
    const std::size_t in = wv.shape[0];
    const std::size_t out = wv.shape[1];
    const std::size_t rows = av.numel() / in;

    std::vector<std::size_t> out_shape(av.shape);
    out_shape.back() = out;
    Tensor y(out_shape);
    as_matrix(y, rows, out).noalias() = as_matrix(av, rows, in) * as_matrix(wv, in, out);

    const bool needs = nodes_[a].requires_grad || nodes_[w].requires_grad;
    NodeId id = push(std::move(y), needs, nullptr);
    nodes_[id].backfn = [id, a, w, rows, in, out](Tape& t) {
        ConstMatMap gy = as_matrix(std::as_const(t.nodes_[id].grad), rows, out);
        ConstMatMap am = as_matrix(std::as_const(t.nodes_[a].value), rows, in);
        ConstMatMap wm = as_matrix(std::as_const(t.nodes_[w].value), in, out);
        as_matrix(t.grad_mut(a), rows, in).noalias() += gy * wm.transpose();
        as_matrix(t.grad_mut(w), in, out).noalias() += am.transpose() * gy;
    };
    return id;
}

Tape::NodeId Tape::add_row(NodeId x, NodeId bias) {
    const Tensor& xv = nodes_[x].value;
    const Tensor& bv = nodes_[bias].value;
    if (bv.rank() != 1 || xv.shape.back() != bv.shape[0]) {
        throw std::invalid_argument("add_row: shape mismatch");
    }
    const std::size_t w = bv.shape[0];
    const std::size_t rows = xv.numel() / w;
    Tensor y = xv;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
            y.data[r * w + c] += bv.data[c];
        }
    }
    const bool needs = nodes_[x].requires_grad || nodes_[bias].requires_grad;
    NodeId id = push(std::move(y), needs, nullptr);
    nodes_[id].backfn = [id, x, bias, rows, w](Tape& t) {
        const Tensor& gy = t.nodes_[id].grad;
        Tensor& gx = t.grad_mut(x);
        Tensor& gb = t.grad_mut(bias);
        for (std::size_t i = 0; i < gy.numel(); ++i) gx.data[i] += gy.data[i];
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < w; ++c) {
                gb.data[c] += gy.data[r * w + c];
            }
        }
    };
    return id;
}

Tape::NodeId Tape::elu(NodeId x) {
    const Tensor& xv = nodes_[x].value;
    Tensor y = xv;
    for (double& v : y.data) {
        if (v < 0.0) v = std::expm1(v);
    }
    NodeId id = push(std::move(y), nodes_[x].requires_grad, nullptr);
    nodes_[id].backfn = [id, x](Tape& t) {
        const Tensor& gy = t.nodes_[id].grad;
        const Tensor& yv = t.nodes_[id].value;
        const Tensor& xv2 = t.nodes_[x].value;
        Tensor& gx = t.grad_mut(x);
        for (std::size_t i = 0; i < gy.numel(); ++i) {
            const double d = xv2.data[i] > 0.0 ? 1.0 : yv.data[i] + 1.0;
            gx.data[i] += gy.data[i] * d;
        }
    };
    return id;
}

Tape::NodeId Tape::relu(NodeId x) {
    const Tensor& xv = nodes_[x].value;
    Tensor y = xv;
    for (double& v : y.data) {
        if (v < 0.0) v = 0.0;
    }
    NodeId id = push(std::move(y), nodes_[x].requires_grad, nullptr);
    nodes_[id].backfn = [id, x](Tape& t) {
        const Tensor& gy = t.nodes_[id].grad;
        const Tensor& xv2 = t.nodes_[x].value;
        Tensor& gx = t.grad_mut(x);
        for (std::size_t i = 0; i < gy.numel(); ++i) {
            if (xv2.data[i] > 0.0) gx.data[i] += gy.data[i];
        }
    };
    return id;
}

Tape::NodeId Tape::evidence_head(NodeId x) {
    const Tensor& xv = nodes_[x].value;
    Tensor y = xv;
    for (double& v : y.data) {
        if (v < 1.0) v = 1.0;
    }
    NodeId id = push(std::move(y), nodes_[x].requires_grad, nullptr);
    nodes_[id].backfn = [id, x](Tape& t) {
        const Tensor& gy = t.nodes_[id].grad;
        const Tensor& xv2 = t.nodes_[x].value;
        Tensor& gx = t.grad_mut(x);
        for (std::size_t i = 0; i < gy.numel(); ++i) {
            if (xv2.data[i] >= 1.0) gx.data[i] += gy.data[i];
        }
    };
    return id;
}

Tape::NodeId Tape::concat_last(NodeId a, NodeId b) {
    const Tensor& av = nodes_[a].value;
    const Tensor& bv = nodes_[b].value;
    if (av.rank() != bv.rank() || av.rank() < 1) {
        throw std::invalid_argument("concat_last: rank mismatch");
    }
    for (std::size_t i = 0; i + 1 < av.rank(); ++i) {
        if (av.shape[i] != bv.shape[i]) {
            throw std::invalid_argument("concat_last: leading shape mismatch");
        }
    }
    const std::size_t wa = av.shape.back();
    const std::size_t wb = bv.shape.back();
    const std::size_t rows = av.numel() / wa;
    std::vector<std::size_t> out_shape(av.shape);
    out_shape.back() = wa + wb;
    Tensor y(out_shape);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < wa; ++c) y.data[r * (wa + wb) + c] = av.data[r * wa + c];
        for (std::size_t c = 0; c < wb; ++c) y.data[r * (wa + wb) + wa + c] = bv.data[r * wb + c];
    }
    const bool needs = nodes_[a].requires_grad || nodes_[b].requires_grad;
    NodeId id = push(std::move(y), needs, nullptr);
    nodes_[id].backfn = [id, a, b, rows, wa, wb](Tape& t) {
        const Tensor& gy = t.nodes_[id].grad;
        Tensor& ga = t.grad_mut(a);
        Tensor& gb = t.grad_mut(b);
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < wa; ++c) ga.data[r * wa + c] += gy.data[r * (wa + wb) + c];
            for (std::size_t c = 0; c < wb; ++c) gb.data[r * wb + c] += gy.data[r * (wa + wb) + wa + c];
        }
    };
    return id;
}

Tape::NodeId Tape::sum_over_set(NodeId x) {
    const Tensor& xv = nodes_[x].value;
    if (xv.rank() != 3 || xv.shape[1] == 0) {
        throw std::invalid_argument("sum_over_set: need [B, N, h] with N >= 1");
    }
    const std::size_t b = xv.shape[0], n = xv.shape[1], h = xv.shape[2];
    Tensor y({b, h});
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t k = 0; k < h; ++k) {
                y.at(i, k) += xv.at(i, j, k);
            }
        }
    }
    NodeId id = push(std::move(y), nodes_[x].requires_grad, nullptr);
    nodes_[id].backfn = [id, x, b, n, h](Tape& t) {
        const Tensor& gy = t.nodes_[id].grad;
        Tensor& gx = t.grad_mut(x);
        for (std::size_t i = 0; i < b; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                for (std::size_t k = 0; k < h; ++k) {
                    gx.at(i, j, k) += gy.at(i, k);
                }
            }
        }
    };
    return id;
}

Tape::NodeId Tape::mean_over_time(NodeId x) {
    const Tensor& xv = nodes_[x].value;
    if (xv.rank() != 3 || xv.shape[1] == 0) {
        throw std::invalid_argument("mean_over_time: need [B, N, h] with N >= 1");
    }
    const std::size_t b = xv.shape[0], n = xv.shape[1], h = xv.shape[2];
    const double scale = 1.0 / static_cast<double>(n);
    Tensor y({b, h});
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t k = 0; k < h; ++k) {
                y.at(i, k) += xv.at(i, j, k) * scale;
            }
        }
    }
    NodeId id = push(std::move(y), nodes_[x].requires_grad, nullptr);
    nodes_[id].backfn = [id, x, b, n, h, scale](Tape& t) {
        const Tensor& gy = t.nodes_[id].grad;
        Tensor& gx = t.grad_mut(x);
        for (std::size_t i = 0; i < b; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                for (std::size_t k = 0; k < h; ++k) {
                    gx.at(i, j, k) += gy.at(i, k) * scale;
                }
            }
        }
    };
    return id;
}

Tape::NodeId Tape::broadcast_axis1(NodeId z, std::size_t n) {
    const Tensor& zv = nodes_[z].value;
    if (zv.rank() != 2 || n == 0) {
        throw std::invalid_argument("broadcast_axis1: need [B, h] and n >= 1");
    }
    const std::size_t b = zv.shape[0], h = zv.shape[1];
    Tensor y({b, n, h});
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t k = 0; k < h; ++k) {
                y.at(i, j, k) = zv.at(i, k);
            }
        }
    }
    NodeId id = push(std::move(y), nodes_[z].requires_grad, nullptr);
    nodes_[id].backfn = [id, z, b, n, h](Tape& t) {
        const Tensor& gy = t.nodes_[id].grad;
        Tensor& gz = t.grad_mut(z);
        for (std::size_t i = 0; i < b; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                for (std::size_t k = 0; k < h; ++k) {
                    gz.at(i, k) += gy.at(i, j, k);
                }
            }
        }
    };
    return id;
}

Tape::NodeId Tape::reshape(NodeId x, std::vector<std::size_t> shape) {
    const Tensor& xv = nodes_[x].value;
    if (shape_numel(shape) != xv.numel()) {
        throw std::invalid_argument("reshape: element count mismatch");
    }
    Tensor y = xv;
    y.shape = shape;
    NodeId id = push(std::move(y), nodes_[x].requires_grad, nullptr);
    nodes_[id].backfn = [id, x](Tape& t) {
        const Tensor& gy = t.nodes_[id].grad;
        Tensor& gx = t.grad_mut(x);
        for (std::size_t i = 0; i < gy.numel(); ++i) gx.data[i] += gy.data[i];
    };
    return id;
}

namespace {

struct LstmState {
    std::vector<RowMat> gates; // per step, [B, 4H] post-nonlinearity (i, f, g, o)
    std::vector<RowMat> cell;  // per step, [B, H]
    std::vector<RowMat> hidden; // per step, [B, H] (h_t)
};

} // namespace

Tape::NodeId Tape::lstm(NodeId x, NodeId wx, NodeId wh, NodeId b) {
    const Tensor& xv = nodes_[x].value;
    const Tensor& wxv = nodes_[wx].value;
    const Tensor& whv = nodes_[wh].value;
    const Tensor& bv = nodes_[b].value;
    if (xv.rank() != 3 || xv.shape[1] == 0) {
        throw std::invalid_argument("lstm: need input [B, N, d] with N >= 1");
    }
    const std::size_t batch = xv.shape[0], n = xv.shape[1], d = xv.shape[2];
    if (wxv.rank() != 2 || whv.rank() != 2 || bv.rank() != 1 || wxv.shape[0] != d ||
        whv.shape[1] != wxv.shape[1] || wxv.shape[1] % 4 != 0 ||
        whv.shape[0] * 4 != whv.shape[1] || bv.shape[0] != wxv.shape[1]) {
        throw std::invalid_argument("lstm: parameter shape mismatch");
    }
    const std::size_t hidden = whv.shape[0];
    const auto bi = static_cast<Eigen::Index>(batch);
    const auto hi = static_cast<Eigen::Index>(hidden);

    auto state = std::make_shared<LstmState>();
    state->gates.reserve(n);
    state->cell.reserve(n);
    state->hidden.reserve(n);

    ConstMatMap wxm = as_matrix(wxv, d, 4 * hidden);
    ConstMatMap whm = as_matrix(whv, hidden, 4 * hidden);
    Eigen::Map<const Eigen::RowVectorXd> bm(bv.data.data(), static_cast<Eigen::Index>(4 * hidden));

    RowMat h_prev = RowMat::Zero(bi, hi);
    RowMat c_prev = RowMat::Zero(bi, hi);
    RowMat gates(bi, static_cast<Eigen::Index>(4 * hidden));
    for (std::size_t t = 0; t < n; ++t) {
        StridedConstMap xt(xv.data.data() + t * d, bi, static_cast<Eigen::Index>(d),
                           Stride(static_cast<Eigen::Index>(n * d)));
        gates.noalias() = xt * wxm;
        gates.noalias() += h_prev * whm;
        gates.rowwise() += bm;
        RowMat ct(bi, hi);
        RowMat ht(bi, hi);
        for (Eigen::Index r = 0; r < bi; ++r) {
            for (Eigen::Index c = 0; c < hi; ++c) {
                const double ig = sigmoid(gates(r, c));
                const double fg = sigmoid(gates(r, hi + c));
                const double gg = std::tanh(gates(r, 2 * hi + c));
                const double og = sigmoid(gates(r, 3 * hi + c));
                gates(r, c) = ig;
                gates(r, hi + c) = fg;
                gates(r, 2 * hi + c) = gg;
                gates(r, 3 * hi + c) = og;
                const double cc = fg * c_prev(r, c) + ig * gg;
                ct(r, c) = cc;
                ht(r, c) = og * std::tanh(cc);
            }
        }
        state->gates.push_back(gates);
        state->cell.push_back(ct);
        state->hidden.push_back(ht);
        h_prev = ht;
        c_prev = std::move(ct);
    }

    Tensor y({batch, hidden});
    MatMap(y.data.data(), bi, hi) = h_prev;
    if (!y.all_finite()) {
        throw std::runtime_error("lstm: non-finite hidden state (batch=" +
                                 std::to_string(batch) + ", steps=" + std::to_string(n) + ")");
    }

    const bool needs = nodes_[x].requires_grad || nodes_[wx].requires_grad ||
                       nodes_[wh].requires_grad || nodes_[b].requires_grad;
    NodeId id = push(std::move(y), needs, nullptr);
    nodes_[id].backfn = [id, x, wx, wh, b, state, batch, n, d, hidden](Tape& t) {
        const auto bi2 = static_cast<Eigen::Index>(batch);
        const auto hi2 = static_cast<Eigen::Index>(hidden);
        const Tensor& xv2 = t.nodes_[x].value;
        ConstMatMap wxm2 = as_matrix(std::as_const(t.nodes_[wx].value), d, 4 * hidden);
        ConstMatMap whm2 = as_matrix(std::as_const(t.nodes_[wh].value), hidden, 4 * hidden);
        MatMap gwx = as_matrix(t.grad_mut(wx), d, 4 * hidden);
        MatMap gwh = as_matrix(t.grad_mut(wh), hidden, 4 * hidden);
        Eigen::Map<Eigen::RowVectorXd> gb(t.grad_mut(b).data.data(),
                                          static_cast<Eigen::Index>(4 * hidden));
        Tensor& gx = t.grad_mut(x);

        RowMat dh = ConstMatMap(t.nodes_[id].grad.data.data(), bi2, hi2);
        RowMat dc = RowMat::Zero(bi2, hi2);
        RowMat dgates(bi2, static_cast<Eigen::Index>(4 * hidden));
        for (std::size_t step = n; step-- > 0;) {
            const RowMat& g = state->gates[step];
            const RowMat& ct = state->cell[step];
            for (Eigen::Index r = 0; r < bi2; ++r) {
                for (Eigen::Index c = 0; c < hi2; ++c) {
                    const double ig = g(r, c);
                    const double fg = g(r, hi2 + c);
                    const double gg = g(r, 2 * hi2 + c);
                    const double og = g(r, 3 * hi2 + c);
                    const double tc = std::tanh(ct(r, c));
                    const double dout = dh(r, c);
                    const double dcell = dc(r, c) + dout * og * (1.0 - tc * tc);
                    const double cprev = step == 0 ? 0.0 : state->cell[step - 1](r, c);
                    dgates(r, c) = dcell * gg * ig * (1.0 - ig);
                    dgates(r, hi2 + c) = dcell * cprev * fg * (1.0 - fg);
                    dgates(r, 2 * hi2 + c) = dcell * ig * (1.0 - gg * gg);
                    dgates(r, 3 * hi2 + c) = dout * tc * og * (1.0 - og);
                    dc(r, c) = dcell * fg;
                }
            }
            StridedConstMap xt(xv2.data.data() + step * d, bi2, static_cast<Eigen::Index>(d),
                               Stride(static_cast<Eigen::Index>(n * d)));
            gwx.noalias() += xt.transpose() * dgates;
            if (step > 0) {
                gwh.noalias() += state->hidden[step - 1].transpose() * dgates;
            }
            gb += dgates.colwise().sum();
            StridedMap gxt(gx.data.data() + step * d, bi2, static_cast<Eigen::Index>(d),
                           Stride(static_cast<Eigen::Index>(n * d)));
            gxt.noalias() += dgates * wxm2.transpose();
            dh.noalias() = dgates * whm2.transpose();
        }
    };
    return id;
}

Tape::NodeId Tape::conv1d(NodeId x, NodeId kernel, NodeId bias, std::size_t stride) {
    const Tensor& xv = nodes_[x].value;
    const Tensor& kv = nodes_[kernel].value;
    const Tensor& bv = nodes_[bias].value;
    if (xv.rank() != 3 || kv.rank() != 3 || bv.rank() != 1 || stride == 0) {
        throw std::invalid_argument("conv1d: bad arguments");
    }
    const std::size_t batch = xv.shape[0], n = xv.shape[1], d = xv.shape[2];
    const std::size_t k = kv.shape[0], f = kv.shape[2];
    if (kv.shape[1] != d || bv.shape[0] != f) {
        throw std::invalid_argument("conv1d: kernel shape mismatch");
    }
    if (n < k) {
        throw std::invalid_argument("conv1d: series shorter than kernel");
    }
    const std::size_t n_out = (n - k) / stride + 1;
    const std::size_t patch = k * d;

    Tensor y({batch, n_out, f});
    ConstMatMap km = as_matrix(kv, patch, f);
    Eigen::Map<const Eigen::RowVectorXd> bm(bv.data.data(), static_cast<Eigen::Index>(f));
    for (std::size_t i = 0; i < batch; ++i) {
        StridedConstMap patches(xv.data.data() + i * n * d, static_cast<Eigen::Index>(n_out),
                                static_cast<Eigen::Index>(patch),
                                Stride(static_cast<Eigen::Index>(stride * d)));
        MatMap yi(y.data.data() + i * n_out * f, static_cast<Eigen::Index>(n_out),
                  static_cast<Eigen::Index>(f));
        yi.noalias() = patches * km;
        yi.rowwise() += bm;
    }

    const bool needs = nodes_[x].requires_grad || nodes_[kernel].requires_grad ||
                       nodes_[bias].requires_grad;
    NodeId id = push(std::move(y), needs, nullptr);
    nodes_[id].backfn = [id, x, kernel, bias, stride, batch, n, d, k, f, n_out, patch](Tape& t) {
        const Tensor& gy = t.nodes_[id].grad;
        const Tensor& xv2 = t.nodes_[x].value;
        ConstMatMap km2 = as_matrix(std::as_const(t.nodes_[kernel].value), patch, f);
        MatMap gk = as_matrix(t.grad_mut(kernel), patch, f);
        Eigen::Map<Eigen::RowVectorXd> gb(t.grad_mut(bias).data.data(),
                                          static_cast<Eigen::Index>(f));
        Tensor& gx = t.grad_mut(x);
        RowMat dpatches(static_cast<Eigen::Index>(n_out), static_cast<Eigen::Index>(patch));
        for (std::size_t i = 0; i < batch; ++i) {
            ConstMatMap gyi(gy.data.data() + i * n_out * f, static_cast<Eigen::Index>(n_out),
                            static_cast<Eigen::Index>(f));
            StridedConstMap patches(xv2.data.data() + i * n * d, static_cast<Eigen::Index>(n_out),
                                    static_cast<Eigen::Index>(patch),
                                    Stride(static_cast<Eigen::Index>(stride * d)));
            gk.noalias() += patches.transpose() * gyi;
            gb += gyi.colwise().sum();
            dpatches.noalias() = gyi * km2.transpose();
            // Scatter-add: patches can overlap when stride < k.
            for (std::size_t p = 0; p < n_out; ++p) {
                double* dst = gx.data.data() + (i * n + p * stride) * d;
                for (std::size_t q = 0; q < patch; ++q) {
                    dst[q] += dpatches(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q));
                }
            }
        }
    };
    return id;
}

Tape::NodeId Tape::dense(NodeId x, NodeId w, NodeId b, Activation act) {
    const Tensor& xv = nodes_[x].value;
    const Tensor& wv = nodes_[w].value;
    const Tensor& bv = nodes_[b].value;
    if (xv.rank() < 2 || wv.rank() != 2 || xv.shape.back() != wv.shape[0] ||
        bv.rank() != 1 || bv.shape[0] != wv.shape[1]) {
        throw std::invalid_argument("dense: shape mismatch");
    }
    const std::size_t in = wv.shape[0];
    const std::size_t out = wv.shape[1];
    const std::size_t rows = xv.numel() / in;

    std::vector<std::size_t> out_shape(xv.shape);
    out_shape.back() = out;
    Tensor y(out_shape);
    {
        MatMap ym = as_matrix(y, rows, out);
        ym.noalias() = as_matrix(xv, rows, in) * as_matrix(wv, in, out);
        ym.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(
            bv.data.data(), static_cast<Eigen::Index>(out));
        switch (act) {
            case Activation::linear:
                break;
            case Activation::elu:
                for (double& v : y.data) {
                    if (v < 0.0) v = std::expm1(v);
                }
                break;
            case Activation::relu:
                for (double& v : y.data) {
                    if (v < 0.0) v = 0.0;
                }
                break;
        }
    }

    const bool needs = nodes_[x].requires_grad || nodes_[w].requires_grad ||
                       nodes_[b].requires_grad;
    NodeId id = push(std::move(y), needs, nullptr);
    // The activation derivative is recoverable from the output alone:
    // elu'(pre) = y + 1 on the negative branch, relu' = [y > 0].
    nodes_[id].backfn = [id, x, w, b, rows, in, out, act](Tape& t) {
        const Tensor& yv = t.nodes_[id].value;
        const Tensor& gy = t.nodes_[id].grad;
        RowMat dpre(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(out));
        switch (act) {
            case Activation::linear:
                dpre = as_matrix(std::as_const(gy), rows, out);
                break;
            case Activation::elu:
                for (std::size_t i = 0; i < gy.numel(); ++i) {
                    const double d = yv.data[i] > 0.0 ? 1.0 : yv.data[i] + 1.0;
                    dpre(static_cast<Eigen::Index>(i / out),
                         static_cast<Eigen::Index>(i % out)) = gy.data[i] * d;
                }
                break;
            case Activation::relu:
                for (std::size_t i = 0; i < gy.numel(); ++i) {
                    dpre(static_cast<Eigen::Index>(i / out),
                         static_cast<Eigen::Index>(i % out)) =
                        yv.data[i] > 0.0 ? gy.data[i] : 0.0;
                }
                break;
        }
        ConstMatMap xm = as_matrix(std::as_const(t.nodes_[x].value), rows, in);
        ConstMatMap wm = as_matrix(std::as_const(t.nodes_[w].value), in, out);
        as_matrix(t.grad_mut(x), rows, in).noalias() += dpre * wm.transpose();
        as_matrix(t.grad_mut(w), in, out).noalias() += xm.transpose() * dpre;
        Eigen::Map<Eigen::RowVectorXd>(t.grad_mut(b).data.data(),
                                       static_cast<Eigen::Index>(out)) +=
            dpre.colwise().sum();
    };
    return id;
}

void Tape::backward(NodeId root, const Tensor& seed) {
    if (!seed.same_shape(nodes_[root].value)) {
        throw std::invalid_argument("backward: seed shape mismatch");
    }
    Tensor& g = grad_mut(root);
    for (std::size_t i = 0; i < g.numel(); ++i) g.data[i] += seed.data[i];
    for (std::size_t i = root + 1; i-- > 0;) {
        if (nodes_[i].backfn && nodes_[i].requires_grad) {
            nodes_[i].backfn(*this);
        }
    }
}

} // namespace evmc::nn
