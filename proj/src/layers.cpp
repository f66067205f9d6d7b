#include "seqcast/layers.hpp"

#include <cmath>
#include <cstring>

#include "seqcast/error.hpp"

namespace seqcast {

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
    if (t.rank() != rank) {
        raise(ErrorKind::shape, std::string(what) + ": expected rank " + std::to_string(rank) +
                                    ", got shape " + t.shape_str());
    }
}

} // namespace

// ---------------------------------------------------------------------------
// Conv1D
// ---------------------------------------------------------------------------

Conv1DParams Conv1DParams::init(std::size_t filters, std::size_t kernel, std::size_t in_channels,
                                Rng& rng) {
    Conv1DParams p;
    const double limit = std::sqrt(1.0 / static_cast<double>(kernel * in_channels));
    p.kernels = uniform_init(rng, {filters, kernel, in_channels}, limit);
    p.bias = Tensor({filters});
    return p;
}

Tensor conv1d_forward(const Tensor& x, const Conv1DParams& p, Conv1DCache* cache) {
    require_rank(x, 2, "conv1d input");
    const std::size_t T = x.dim(0);
    const std::size_t C = x.dim(1);
    const std::size_t F = p.filters();
    const std::size_t K = p.kernel();
    if (C != p.in_channels()) {
        raise(ErrorKind::shape, "conv1d input has " + std::to_string(C) + " channels, layer expects " +
                                    std::to_string(p.in_channels()));
    }
    if (T < K) {
        raise(ErrorKind::shape, "conv1d input length " + std::to_string(T) +
                                    " shorter than kernel " + std::to_string(K));
    }
    const std::size_t To = T - K + 1;

    Tensor pre({To, F});
    const double* xd = x.data();
    const double* kd = p.kernels.data();
    const double* bd = p.bias.data();
    for (std::size_t t = 0; t < To; ++t) {
        double* out_row = pre.data() + t * F;
        for (std::size_t f = 0; f < F; ++f) {
            double acc = 0.0;
            const double* kf = kd + f * K * C;
            for (std::size_t j = 0; j < K; ++j) {
                const double* xr = xd + (t + j) * C;
                const double* kr = kf + j * C;
                for (std::size_t c = 0; c < C; ++c) acc += kr[c] * xr[c];
            }
            out_row[f] = acc + bd[f];
        }
    }

    Tensor out({To, F});
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = pre[i] > 0.0 ? pre[i] : 0.0;
    if (cache) {
        cache->input = x;
        cache->preact = std::move(pre);
    }
    detail::debug_check_finite(out, "conv1d");
    return out;
}

Conv1DGrads conv1d_backward(const Conv1DParams& p, const Conv1DCache& cache,
                            const Tensor& upstream) {
    if (!upstream.same_shape(cache.preact)) {
        raise(ErrorKind::shape, "conv1d upstream shape " + upstream.shape_str() +
                                    " does not match output shape " + cache.preact.shape_str());
    }
    const std::size_t To = cache.preact.dim(0);
    const std::size_t F = p.filters();
    const std::size_t K = p.kernel();
    const std::size_t C = p.in_channels();

    Conv1DGrads g;
    g.kernels = Tensor({F, K, C});
    g.bias = Tensor({F});
    g.input = Tensor(cache.input.shape());

    const double* xd = cache.input.data();
    const double* kd = p.kernels.data();
    for (std::size_t t = 0; t < To; ++t) {
        for (std::size_t f = 0; f < F; ++f) {
            if (cache.preact.at(t, f) <= 0.0) continue; // relu'(0) = 0
            const double dz = upstream.at(t, f);
            g.bias[f] += dz;
            double* gkf = g.kernels.data() + f * K * C;
            const double* kf = kd + f * K * C;
            for (std::size_t j = 0; j < K; ++j) {
                const double* xr = xd + (t + j) * C;
                double* gxr = g.input.data() + (t + j) * C;
                double* gkr = gkf + j * C;
                const double* kr = kf + j * C;
                for (std::size_t c = 0; c < C; ++c) {
                    gkr[c] += dz * xr[c];
                    gxr[c] += dz * kr[c];
                }
            }
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// Shape bridges
// ---------------------------------------------------------------------------

Tensor flatten(const Tensor& x) {
    require_rank(x, 2, "flatten input");
    return x.reshaped({x.size()});
}

Tensor repeat_vector(const Tensor& v, std::size_t n) {
    require_rank(v, 1, "repeat_vector input");
    if (n == 0) raise(ErrorKind::shape, "repeat_vector needs a positive repeat count");
    const std::size_t D = v.dim(0);
    Tensor out({n, D});
    for (std::size_t i = 0; i < n; ++i)
        std::memcpy(out.data() + i * D, v.data(), D * sizeof(double));
    return out;
}

Tensor repeat_vector_backward(const Tensor& upstream) {
    require_rank(upstream, 2, "repeat_vector upstream");
    const std::size_t n = upstream.dim(0);
    const std::size_t D = upstream.dim(1);
    Tensor out({D});
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = upstream.data() + i * D;
        for (std::size_t d = 0; d < D; ++d) out[d] += row[d];
    }
    return out;
}

// ---------------------------------------------------------------------------
// LSTM
// ---------------------------------------------------------------------------

LSTMParams LSTMParams::init(std::size_t units, std::size_t in_dim, Rng& rng) {
    LSTMParams p;
    const double wlim = std::sqrt(1.0 / static_cast<double>(in_dim));
    const double ulim = std::sqrt(1.0 / static_cast<double>(units));
    // Draw order is part of the reproducibility contract: per gate
    // (input, forget, cell, output), input weights then recurrent weights.
    for (std::size_t gi = 0; gi < 4; ++gi) {
        p.W[gi] = uniform_init(rng, {units, in_dim}, wlim);
        p.U[gi] = uniform_init(rng, {units, units}, ulim);
        p.b[gi] = Tensor({units});
    }
    for (std::size_t r = 0; r < units; ++r) p.b[kForget][r] = 1.0;
    return p;
}

namespace {

/// One recurrence shared by both forward entry points. `wx` holds the
/// per-gate input projections W*x_t for every step: row t when
/// `repeated` is false, row 0 always when true.
Tensor lstm_run(const std::array<Tensor, 4>& wx, bool repeated, std::size_t T,
                const LSTMParams& p, bool return_sequences, LSTMCache* cache) {
    const std::size_t u = p.units();
    std::array<Tensor, 4> gates;
    for (auto& g : gates) g = Tensor({T, u});
    Tensor c({T, u}), tanh_c({T, u}), h({T, u});

    std::vector<double> pre(4 * u);
    const double* h_prev = nullptr; // null encodes the zero initial state
    const double* c_prev = nullptr;
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t gi = 0; gi < 4; ++gi) {
            const double* wxt = wx[gi].data() + (repeated ? 0 : t * u);
            const double* bg = p.b[gi].data();
            const double* Ug = p.U[gi].data();
            double* pg = pre.data() + gi * u;
            for (std::size_t r = 0; r < u; ++r) {
                double acc = wxt[r];
                if (h_prev) {
                    const double* ur = Ug + r * u;
                    for (std::size_t q = 0; q < u; ++q) acc += ur[q] * h_prev[q];
                }
                pg[r] = acc + bg[r];
            }
        }
        double* it = gates[kInput].data() + t * u;
        double* ft = gates[kForget].data() + t * u;
        double* gt = gates[kCell].data() + t * u;
        double* ot = gates[kOutput].data() + t * u;
        double* ct = c.data() + t * u;
        double* tct = tanh_c.data() + t * u;
        double* ht = h.data() + t * u;
        for (std::size_t r = 0; r < u; ++r) {
            it[r] = sigmoid_scalar(pre[kInput * u + r]);
            ft[r] = sigmoid_scalar(pre[kForget * u + r]);
            gt[r] = std::tanh(pre[kCell * u + r]);
            ot[r] = sigmoid_scalar(pre[kOutput * u + r]);
            ct[r] = (c_prev ? ft[r] * c_prev[r] : 0.0) + it[r] * gt[r];
            tct[r] = std::tanh(ct[r]);
            ht[r] = ot[r] * tct[r];
        }
        h_prev = ht;
        c_prev = ct;
    }

    Tensor out;
    if (return_sequences) {
        out = h;
    } else {
        out = Tensor({u});
        std::memcpy(out.data(), h.data() + (T - 1) * u, u * sizeof(double));
    }
    if (cache) {
        cache->steps = T;
        cache->input_repeated = repeated;
        cache->gates = std::move(gates);
        cache->c = std::move(c);
        cache->tanh_c = std::move(tanh_c);
        cache->h = std::move(h);
    }
    detail::debug_check_finite(out, "lstm");
    return out;
}

void project_input(const Tensor& x, const LSTMParams& p, std::array<Tensor, 4>& wx) {
    const std::size_t T = x.dim(0);
    const std::size_t D = x.dim(1);
    const std::size_t u = p.units();
    for (std::size_t gi = 0; gi < 4; ++gi) {
        wx[gi] = Tensor({T, u});
        const double* Wg = p.W[gi].data();
        for (std::size_t t = 0; t < T; ++t) {
            const double* xt = x.data() + t * D;
            double* row = wx[gi].data() + t * u;
            for (std::size_t r = 0; r < u; ++r) {
                const double* wr = Wg + r * D;
                double acc = 0.0;
                for (std::size_t d = 0; d < D; ++d) acc += wr[d] * xt[d];
                row[r] = acc;
            }
        }
    }
}

} // namespace

Tensor lstm_forward(const Tensor& x, const LSTMParams& p, bool return_sequences,
                    LSTMCache* cache) {
    require_rank(x, 2, "lstm input");
    if (x.dim(1) != p.in_dim()) {
        raise(ErrorKind::shape, "lstm input has " + std::to_string(x.dim(1)) +
                                    " features, layer expects " + std::to_string(p.in_dim()));
    }
    if (x.dim(0) == 0) raise(ErrorKind::shape, "lstm input has no time steps");
    std::array<Tensor, 4> wx;
    project_input(x, p, wx);
    if (cache) cache->x = x;
    return lstm_run(wx, false, x.dim(0), p, return_sequences, cache);
}

Tensor lstm_forward_repeated(const Tensor& row, std::size_t steps, const LSTMParams& p,
                             bool return_sequences, LSTMCache* cache) {
    require_rank(row, 1, "lstm repeated input");
    if (row.dim(0) != p.in_dim()) {
        raise(ErrorKind::shape, "lstm input has " + std::to_string(row.dim(0)) +
                                    " features, layer expects " + std::to_string(p.in_dim()));
    }
    if (steps == 0) raise(ErrorKind::shape, "lstm input has no time steps");
    Tensor x1 = row.reshaped({1, row.dim(0)});
    std::array<Tensor, 4> wx;
    project_input(x1, p, wx);
    if (cache) cache->x = x1;
    return lstm_run(wx, true, steps, p, return_sequences, cache);
}

LSTMGrads lstm_backward(const LSTMParams& p, const LSTMCache& cache, const Tensor& upstream) {
    const std::size_t T = cache.steps;
    const std::size_t u = p.units();
    const std::size_t D = p.in_dim();
    const bool seq = upstream.rank() == 2;
    if (seq) {
        if (upstream.dim(0) != T || upstream.dim(1) != u) {
            raise(ErrorKind::shape, "lstm upstream shape " + upstream.shape_str() +
                                        " does not match output [" + std::to_string(T) + " x " +
                                        std::to_string(u) + "]");
        }
    } else if (upstream.rank() != 1 || upstream.dim(0) != u) {
        raise(ErrorKind::shape,
              "lstm upstream shape " + upstream.shape_str() + " does not match final state size " +
                  std::to_string(u));
    }

    LSTMGrads g;
    for (std::size_t gi = 0; gi < 4; ++gi) {
        g.W[gi] = Tensor({u, D});
        g.U[gi] = Tensor({u, u});
        g.b[gi] = Tensor({u});
    }
    g.input = cache.input_repeated ? Tensor({D}) : Tensor({T, D});

    std::vector<double> dh_next(u, 0.0), dc_next(u, 0.0), dh(u), dc(u);
    std::array<std::vector<double>, 4> gpre;
    for (auto& v : gpre) v.assign(u, 0.0);
    // Input-projection gradients accumulate over time as plain gate sums;
    // for the repeated form that sum is all dW and dx need.
    std::array<std::vector<double>, 4> gsum;
    if (cache.input_repeated)
        for (auto& v : gsum) v.assign(u, 0.0);

    const double* xd = cache.x.data();
    for (std::size_t t = T; t-- > 0;) {
        const double* it = cache.gates[kInput].data() + t * u;
        const double* ft = cache.gates[kForget].data() + t * u;
        const double* gt = cache.gates[kCell].data() + t * u;
        const double* ot = cache.gates[kOutput].data() + t * u;
        const double* tct = cache.tanh_c.data() + t * u;
        const double* c_prev = t > 0 ? cache.c.data() + (t - 1) * u : nullptr;
        const double* h_prev = t > 0 ? cache.h.data() + (t - 1) * u : nullptr;

        for (std::size_t r = 0; r < u; ++r) {
            double d = dh_next[r];
            if (seq)
                d += upstream.at(t, r);
            else if (t == T - 1)
                d += upstream[r];
            dh[r] = d;
            dc[r] = dc_next[r] + d * ot[r] * (1.0 - tct[r] * tct[r]);
            gpre[kOutput][r] = d * tct[r] * ot[r] * (1.0 - ot[r]);
            gpre[kInput][r] = dc[r] * gt[r] * it[r] * (1.0 - it[r]);
            gpre[kForget][r] = c_prev ? dc[r] * c_prev[r] * ft[r] * (1.0 - ft[r]) : 0.0;
            gpre[kCell][r] = dc[r] * it[r] * (1.0 - gt[r] * gt[r]);
            dc_next[r] = dc[r] * ft[r];
        }

        std::fill(dh_next.begin(), dh_next.end(), 0.0);
        for (std::size_t gi = 0; gi < 4; ++gi) {
            const double* pg = gpre[gi].data();
            double* db = g.b[gi].data();
            const double* Ug = p.U[gi].data();
            double* dU = g.U[gi].data();
            for (std::size_t r = 0; r < u; ++r) {
                const double pr = pg[r];
                if (pr == 0.0) continue;
                db[r] += pr;
                const double* ur = Ug + r * u;
                if (h_prev) {
                    double* dur = dU + r * u;
                    for (std::size_t q = 0; q < u; ++q) {
                        dur[q] += pr * h_prev[q];
                        dh_next[q] += pr * ur[q];
                    }
                } else {
                    for (std::size_t q = 0; q < u; ++q) dh_next[q] += pr * ur[q];
                }
            }
            if (cache.input_repeated) {
                double* sg = gsum[gi].data();
                for (std::size_t r = 0; r < u; ++r) sg[r] += pg[r];
            } else {
                const double* xt = xd + t * D;
                double* dxt = g.input.data() + t * D;
                const double* Wg = p.W[gi].data();
                double* dW = g.W[gi].data();
                for (std::size_t r = 0; r < u; ++r) {
                    const double pr = pg[r];
                    if (pr == 0.0) continue;
                    const double* wr = Wg + r * D;
                    double* dwr = dW + r * D;
                    for (std::size_t d = 0; d < D; ++d) {
                        dwr[d] += pr * xt[d];
                        dxt[d] += pr * wr[d];
                    }
                }
            }
        }
    }

    if (cache.input_repeated) {
        for (std::size_t gi = 0; gi < 4; ++gi) {
            const double* sg = gsum[gi].data();
            const double* Wg = p.W[gi].data();
            double* dW = g.W[gi].data();
            for (std::size_t r = 0; r < u; ++r) {
                const double sr = sg[r];
                const double* wr = Wg + r * D;
                double* dwr = dW + r * D;
                for (std::size_t d = 0; d < D; ++d) {
                    dwr[d] += sr * xd[d];
                    g.input[d] += sr * wr[d];
                }
            }
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// Bidirectional LSTM
// ---------------------------------------------------------------------------

BiLSTMParams BiLSTMParams::init(std::size_t units, std::size_t in_dim, Rng& rng) {
    BiLSTMParams p;
    p.forward = LSTMParams::init(units, in_dim, rng);
    p.backward = LSTMParams::init(units, in_dim, rng);
    return p;
}

Tensor reverse_rows(const Tensor& x) {
    require_rank(x, 2, "reverse_rows input");
    const std::size_t T = x.dim(0);
    const std::size_t D = x.dim(1);
    Tensor out({T, D});
    for (std::size_t t = 0; t < T; ++t)
        std::memcpy(out.data() + t * D, x.data() + (T - 1 - t) * D, D * sizeof(double));
    return out;
}

Tensor bilstm_forward(const Tensor& x, const BiLSTMParams& p, BiLSTMCache* cache) {
    const std::size_t u = p.units();
    Tensor hf = lstm_forward(x, p.forward, false, cache ? &cache->forward : nullptr);
    Tensor hb =
        lstm_forward(reverse_rows(x), p.backward, false, cache ? &cache->backward : nullptr);
    Tensor out({2 * u});
    std::memcpy(out.data(), hf.data(), u * sizeof(double));
    std::memcpy(out.data() + u, hb.data(), u * sizeof(double));
    return out;
}

BiLSTMGrads bilstm_backward(const BiLSTMParams& p, const BiLSTMCache& cache,
                            const Tensor& upstream) {
    const std::size_t u = p.units();
    if (upstream.rank() != 1 || upstream.dim(0) != 2 * u) {
        raise(ErrorKind::shape, "bilstm upstream shape " + upstream.shape_str() +
                                    " does not match output size " + std::to_string(2 * u));
    }
    Tensor uf({u}), ub({u});
    std::memcpy(uf.data(), upstream.data(), u * sizeof(double));
    std::memcpy(ub.data(), upstream.data() + u, u * sizeof(double));

    BiLSTMGrads g;
    g.forward = lstm_backward(p.forward, cache.forward, uf);
    g.backward = lstm_backward(p.backward, cache.backward, ub);
    g.input = add(g.forward.input, reverse_rows(g.backward.input));
    return g;
}

// ---------------------------------------------------------------------------
// Dropout
// ---------------------------------------------------------------------------

Tensor dropout(const Tensor& x, double rate, bool train, Rng& rng, DropoutCache* cache) {
    if (!(rate >= 0.0 && rate < 1.0)) {
        raise(ErrorKind::value, "dropout rate must be in [0, 1), got " + std::to_string(rate));
    }
    if (!train || rate == 0.0) {
        if (cache) {
            cache->identity = true;
            cache->mask = Tensor();
        }
        return x;
    }
    const double scale = 1.0 / (1.0 - rate);
    Tensor mask(x.shape());
    for (std::size_t i = 0; i < mask.size(); ++i)
        mask[i] = rng.next_double() < rate ? 0.0 : scale;
    Tensor out = mul(x, mask);
    if (cache) {
        cache->identity = false;
        cache->mask = std::move(mask);
    }
    return out;
}

Tensor dropout_backward(const DropoutCache& cache, const Tensor& upstream) {
    if (cache.identity) return upstream;
    if (!upstream.same_shape(cache.mask)) {
        raise(ErrorKind::shape, "dropout upstream shape " + upstream.shape_str() +
                                    " does not match mask shape " + cache.mask.shape_str());
    }
    return mul(upstream, cache.mask);
}

// ---------------------------------------------------------------------------
// Dense
// ---------------------------------------------------------------------------

DenseParams DenseParams::init(std::size_t out, std::size_t in, Rng& rng) {
    DenseParams p;
    p.W = uniform_init(rng, {out, in}, std::sqrt(1.0 / static_cast<double>(in)));
    p.b = Tensor({out});
    return p;
}

Tensor dense_forward(const Tensor& x, const DenseParams& p, Activation act, DenseCache* cache) {
    require_rank(x, 1, "dense input");
    const std::size_t in = p.in_dim();
    const std::size_t out = p.out_dim();
    if (x.dim(0) != in) {
        raise(ErrorKind::shape, "dense input has " + std::to_string(x.dim(0)) +
                                    " features, layer expects " + std::to_string(in));
    }
    Tensor pre({out});
    for (std::size_t r = 0; r < out; ++r) {
        const double* wr = p.W.data() + r * in;
        double acc = 0.0;
        for (std::size_t d = 0; d < in; ++d) acc += wr[d] * x[d];
        pre[r] = acc + p.b[r];
    }
    Tensor y = act == Activation::relu ? relu(pre) : pre;
    if (cache) {
        cache->input = x;
        cache->preact = std::move(pre);
    }
    detail::debug_check_finite(y, "dense");
    return y;
}

DenseGrads dense_backward(const DenseParams& p, const DenseCache& cache, Activation act,
                          const Tensor& upstream) {
    const std::size_t in = p.in_dim();
    const std::size_t out = p.out_dim();
    if (upstream.rank() != 1 || upstream.dim(0) != out) {
        raise(ErrorKind::shape, "dense upstream shape " + upstream.shape_str() +
                                    " does not match output size " + std::to_string(out));
    }
    DenseGrads g;
    g.W = Tensor({out, in});
    g.b = Tensor({out});
    g.input = Tensor({in});
    for (std::size_t r = 0; r < out; ++r) {
        double dz = upstream[r];
        if (act == Activation::relu && cache.preact[r] <= 0.0) dz = 0.0;
        if (dz == 0.0) continue;
        g.b[r] = dz;
        const double* xr = cache.input.data();
        double* dwr = g.W.data() + r * in;
        const double* wr = p.W.data() + r * in;
        for (std::size_t d = 0; d < in; ++d) {
            dwr[d] = dz * xr[d];
            g.input[d] += dz * wr[d];
        }
    }
    return g;
}

} // namespace seqcast
