#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "seqcast/error.hpp"
#include "seqcast/layers.hpp"
#include "seqcast/rng.hpp"
#include "seqcast/tensor.hpp"

using namespace seqcast;
using testutil::all_close;
using testutil::bit_equal;
using testutil::close;
using testutil::fd_grad;

namespace {

// Scalar-arithmetic convolution written independently of the library loops.
Tensor oracle_conv1d(const Tensor& x, const Conv1DParams& p) {
    const std::size_t steps = x.dim(0) - p.kernel() + 1;
    Tensor out({steps, p.filters()});
    for (std::size_t t = 0; t < steps; ++t)
        for (std::size_t f = 0; f < p.filters(); ++f) {
            double acc = 0.0;
            for (std::size_t j = 0; j < p.kernel(); ++j)
                for (std::size_t c = 0; c < p.in_channels(); ++c)
                    acc += p.kernels.at(f, j, c) * x.at(t + j, c);
            acc += p.bias[f];
            out.at(t, f) = acc > 0.0 ? acc : 0.0;
        }
    return out;
}

// Step-by-step scalar LSTM following the textbook recurrence.
Tensor oracle_lstm(const Tensor& x, const LSTMParams& p, bool return_sequences) {
    const std::size_t T = x.dim(0), D = x.dim(1), u = p.units();
    std::vector<double> h(u, 0.0), c(u, 0.0);
    Tensor seq({T, u});
    for (std::size_t t = 0; t < T; ++t) {
        std::vector<std::vector<double>> pre(4, std::vector<double>(u, 0.0));
        for (std::size_t g = 0; g < 4; ++g)
            for (std::size_t i = 0; i < u; ++i) {
                double acc = 0.0;
                for (std::size_t d = 0; d < D; ++d) acc += p.W[g].at(i, d) * x.at(t, d);
                for (std::size_t q = 0; q < u; ++q) acc += p.U[g].at(i, q) * h[q];
                acc += p.b[g][i];
                pre[g][i] = acc;
            }
        for (std::size_t i = 0; i < u; ++i) {
            const double gi = 1.0 / (1.0 + std::exp(-pre[kInput][i]));
            const double gf = 1.0 / (1.0 + std::exp(-pre[kForget][i]));
            const double gc = std::tanh(pre[kCell][i]);
            const double go = 1.0 / (1.0 + std::exp(-pre[kOutput][i]));
            c[i] = gf * c[i] + gi * gc;
            h[i] = go * std::tanh(c[i]);
            seq.at(t, i) = h[i];
        }
    }
    if (return_sequences) return seq;
    Tensor last({u});
    for (std::size_t i = 0; i < u; ++i) last[i] = h[i];
    return last;
}

double sum_all(const Tensor& t) {
    double s = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) s += t[i];
    return s;
}

// Weighted sum of outputs: a generic scalar functional whose analytic
// gradient is the upstream tensor `w` itself.
double weighted(const Tensor& out, const Tensor& w) {
    REQUIRE(out.size() == w.size());
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * w[i];
    return s;
}

} // namespace

// ---------------------------------------------------------------------------
// Conv1D
// ---------------------------------------------------------------------------

TEST_CASE("conv worked example: x=[1,2,3], kernel [1,1] is a sliding pair sum") {
    Conv1DParams p{Tensor({1, 2, 1}, {1.0, 1.0}), Tensor({1})};
    Tensor x({3, 1}, {1, 2, 3});
    Tensor y = conv1d_forward(x, p);
    CHECK(y.shape() == std::vector<std::size_t>{2, 1});
    CHECK(y.at(0, 0) == 3.0);
    CHECK(y.at(1, 0) == 5.0);
}

TEST_CASE("conv ReLU clamps negative responses to zero") {
    Conv1DParams p{Tensor({1, 2, 1}), Tensor({1})};
    p.bias[0] = -1.0; // kernels all zero, preactivation -1 everywhere
    Tensor x({5, 1}, {1, 2, 3, 4, 5});
    Tensor y = conv1d_forward(x, p);
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(y[i] == 0.0);
}

TEST_CASE("conv output length is T-k+1 and input shorter than kernel fails") {
    Rng rng(3);
    Conv1DParams p = Conv1DParams::init(4, 3, 2, rng);
    Tensor x = uniform_init(rng, {10, 2}, 1.0);
    CHECK(conv1d_forward(x, p).shape() == std::vector<std::size_t>{8, 4});
    Tensor tiny = uniform_init(rng, {2, 2}, 1.0);
    CHECK_THROWS_AS(conv1d_forward(tiny, p), Error);
    Tensor wrong = uniform_init(rng, {10, 3}, 1.0);
    CHECK_THROWS_AS(conv1d_forward(wrong, p), Error);
}

TEST_CASE("conv matches a scalar oracle on random multi-channel input") {
    Rng rng(17);
    Conv1DParams p = Conv1DParams::init(4, 2, 3, rng);
    Tensor x = uniform_init(rng, {30, 3}, 1.0);
    CHECK(all_close(conv1d_forward(x, p), oracle_conv1d(x, p), 1e-12));
}

TEST_CASE("conv init draws bounded weights and zero bias") {
    Rng rng(8);
    Conv1DParams p = Conv1DParams::init(5, 2, 3, rng);
    const double limit = std::sqrt(1.0 / 6.0);
    for (std::size_t i = 0; i < p.kernels.size(); ++i) {
        CHECK(p.kernels[i] >= -limit);
        CHECK(p.kernels[i] < limit);
    }
    for (std::size_t i = 0; i < p.bias.size(); ++i) CHECK(p.bias[i] == 0.0);
    CHECK(p.param_count() == 5 * (2 * 3 + 1));
}

TEST_CASE("conv gradients match finite differences away from ReLU kinks") {
    Rng rng(21);
    Conv1DParams p = Conv1DParams::init(3, 2, 2, rng);
    for (std::size_t i = 0; i < p.bias.size(); ++i) p.bias[i] = 0.5; // keep preacts off zero
    Tensor x = uniform_init(rng, {7, 2}, 1.0);
    Tensor w = uniform_init(rng, {6, 3}, 1.0); // upstream weights

    Conv1DCache cache;
    conv1d_forward(x, p, &cache);
    Conv1DGrads g = conv1d_backward(p, cache, w);

    auto loss = [&] { return weighted(conv1d_forward(x, p), w); };
    for (std::size_t i = 0; i < p.kernels.size(); ++i)
        CHECK(close(g.kernels[i], fd_grad(p.kernels, i, loss), 1e-7));
    for (std::size_t i = 0; i < p.bias.size(); ++i)
        CHECK(close(g.bias[i], fd_grad(p.bias, i, loss), 1e-7));
    auto loss_x = [&] { return weighted(conv1d_forward(x, p), w); };
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(close(g.input[i], fd_grad(x, i, loss_x), 1e-7));
}

TEST_CASE("conv backward routes nothing through inactive ReLU units") {
    Conv1DParams p{Tensor({1, 2, 1}, {1.0, 1.0}), Tensor({1})};
    p.bias[0] = -100.0; // every preactivation negative, output identically 0
    Tensor x({4, 1}, {1, 2, 3, 4});
    Conv1DCache cache;
    conv1d_forward(x, p, &cache);
    Tensor up({3, 1}, {1.0, 1.0, 1.0});
    Conv1DGrads g = conv1d_backward(p, cache, up);
    CHECK(sum_all(g.kernels) == 0.0);
    CHECK(sum_all(g.bias) == 0.0);
    CHECK(sum_all(g.input) == 0.0);
}

TEST_CASE("conv bias gradient is the column sum of active upstream rows") {
    Rng rng(33);
    Conv1DParams p = Conv1DParams::init(2, 2, 1, rng);
    for (std::size_t i = 0; i < p.bias.size(); ++i) p.bias[i] = 1.0; // all units active
    Tensor x = uniform_init(rng, {6, 1}, 0.1);
    Tensor up = uniform_init(rng, {5, 2}, 1.0);
    Conv1DCache cache;
    conv1d_forward(x, p, &cache);
    Conv1DGrads g = conv1d_backward(p, cache, up);
    for (std::size_t f = 0; f < 2; ++f) {
        double expect = 0.0;
        for (std::size_t t = 0; t < 5; ++t) expect += up.at(t, f);
        CHECK(close(g.bias[f], expect, 1e-14));
    }
}

// ---------------------------------------------------------------------------
// Shape bridges
// ---------------------------------------------------------------------------

TEST_CASE("flatten is a row-major reshape") {
    Tensor x({2, 3}, {1, 2, 3, 4, 5, 6});
    Tensor f = flatten(x);
    CHECK(f.shape() == std::vector<std::size_t>{6});
    for (std::size_t i = 0; i < 6; ++i) CHECK(f[i] == static_cast<double>(i + 1));
    CHECK(bit_equal(f.reshaped({2, 3}), x));
}

TEST_CASE("repeat_vector copies the row n times") {
    Tensor v({3}, {1, 2, 3});
    Tensor r = repeat_vector(v, 4);
    CHECK(r.shape() == std::vector<std::size_t>{4, 3});
    for (std::size_t t = 0; t < 4; ++t)
        for (std::size_t j = 0; j < 3; ++j) CHECK(r.at(t, j) == v[j]);
    CHECK_THROWS_AS(repeat_vector(v, 0), Error);
}

TEST_CASE("repeat_vector backward sums rows: [[1,0],[0,1],[1,1]] -> [2,2]") {
    Tensor up({3, 2}, {1, 0, 0, 1, 1, 1});
    Tensor g = repeat_vector_backward(up);
    CHECK(g.shape() == std::vector<std::size_t>{2});
    CHECK(g[0] == 2.0);
    CHECK(g[1] == 2.0);
}

TEST_CASE("reverse_rows flips a sequence and is an involution") {
    Tensor x({3, 2}, {1, 2, 3, 4, 5, 6});
    Tensor r = reverse_rows(x);
    CHECK(r.at(0, 0) == 5);
    CHECK(r.at(0, 1) == 6);
    CHECK(r.at(2, 1) == 2);
    CHECK(bit_equal(reverse_rows(r), x));
}

// ---------------------------------------------------------------------------
// LSTM
// ---------------------------------------------------------------------------

TEST_CASE("lstm with all-zero parameters emits zeros from zero initial state") {
    LSTMParams p;
    for (std::size_t g = 0; g < 4; ++g) {
        p.W[g] = Tensor({3, 2});
        p.U[g] = Tensor({3, 3});
        p.b[g] = Tensor({3});
    }
    Tensor x({5, 2}, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
    Tensor h = lstm_forward(x, p, true);
    CHECK(h.shape() == std::vector<std::size_t>{5, 3});
    for (std::size_t i = 0; i < h.size(); ++i) CHECK(h[i] == 0.0);
}

TEST_CASE("lstm saturates toward tanh(1) when all gates are forced open") {
    LSTMParams p;
    for (std::size_t g = 0; g < 4; ++g) {
        p.W[g] = Tensor({2, 1});
        p.U[g] = Tensor({2, 2});
        p.b[g] = Tensor({2});
    }
    // Huge biases: i, o -> 1, candidate tanh -> 1, forget -> 0.
    for (std::size_t i = 0; i < 2; ++i) {
        p.b[kInput][i] = 40.0;
        p.b[kCell][i] = 40.0;
        p.b[kOutput][i] = 40.0;
        p.b[kForget][i] = -40.0;
    }
    Tensor x({1, 1}, {0.3});
    Tensor h = lstm_forward(x, p, false);
    CHECK(h[0] == doctest::Approx(std::tanh(1.0)).epsilon(1e-12));
    CHECK(h[1] == doctest::Approx(std::tanh(1.0)).epsilon(1e-12));
}

TEST_CASE("lstm matches a scalar step-by-step oracle") {
    Rng rng(99);
    LSTMParams p = LSTMParams::init(4, 3, rng);
    Tensor x = uniform_init(rng, {5, 3}, 1.0);
    CHECK(all_close(lstm_forward(x, p, true), oracle_lstm(x, p, true), 1e-12));
    CHECK(all_close(lstm_forward(x, p, false), oracle_lstm(x, p, false), 1e-12));
}

TEST_CASE("return_sequences=false equals the last row of the full sequence") {
    Rng rng(100);
    LSTMParams p = LSTMParams::init(4, 2, rng);
    Tensor x = uniform_init(rng, {6, 2}, 1.0);
    Tensor seq = lstm_forward(x, p, true);
    Tensor last = lstm_forward(x, p, false);
    CHECK(last.rank() == 1);
    for (std::size_t i = 0; i < 4; ++i) CHECK(last[i] == seq.at(5, i));
}

TEST_CASE("lstm init sets forget bias to one and zeros elsewhere") {
    Rng rng(4);
    LSTMParams p = LSTMParams::init(3, 5, rng);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(p.b[kForget][i] == 1.0);
        CHECK(p.b[kInput][i] == 0.0);
        CHECK(p.b[kCell][i] == 0.0);
        CHECK(p.b[kOutput][i] == 0.0);
    }
    CHECK(p.param_count() == 4 * 3 * (5 + 3 + 1));
}

TEST_CASE("lstm gradients match finite differences (sequence output)") {
    Rng rng(55);
    LSTMParams p = LSTMParams::init(3, 2, rng);
    Tensor x = uniform_init(rng, {4, 2}, 1.0);
    Tensor w = uniform_init(rng, {4, 3}, 1.0);

    LSTMCache cache;
    lstm_forward(x, p, true, &cache);
    LSTMGrads g = lstm_backward(p, cache, w);

    auto loss = [&] { return weighted(lstm_forward(x, p, true), w); };
    for (std::size_t gate = 0; gate < 4; ++gate) {
        for (std::size_t i = 0; i < p.W[gate].size(); ++i)
            CHECK(close(g.W[gate][i], fd_grad(p.W[gate], i, loss), 1e-7));
        for (std::size_t i = 0; i < p.U[gate].size(); ++i)
            CHECK(close(g.U[gate][i], fd_grad(p.U[gate], i, loss), 1e-7));
        for (std::size_t i = 0; i < p.b[gate].size(); ++i)
            CHECK(close(g.b[gate][i], fd_grad(p.b[gate], i, loss), 1e-7));
    }
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(close(g.input[i], fd_grad(x, i, loss), 1e-7));
}

TEST_CASE("lstm gradients match finite differences (final state output)") {
    Rng rng(56);
    LSTMParams p = LSTMParams::init(3, 2, rng);
    Tensor x = uniform_init(rng, {4, 2}, 1.0);
    Tensor w = uniform_init(rng, {3}, 1.0);

    LSTMCache cache;
    lstm_forward(x, p, false, &cache);
    LSTMGrads g = lstm_backward(p, cache, w);

    auto loss = [&] { return weighted(lstm_forward(x, p, false), w); };
    for (std::size_t gate = 0; gate < 4; ++gate)
        for (std::size_t i = 0; i < p.U[gate].size(); ++i)
            CHECK(close(g.U[gate][i], fd_grad(p.U[gate], i, loss), 1e-7));
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(close(g.input[i], fd_grad(x, i, loss), 1e-7));
}

TEST_CASE("gradient at the final state reaches back to the first input step") {
    Rng rng(57);
    LSTMParams p = LSTMParams::init(3, 2, rng);
    Tensor x = uniform_init(rng, {6, 2}, 1.0);
    Tensor w({3}, {1.0, 1.0, 1.0});
    LSTMCache cache;
    lstm_forward(x, p, false, &cache);
    LSTMGrads g = lstm_backward(p, cache, w);
    double first_step = std::abs(g.input.at(0, 0)) + std::abs(g.input.at(0, 1));
    CHECK(first_step > 1e-8); // memory spans the whole window
}

TEST_CASE("repeated-input forward is bit-identical to the generic path") {
    Rng rng(61);
    LSTMParams p = LSTMParams::init(5, 7, rng);
    Tensor row = uniform_init(rng, {7}, 1.0);

    LSTMCache fast_cache, slow_cache;
    Tensor fast = lstm_forward_repeated(row, 9, p, true, &fast_cache);
    Tensor slow = lstm_forward(repeat_vector(row, 9), p, true, &slow_cache);
    CHECK(bit_equal(fast, slow));
    CHECK(bit_equal(fast_cache.h, slow_cache.h));
    CHECK(bit_equal(fast_cache.c, slow_cache.c));
    for (std::size_t g = 0; g < 4; ++g) CHECK(bit_equal(fast_cache.gates[g], slow_cache.gates[g]));

    Tensor fast_last = lstm_forward_repeated(row, 9, p, false);
    Tensor slow_last = lstm_forward(repeat_vector(row, 9), p, false);
    CHECK(bit_equal(fast_last, slow_last));
}

TEST_CASE("repeated-input backward equals generic backward plus row summation") {
    Rng rng(62);
    LSTMParams p = LSTMParams::init(4, 6, rng);
    Tensor row = uniform_init(rng, {6}, 1.0);
    Tensor w = uniform_init(rng, {8, 4}, 1.0);

    LSTMCache fast_cache, slow_cache;
    lstm_forward_repeated(row, 8, p, true, &fast_cache);
    lstm_forward(repeat_vector(row, 8), p, true, &slow_cache);
    LSTMGrads fast = lstm_backward(p, fast_cache, w);
    LSTMGrads slow = lstm_backward(p, slow_cache, w);

    for (std::size_t g = 0; g < 4; ++g) {
        CHECK(all_close(fast.W[g], slow.W[g], 1e-10));
        CHECK(all_close(fast.U[g], slow.U[g], 1e-10));
        CHECK(all_close(fast.b[g], slow.b[g], 1e-10));
    }
    Tensor summed = repeat_vector_backward(slow.input);
    CHECK(fast.input.rank() == 1);
    CHECK(all_close(fast.input, summed, 1e-10));
}

TEST_CASE("lstm rejects mismatched input width and empty sequences") {
    Rng rng(5);
    LSTMParams p = LSTMParams::init(3, 4, rng);
    Tensor bad = uniform_init(rng, {5, 3}, 1.0);
    CHECK_THROWS_AS(lstm_forward(bad, p, true), Error);
    Tensor row = uniform_init(rng, {4}, 1.0);
    CHECK_THROWS_AS(lstm_forward_repeated(row, 0, p, true), Error);
}

// ---------------------------------------------------------------------------
// BiLSTM
// ---------------------------------------------------------------------------

TEST_CASE("bilstm is the concatenation of forward and reversed-run final states") {
    Rng rng(71);
    BiLSTMParams p = BiLSTMParams::init(3, 2, rng);
    Tensor x = uniform_init(rng, {5, 2}, 1.0);

    Tensor out = bilstm_forward(x, p);
    CHECK(out.shape() == std::vector<std::size_t>{6});

    Tensor fwd = lstm_forward(x, p.forward, false);
    Tensor bwd = lstm_forward(reverse_rows(x), p.backward, false);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(out[i] == fwd[i]);
        CHECK(out[3 + i] == bwd[i]);
    }
}

TEST_CASE("bilstm halves agree on palindromic input with tied weights") {
    Rng rng(72);
    LSTMParams one = LSTMParams::init(3, 1, rng);
    BiLSTMParams p{one, one};
    Tensor x({5, 1}, {0.1, 0.4, 0.9, 0.4, 0.1});
    Tensor out = bilstm_forward(x, p);
    for (std::size_t i = 0; i < 3; ++i) CHECK(out[i] == out[3 + i]);
}

TEST_CASE("bilstm gradients match finite differences") {
    Rng rng(73);
    BiLSTMParams p = BiLSTMParams::init(2, 2, rng);
    Tensor x = uniform_init(rng, {4, 2}, 1.0);
    Tensor w = uniform_init(rng, {4}, 1.0);

    BiLSTMCache cache;
    bilstm_forward(x, p, &cache);
    BiLSTMGrads g = bilstm_backward(p, cache, w);

    auto loss = [&] { return weighted(bilstm_forward(x, p), w); };
    for (std::size_t gate = 0; gate < 4; ++gate) {
        for (std::size_t i = 0; i < p.forward.W[gate].size(); ++i)
            CHECK(close(g.forward.W[gate][i], fd_grad(p.forward.W[gate], i, loss), 1e-7));
        for (std::size_t i = 0; i < p.backward.W[gate].size(); ++i)
            CHECK(close(g.backward.W[gate][i], fd_grad(p.backward.W[gate], i, loss), 1e-7));
        for (std::size_t i = 0; i < p.backward.b[gate].size(); ++i)
            CHECK(close(g.backward.b[gate][i], fd_grad(p.backward.b[gate], i, loss), 1e-7));
    }
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(close(g.input[i], fd_grad(x, i, loss), 1e-7));
}

// ---------------------------------------------------------------------------
// Dropout
// ---------------------------------------------------------------------------

TEST_CASE("dropout at evaluation time or rate zero is the exact identity") {
    Rng rng(81);
    Tensor x = uniform_init(rng, {100}, 2.0);
    DropoutCache c1, c2;
    CHECK(bit_equal(dropout(x, 0.5, false, rng, &c1), x));
    CHECK(c1.identity);
    CHECK(bit_equal(dropout(x, 0.0, true, rng, &c2), x));
    CHECK(c2.identity);
}

TEST_CASE("train-time dropout zeroes elements and rescales survivors") {
    Rng rng(82);
    Tensor x({100000});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = 1.0;
    DropoutCache cache;
    Tensor y = dropout(x, 0.2, true, rng, &cache);
    std::size_t dropped = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] == 0.0) {
            ++dropped;
        } else {
            CHECK(y[i] == doctest::Approx(1.25).epsilon(1e-15)); // 1/(1-0.2)
        }
    }
    // Drop count within 4 sigma of the binomial mean.
    const double mean = 0.2 * 100000, sigma = std::sqrt(100000 * 0.2 * 0.8);
    CHECK(std::abs(static_cast<double>(dropped) - mean) < 4.0 * sigma);
    // Inverted scaling keeps the mean activation unbiased: 4 sigma band for
    // the sample mean (per-element variance rate/(1-rate) = 0.25).
    const double mean_act = sum_all(y) / 100000.0;
    CHECK(std::abs(mean_act - 1.0) < 4.0 * 0.5 / std::sqrt(100000.0));
}

TEST_CASE("dropout is deterministic for a fixed generator state") {
    Tensor x({50});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = 1.0 + static_cast<double>(i);
    Rng a(7), b(7);
    CHECK(bit_equal(dropout(x, 0.3, true, a), dropout(x, 0.3, true, b)));
    Rng c(8);
    CHECK_FALSE(bit_equal(dropout(x, 0.3, true, a), dropout(x, 0.3, true, c)));
}

TEST_CASE("dropout backward applies the identical mask") {
    Rng rng(83);
    Tensor x = uniform_init(rng, {64}, 1.0);
    DropoutCache cache;
    dropout(x, 0.4, true, rng, &cache);
    Tensor up = uniform_init(rng, {64}, 1.0);
    Tensor g = dropout_backward(cache, up);
    CHECK(bit_equal(g, mul(up, cache.mask)));

    DropoutCache id_cache;
    Rng r2(1);
    dropout(x, 0.4, false, r2, &id_cache);
    CHECK(bit_equal(dropout_backward(id_cache, up), up));
}

TEST_CASE("dropout rejects rates outside [0,1)") {
    Rng rng(84);
    Tensor x({4}, {1, 2, 3, 4});
    CHECK_THROWS_AS(dropout(x, 1.0, true, rng), Error);
    CHECK_THROWS_AS(dropout(x, -0.1, true, rng), Error);
}

// ---------------------------------------------------------------------------
// Dense
// ---------------------------------------------------------------------------

TEST_CASE("dense identity weights pass input through, linear activation") {
    DenseParams p{Tensor({2, 2}, {1, 0, 0, 1}), Tensor({2})};
    Tensor x({2}, {3.0, -4.0});
    Tensor y = dense_forward(x, p, Activation::linear);
    CHECK(y[0] == 3.0);
    CHECK(y[1] == -4.0);
    Tensor yr = dense_forward(x, p, Activation::relu);
    CHECK(yr[0] == 3.0);
    CHECK(yr[1] == 0.0);
}

TEST_CASE("dense worked example with bias") {
    DenseParams p{Tensor({1, 3}, {1.0, 2.0, 3.0}), Tensor({1}, {0.5})};
    Tensor x({3}, {1.0, 1.0, 1.0});
    CHECK(dense_forward(x, p, Activation::linear)[0] == 6.5);
}

TEST_CASE("dense gradients match finite differences for both activations") {
    Rng rng(91);
    for (Activation act : {Activation::linear, Activation::relu}) {
        DenseParams p = DenseParams::init(4, 3, rng);
        for (std::size_t i = 0; i < p.b.size(); ++i) p.b[i] = 0.5; // stay off the kink
        Tensor x = uniform_init(rng, {3}, 1.0);
        Tensor w = uniform_init(rng, {4}, 1.0);

        DenseCache cache;
        dense_forward(x, p, act, &cache);
        DenseGrads g = dense_backward(p, cache, act, w);

        auto loss = [&] { return weighted(dense_forward(x, p, act), w); };
        for (std::size_t i = 0; i < p.W.size(); ++i)
            CHECK(close(g.W[i], fd_grad(p.W, i, loss), 1e-7));
        for (std::size_t i = 0; i < p.b.size(); ++i)
            CHECK(close(g.b[i], fd_grad(p.b, i, loss), 1e-7));
        for (std::size_t i = 0; i < x.size(); ++i)
            CHECK(close(g.input[i], fd_grad(x, i, loss), 1e-7));
    }
}

TEST_CASE("dense relu backward blocks gradient at inactive units") {
    DenseParams p{Tensor({1, 1}, {1.0}), Tensor({1}, {-5.0})};
    Tensor x({1}, {1.0}); // preact -4, relu output 0
    DenseCache cache;
    dense_forward(x, p, Activation::relu, &cache);
    DenseGrads g = dense_backward(p, cache, Activation::relu, Tensor({1}, {1.0}));
    CHECK(g.W[0] == 0.0);
    CHECK(g.b[0] == 0.0);
    CHECK(g.input[0] == 0.0);
}

TEST_CASE("dense rejects input width mismatch") {
    Rng rng(92);
    DenseParams p = DenseParams::init(2, 3, rng);
    Tensor x({4}, {1, 2, 3, 4});
    CHECK_THROWS_AS(dense_forward(x, p, Activation::linear), Error);
}

TEST_CASE("layer parameter counts follow their closed forms") {
    Rng rng(93);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t f = 1 + rng.next_below(8), k = 1 + rng.next_below(4),
                          c = 1 + rng.next_below(5), u = 1 + rng.next_below(9),
                          d = 1 + rng.next_below(9), o = 1 + rng.next_below(9);
        CHECK(Conv1DParams::init(f, k, c, rng).param_count() == f * (k * c + 1));
        CHECK(LSTMParams::init(u, d, rng).param_count() == 4 * u * (d + u + 1));
        CHECK(BiLSTMParams::init(u, d, rng).param_count() == 2 * 4 * u * (d + u + 1));
        CHECK(DenseParams::init(o, d, rng).param_count() == o * (d + 1));
    }
}
