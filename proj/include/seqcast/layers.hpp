#ifndef SEQCAST_LAYERS_HPP
#define SEQCAST_LAYERS_HPP

#include <array>
#include <cstddef>

#include "seqcast/rng.hpp"
#include "seqcast/tensor.hpp"

namespace seqcast {

// ---------------------------------------------------------------------------
// 1-D convolution (valid padding, stride 1, ReLU fused into the forward pass)
// ---------------------------------------------------------------------------

struct Conv1DParams {
    Tensor kernels; // [filters x kernel x in_channels]
    Tensor bias;    // [filters]

    std::size_t filters() const { return kernels.dim(0); }
    std::size_t kernel() const { return kernels.dim(1); }
    std::size_t in_channels() const { return kernels.dim(2); }
    std::size_t param_count() const { return kernels.size() + bias.size(); }

    /// Weights uniform in +-sqrt(1/fan_in) with fan_in = kernel * in_channels,
    /// biases zero.
    static Conv1DParams init(std::size_t filters, std::size_t kernel, std::size_t in_channels,
                             Rng& rng);
};

struct Conv1DCache {
    Tensor input;  // [T x C]
    Tensor preact; // [T-k+1 x filters], before ReLU
};

struct Conv1DGrads {
    Tensor kernels;
    Tensor bias;
    Tensor input;
};

/// out[t, f] = relu(bias[f] + sum_j sum_c kernels[f, j, c] * x[t+j, c]).
Tensor conv1d_forward(const Tensor& x, const Conv1DParams& p, Conv1DCache* cache = nullptr);
Conv1DGrads conv1d_backward(const Conv1DParams& p, const Conv1DCache& cache,
                            const Tensor& upstream);

// ---------------------------------------------------------------------------
// Shape bridges
// ---------------------------------------------------------------------------

/// Row-major reshape of a [T x C] tensor to [T*C].
Tensor flatten(const Tensor& x);

/// Copies a length-D vector into each of n rows.
Tensor repeat_vector(const Tensor& v, std::size_t n);

/// Backward of repeat_vector: column-wise sum over the n rows.
Tensor repeat_vector_backward(const Tensor& upstream);

// ---------------------------------------------------------------------------
// LSTM
// ---------------------------------------------------------------------------

/// Gate order used everywhere (parameter layout, serialization, gradients).
enum Gate : std::size_t { kInput = 0, kForget = 1, kCell = 2, kOutput = 3 };
inline constexpr std::array<const char*, 4> kGateNames = {"input", "forget", "cell", "output"};

struct LSTMParams {
    std::array<Tensor, 4> W; // per gate, [units x in_dim]
    std::array<Tensor, 4> U; // per gate, [units x units]
    std::array<Tensor, 4> b; // per gate, [units]

    std::size_t units() const { return W[kInput].dim(0); }
    std::size_t in_dim() const { return W[kInput].dim(1); }
    std::size_t param_count() const { return 4 * units() * (in_dim() + units() + 1); }

    /// Input weights uniform in +-sqrt(1/in_dim), recurrent weights in
    /// +-sqrt(1/units); forget-gate bias 1.0, other biases zero.
    static LSTMParams init(std::size_t units, std::size_t in_dim, Rng& rng);
};

struct LSTMCache {
    Tensor x;       // [T x D], or [1 x D] when the input row is repeated
    std::size_t steps = 0;
    bool input_repeated = false;
    std::array<Tensor, 4> gates; // sigmoid/tanh activations per step, each [T x units]
    Tensor c;                    // [T x units]
    Tensor tanh_c;               // [T x units]
    Tensor h;                    // [T x units]
};

struct LSTMGrads {
    std::array<Tensor, 4> W;
    std::array<Tensor, 4> U;
    std::array<Tensor, 4> b;
    Tensor input; // [T x D]; for the repeated form, the already-summed [D] row
};

/// Standard forget-gate cell, h0 = c0 = 0:
///   i = sigmoid(Wi x + Ui h + bi)     f = sigmoid(Wf x + Uf h + bf)
///   g = tanh(Wc x + Uc h + bc)        o = sigmoid(Wo x + Uo h + bo)
///   c_t = f . c_{t-1} + i . g         h_t = o . tanh(c_t)
/// Returns all h_t ([T x units]) or only h_T ([units]).
Tensor lstm_forward(const Tensor& x, const LSTMParams& p, bool return_sequences,
                    LSTMCache* cache = nullptr);

/// Same recurrence fed the one input row at every of `steps` time steps
/// (i.e. lstm_forward(repeat_vector(row, steps), ...)). The input
/// projection W*row is computed once; forward results are bit-identical
/// to the generic path. The cache's backward produces the input gradient
/// already summed over time, which is exactly repeat_vector_backward.
Tensor lstm_forward_repeated(const Tensor& row, std::size_t steps, const LSTMParams& p,
                             bool return_sequences, LSTMCache* cache = nullptr);

/// Exact backpropagation through time. `upstream` is [T x units] when the
/// matching forward returned sequences, else [units] (gradient at h_T).
LSTMGrads lstm_backward(const LSTMParams& p, const LSTMCache& cache, const Tensor& upstream);

// ---------------------------------------------------------------------------
// Bidirectional LSTM (concatenation merge, final states only)
// ---------------------------------------------------------------------------

struct BiLSTMParams {
    LSTMParams forward;
    LSTMParams backward; // runs over the reversed sequence

    std::size_t units() const { return forward.units(); }
    std::size_t param_count() const { return forward.param_count() + backward.param_count(); }

    static BiLSTMParams init(std::size_t units, std::size_t in_dim, Rng& rng);
};

struct BiLSTMCache {
    LSTMCache forward;
    LSTMCache backward; // holds the reversed input
};

struct BiLSTMGrads {
    LSTMGrads forward;
    LSTMGrads backward;
    Tensor input; // [T x D], both directions combined
};

/// Concatenation [h_T of forward pass ; h_T of the pass over reversed x];
/// output dimension 2 * units.
Tensor bilstm_forward(const Tensor& x, const BiLSTMParams& p, BiLSTMCache* cache = nullptr);
BiLSTMGrads bilstm_backward(const BiLSTMParams& p, const BiLSTMCache& cache,
                            const Tensor& upstream);

/// Rows of a [T x D] tensor in reverse order.
Tensor reverse_rows(const Tensor& x);

// ---------------------------------------------------------------------------
// Dropout (inverted: survivors scaled by 1/(1-rate) at train time)
// ---------------------------------------------------------------------------

struct DropoutCache {
    Tensor mask; // 0 for dropped elements, 1/(1-rate) for survivors
    bool identity = true;
};

Tensor dropout(const Tensor& x, double rate, bool train, Rng& rng, DropoutCache* cache = nullptr);
Tensor dropout_backward(const DropoutCache& cache, const Tensor& upstream);

// ---------------------------------------------------------------------------
// Dense
// ---------------------------------------------------------------------------

enum class Activation { relu, linear };

struct DenseParams {
    Tensor W; // [out x in]
    Tensor b; // [out]

    std::size_t out_dim() const { return W.dim(0); }
    std::size_t in_dim() const { return W.dim(1); }
    std::size_t param_count() const { return W.size() + b.size(); }

    static DenseParams init(std::size_t out, std::size_t in, Rng& rng);
};

struct DenseCache {
    Tensor input;  // [in]
    Tensor preact; // [out]
};

struct DenseGrads {
    Tensor W;
    Tensor b;
    Tensor input;
};

Tensor dense_forward(const Tensor& x, const DenseParams& p, Activation act,
                     DenseCache* cache = nullptr);
DenseGrads dense_backward(const DenseParams& p, const DenseCache& cache, Activation act,
                          const Tensor& upstream);

} // namespace seqcast

#endif // SEQCAST_LAYERS_HPP
