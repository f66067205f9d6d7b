#ifndef SEQCAST_MODEL_HPP
#define SEQCAST_MODEL_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "seqcast/layers.hpp"
#include "seqcast/preprocess.hpp"
#include "seqcast/rng.hpp"
#include "seqcast/tensor.hpp"

namespace seqcast {

/// Architecture and initialization seed for the forecaster:
///   Conv1D stack (ReLU) -> Flatten -> RepeatVector(window) ->
///   LSTM(sequences) -> Dropout -> LSTM(sequences) x (depth-1) ->
///   BiLSTM(final states, concat) -> Dense(ReLU) -> Dense(1, linear)
struct ModelConfig {
    std::size_t window = 30;
    std::size_t features = 1;
    std::vector<std::size_t> conv_filters = {256, 128};
    std::size_t kernel = 2;
    std::size_t lstm_units = 100;
    std::size_t lstm_depth = 4;
    double dropout_rate = 0.2;
    std::size_t bilstm_units = 128;
    std::size_t dense_units = 100;
    std::size_t output_units = 1;
    std::uint64_t seed = 42;

    /// Raises usage errors for impossible configurations (zero extents,
    /// dropout outside [0,1), conv stack longer than the window allows).
    void validate() const;

    /// Sequence length after the conv stack: window - layers*(kernel-1).
    std::size_t conv_out_steps() const;
    /// Flattened feature size feeding the repeat bridge.
    std::size_t flat_dim() const;

    bool operator==(const ModelConfig&) const = default;
};

struct Model {
    ModelConfig config;
    std::vector<Conv1DParams> conv;
    std::vector<LSTMParams> lstm;
    BiLSTMParams bilstm;
    DenseParams dense1;
    DenseParams dense2;
};

/// Initializes all parameters from config.seed. Weight draws are uniform in
/// +-sqrt(1/fan_in), forget-gate biases 1, other biases 0; the draw order is
/// the param_refs order below.
Model build_model(const ModelConfig& config);

/// Same structure as `m` with every parameter tensor zeroed. Gradients are
/// carried in this shape so parameters and gradients enumerate identically.
Model zero_clone(const Model& m);

/// Named view over every parameter tensor. The order is the serialization
/// and optimizer contract:
///   conv1.kernels, conv1.bias, conv2..., then per LSTM layer and per gate
///   (input, forget, cell, output): W, U, b; bilstm forward then backward
///   halves with the same gate layout; dense1.W, dense1.b, dense2.W,
///   dense2.b.
struct ParamRef {
    std::string name;
    Tensor* tensor;
};
struct ConstParamRef {
    std::string name;
    const Tensor* tensor;
};
std::vector<ParamRef> param_refs(Model& m);
std::vector<ConstParamRef> param_refs(const Model& m);

/// Per-layer parameter counts plus a ("total", sum) row.
std::vector<std::pair<std::string, std::size_t>> count_params(const Model& m);

struct ForwardCache {
    std::vector<Conv1DCache> conv;
    Tensor flat;
    std::vector<LSTMCache> lstm;
    DropoutCache dropout;
    BiLSTMCache bilstm;
    DenseCache dense1;
    DenseCache dense2;
    bool train = false;
    bool valid = false;
};

/// Scalar next-step prediction in normalized units. `rng` drives dropout and
/// is only consumed in train mode. Non-finite intermediates raise a
/// divergence error naming the layer.
double model_forward(const Model& m, const Tensor& window, bool train, Rng& rng,
                     ForwardCache* cache = nullptr);

/// Eval-mode forward without caller-supplied randomness.
double model_predict(const Model& m, const Tensor& window);

/// Gradients of (dloss * prediction) for every parameter, in a zero_clone
/// shape. Requires a cache from a train-mode forward.
Model model_backward(const Model& m, const ForwardCache& cache, double dloss);

// ---------------------------------------------------------------------------
// Checkpointing
// ---------------------------------------------------------------------------

struct ModelBundle {
    Model model;
    ScalerParams scaler;
};

/// Versioned binary container: magic, format version, canonical config text,
/// scaler block, parameter tensors in param_refs order (little-endian 64-bit
/// floats), CRC-32 trailer. Loads reproduce parameters bit-exactly; version
/// mismatch, truncation, bad checksum, and a missing scaler block raise
/// distinct format errors.
void save_model(const Model& m, const ScalerParams& scaler, const std::string& path);
ModelBundle load_model(const std::string& path);

/// Canonical key=value rendering of a config; the checkpoint header uses it.
std::string config_to_text(const ModelConfig& c);
ModelConfig config_from_text(const std::string& text);

} // namespace seqcast

#endif // SEQCAST_MODEL_HPP
