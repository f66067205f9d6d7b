#ifndef SEQCAST_OPTIMIZER_HPP
#define SEQCAST_OPTIMIZER_HPP

#include <cstddef>
#include <vector>

#include "seqcast/tensor.hpp"

namespace seqcast {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double decay = 0.0; // per-epoch inverse-time decay; 0 keeps lr constant
};

/// lr / (1 + decay * epoch), epoch counted from 0.
double lr_at(const AdamConfig& cfg, std::size_t epoch);

/// Adam over a fixed list of parameter tensors. Moment buffers are keyed by
/// position, so every step() call must pass the same tensors in the same
/// order. The bias-correction step count starts at 1 on the first call.
class Adam {
public:
    Adam(AdamConfig cfg, const std::vector<Tensor*>& params);

    ///   m <- b1 m + (1-b1) g          v <- b2 v + (1-b2) g^2
    ///   mhat = m / (1 - b1^t)         vhat = v / (1 - b2^t)
    ///   theta <- theta - lr * mhat / (sqrt(vhat) + eps)
    void step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
              double lr);

    std::size_t steps_taken() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

private:
    AdamConfig cfg_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    std::size_t t_ = 0;
};

} // namespace seqcast

#endif // SEQCAST_OPTIMIZER_HPP
