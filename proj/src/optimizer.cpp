#include "seqcast/optimizer.hpp"

#include <cmath>

#include "seqcast/error.hpp"

namespace seqcast {

double lr_at(const AdamConfig& cfg, std::size_t epoch) {
    return cfg.lr / (1.0 + cfg.decay * static_cast<double>(epoch));
}

Adam::Adam(AdamConfig cfg, const std::vector<Tensor*>& params) : cfg_(cfg) {
    if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0) || !(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0)) {
        raise(ErrorKind::value, "adam betas must lie in [0, 1)");
    }
    if (cfg.eps <= 0.0) raise(ErrorKind::value, "adam epsilon must be positive");
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const Tensor* p : params) {
        m_.emplace_back(p->size(), 0.0);
        v_.emplace_back(p->size(), 0.0);
    }
}

void Adam::step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
                double lr) {
    if (params.size() != m_.size() || grads.size() != m_.size()) {
        raise(ErrorKind::shape, "adam step got " + std::to_string(params.size()) + " params and " +
                                    std::to_string(grads.size()) + " grads, state has " +
                                    std::to_string(m_.size()));
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor& theta = *params[k];
        const Tensor& grad = *grads[k];
        if (theta.size() != m_[k].size() || grad.size() != m_[k].size()) {
            raise(ErrorKind::shape, "adam slot " + std::to_string(k) + " size changed");
        }
        double* m = m_[k].data();
        double* v = v_[k].data();
        const double* g = grad.data();
        double* th = theta.data();
        for (std::size_t i = 0; i < grad.size(); ++i) {
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            th[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

} // namespace seqcast
