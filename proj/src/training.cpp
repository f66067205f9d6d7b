#include "seqcast/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "seqcast/error.hpp"

namespace seqcast {

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

double mse(const Tensor& y, const Tensor& yhat) {
    if (y.rank() != 1 || yhat.rank() != 1 || y.size() != yhat.size()) {
        raise(ErrorKind::shape,
              "mse needs equal-length vectors, got " + y.shape_str() + " and " + yhat.shape_str());
    }
    if (y.size() == 0) raise(ErrorKind::value, "mse of empty vectors is undefined");
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = y[i] - yhat[i];
        acc += d * d;
    }
    return acc / static_cast<double>(y.size());
}

double rmse(const Tensor& y, const Tensor& yhat) { return std::sqrt(mse(y, yhat)); }

// ---------------------------------------------------------------------------
// Early stopping
// ---------------------------------------------------------------------------

EarlyStopper::EarlyStopper(std::size_t patience)
    : patience_(patience), best_(std::numeric_limits<double>::infinity()) {
    if (patience == 0) raise(ErrorKind::value, "patience must be at least 1");
}

bool EarlyStopper::observe(double loss) {
    ++seen_;
    if (loss < best_) { // strict decrease; min_delta = 0
        best_ = loss;
        best_epoch_ = seen_;
        bad_ = 0;
        return true;
    }
    ++bad_;
    return false;
}

// ---------------------------------------------------------------------------
// Train log
// ---------------------------------------------------------------------------

const char* to_string(Monitor m) {
    return m == Monitor::val_loss ? "val_loss" : "train_loss";
}

const char* to_string(StopReason r) {
    return r == StopReason::early_stop ? "early_stop" : "max_epochs";
}

void TrainConfig::validate() const {
    if (max_epochs == 0) raise(ErrorKind::value, "max_epochs must be at least 1");
    if (patience == 0) raise(ErrorKind::value, "patience must be at least 1");
    if (batch_size == 0) raise(ErrorKind::value, "batch_size must be at least 1");
    if (!(adam.lr > 0.0)) raise(ErrorKind::value, "learning rate must be positive");
    if (adam.decay < 0.0) raise(ErrorKind::value, "lr decay must be non-negative");
}

namespace {

std::string fmt_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string epoch_line(const EpochRecord& r) {
    std::string line = "epoch=" + std::to_string(r.epoch) + " train_mse=" + fmt_g17(r.train_mse);
    if (r.val_mse) line += " val_mse=" + fmt_g17(*r.val_mse);
    line += " lr=" + fmt_g17(r.lr);
    return line;
}

} // namespace

std::string to_text(const TrainLog& log) {
    std::ostringstream os;
    os << "monitor=" << to_string(log.monitor) << "\n";
    for (const EpochRecord& r : log.epochs) os << epoch_line(r) << "\n";
    os << "stop_reason=" << to_string(log.stop_reason) << "\n";
    os << "best_epoch=" << log.best_epoch << "\n";
    os << "best_loss=" << fmt_g17(log.best_loss) << "\n";
    os << "epochs_run=" << log.epochs.size() << "\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

namespace {

void zero_tensors(std::vector<ParamRef>& refs) {
    for (ParamRef& ref : refs) {
        double* p = ref.tensor->data();
        std::fill(p, p + ref.tensor->size(), 0.0);
    }
}

void accumulate(std::vector<ParamRef>& into, const std::vector<ParamRef>& from) {
    for (std::size_t k = 0; k < into.size(); ++k) {
        double* dst = into[k].tensor->data();
        const double* src = from[k].tensor->data();
        const std::size_t n = into[k].tensor->size();
        for (std::size_t i = 0; i < n; ++i) dst[i] += src[i];
    }
}

double eval_normalized_mse(const Model& m, const WindowedDataset& ds) {
    double acc = 0.0;
    for (std::size_t i = 0; i < ds.count(); ++i) {
        const double err = model_predict(m, ds.input(i)) - ds.targets.at(i, 0);
        acc += err * err;
    }
    return acc / static_cast<double>(ds.count());
}

} // namespace

TrainLog train_model(Model& m, const WindowedDataset& train, const WindowedDataset* val,
                     const TrainConfig& cfg) {
    cfg.validate();
    if (train.count() == 0) raise(ErrorKind::data, "training set has no windows");
    if (val && val->count() == 0) raise(ErrorKind::data, "validation set has no windows");
    if (train.window != m.config.window || train.features() != m.config.features) {
        raise(ErrorKind::shape, "training windows are " + std::to_string(train.window) + " x " +
                                    std::to_string(train.features()) + ", model expects " +
                                    std::to_string(m.config.window) + " x " +
                                    std::to_string(m.config.features));
    }
    const Monitor monitor =
        cfg.monitor.value_or(val ? Monitor::val_loss : Monitor::train_loss);
    if (monitor == Monitor::val_loss && !val) {
        raise(ErrorKind::usage, "monitoring val_loss requires a validation set");
    }

    auto refs = param_refs(m);
    std::vector<Tensor*> params;
    params.reserve(refs.size());
    for (ParamRef& ref : refs) params.push_back(ref.tensor);
    Adam adam(cfg.adam, params);

    Model grad_sum = zero_clone(m);
    auto gsum_refs = param_refs(grad_sum);
    std::vector<const Tensor*> grad_ptrs;
    grad_ptrs.reserve(gsum_refs.size());
    for (ParamRef& ref : gsum_refs) grad_ptrs.push_back(ref.tensor);

    const std::size_t n = train.count();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    Model best = m;
    EarlyStopper stopper(cfg.patience);
    TrainLog log;
    log.monitor = monitor;
    log.stop_reason = StopReason::max_epochs;

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        const double lr = lr_at(cfg.adam, epoch);

        // Fresh shuffle stream per epoch; the all-ones tag cannot collide
        // with any per-sample stream below.
        Rng shuffle_rng(mix_seed(cfg.seed, epoch, ~std::uint64_t{0}));
        for (std::size_t i = n; i-- > 1;) {
            const std::size_t j = shuffle_rng.next_below(i + 1);
            std::swap(order[i], order[j]);
        }

        double epoch_se = 0.0;
        const std::size_t batches = (n + cfg.batch_size - 1) / cfg.batch_size;
        for (std::size_t b = 0; b < batches; ++b) {
            const std::size_t lo = b * cfg.batch_size;
            const std::size_t hi = std::min(n, lo + cfg.batch_size);
            const double inv_bs = 1.0 / static_cast<double>(hi - lo);
            zero_tensors(gsum_refs);
            double batch_se = 0.0;
            for (std::size_t k = lo; k < hi; ++k) {
                const std::size_t i = order[k];
                // Dropout masks depend on (seed, epoch, sample), not on the
                // shuffle, so the loss surface per sample is well defined.
                Rng drop_rng(mix_seed(cfg.seed, epoch, i));
                ForwardCache cache;
                try {
                    const double pred = model_forward(m, train.input(i), true, drop_rng, &cache);
                    const double err = pred - train.targets.at(i, 0);
                    batch_se += err * err;
                    Model g = model_backward(m, cache, 2.0 * err * inv_bs);
                    auto g_refs = param_refs(g);
                    accumulate(gsum_refs, g_refs);
                } catch (const Error& e) {
                    if (e.kind() == ErrorKind::divergence) {
                        raise(ErrorKind::divergence,
                              "training diverged at epoch " + std::to_string(epoch + 1) +
                                  ", batch " + std::to_string(b + 1) + ", sample " +
                                  std::to_string(i) + ": " + e.what());
                    }
                    throw;
                }
            }
            if (!std::isfinite(batch_se)) {
                raise(ErrorKind::divergence, "non-finite loss at epoch " +
                                                 std::to_string(epoch + 1) + ", batch " +
                                                 std::to_string(b + 1));
            }
            adam.step(params, grad_ptrs, lr);
            epoch_se += batch_se;
        }

        EpochRecord rec;
        rec.epoch = epoch + 1;
        rec.train_mse = epoch_se / static_cast<double>(n);
        if (val) rec.val_mse = eval_normalized_mse(m, *val);
        rec.lr = lr;
        rec.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        log.epochs.push_back(rec);
        if (cfg.progress) {
            char timing[48];
            std::snprintf(timing, sizeof timing, " wall=%.2fs", rec.wall_seconds);
            cfg.progress(epoch_line(rec) + timing);
        }

        const double monitored = monitor == Monitor::val_loss ? *rec.val_mse : rec.train_mse;
        if (!std::isfinite(monitored)) {
            raise(ErrorKind::divergence,
                  "non-finite monitored loss at epoch " + std::to_string(epoch + 1));
        }
        if (stopper.observe(monitored)) best = m;
        if (stopper.should_stop()) {
            log.stop_reason = StopReason::early_stop;
            break;
        }
    }

    m = std::move(best); // weights from the best monitored epoch
    log.best_epoch = stopper.best_epoch();
    log.best_loss = stopper.best_loss();
    return log;
}

// ---------------------------------------------------------------------------
// Evaluation in original units
// ---------------------------------------------------------------------------

EvalResult evaluate_model(const Model& m, const WindowedDataset& ds, const ScalerParams& scaler) {
    if (scaler.features() != m.config.features) {
        raise(ErrorKind::consistency, "scaler covers " + std::to_string(scaler.features()) +
                                          " features, model expects " +
                                          std::to_string(m.config.features));
    }
    if (ds.count() == 0) raise(ErrorKind::data, "evaluation set has no windows");

    EvalResult res;
    res.actual.reserve(ds.count());
    res.predicted.reserve(ds.count());
    for (std::size_t i = 0; i < ds.count(); ++i) {
        res.predicted.push_back(inverse_transform_value(model_predict(m, ds.input(i)), scaler));
        res.actual.push_back(inverse_transform_value(ds.targets.at(i, 0), scaler));
    }
    const Tensor y({ds.count()}, std::vector<double>(res.actual));
    const Tensor yhat({ds.count()}, std::vector<double>(res.predicted));
    res.mse = mse(y, yhat);
    res.rmse = rmse(y, yhat);
    return res;
}

// ---------------------------------------------------------------------------
// Gradient checking
// ---------------------------------------------------------------------------

GradCheckReport gradient_check(const ModelConfig& cfg, double tolerance, std::uint64_t seed,
                               const std::function<void(Model&)>& tamper_grads) {
    if (!(tolerance > 0.0)) raise(ErrorKind::value, "gradient check tolerance must be positive");

    Model m = build_model(cfg);
    // Nudge additive biases away from zero so ReLU preactivations sit off
    // the kink at the probe point.
    for (Conv1DParams& c : m.conv)
        for (std::size_t i = 0; i < c.bias.size(); ++i) c.bias[i] += 0.1;
    for (std::size_t i = 0; i < m.dense1.b.size(); ++i) m.dense1.b[i] += 0.1;

    Rng probe_rng(mix_seed(seed, 0x9d70be5a11ddull));
    const Tensor x = uniform_init(probe_rng, {cfg.window, cfg.features}, 1.0);
    const double target = probe_rng.uniform(-1.0, 1.0);
    // One fixed dropout stream reused for every forward, so all probes see
    // the same masks and the loss is differentiable in the parameters.
    const std::uint64_t drop_seed = mix_seed(seed, 0xd20b0a57ull);

    const double h = 1e-5;
    auto loss_at = [&](const Model& model) {
        Rng drop(drop_seed);
        const double pred = model_forward(model, x, true, drop, nullptr);
        const double err = pred - target;
        return err * err;
    };

    Rng drop(drop_seed);
    ForwardCache cache;
    const double pred = model_forward(m, x, true, drop, &cache);
    Model analytic = model_backward(m, cache, 2.0 * (pred - target));
    if (tamper_grads) tamper_grads(analytic);

    GradCheckReport report;
    report.tolerance = tolerance;
    auto a_refs = param_refs(analytic);
    auto m_refs = param_refs(m);
    for (std::size_t k = 0; k < m_refs.size(); ++k) {
        GradCheckBlock block;
        block.name = m_refs[k].name;
        Tensor& theta = *m_refs[k].tensor;
        const Tensor& grad = *a_refs[k].tensor;
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const double saved = theta[i];
            theta[i] = saved + h;
            const double up = loss_at(m);
            theta[i] = saved - h;
            const double down = loss_at(m);
            theta[i] = saved;
            const double fd = (up - down) / (2.0 * h);
            const double a = grad[i];
            const double diff = std::abs(a - fd);
            const double scale = std::max(1.0, std::abs(a) + std::abs(fd));
            block.max_abs_diff = std::max(block.max_abs_diff, diff);
            block.max_rel_err = std::max(block.max_rel_err, diff / scale);
            if (diff > tolerance * scale) block.pass = false;
        }
        report.all_pass = report.all_pass && block.pass;
        report.blocks.push_back(std::move(block));
    }
    return report;
}

} // namespace seqcast
