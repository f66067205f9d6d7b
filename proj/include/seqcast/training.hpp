#ifndef SEQCAST_TRAINING_HPP
#define SEQCAST_TRAINING_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "seqcast/model.hpp"
#include "seqcast/optimizer.hpp"
#include "seqcast/preprocess.hpp"

namespace seqcast {

/// Mean squared error over equal-length vectors; n >= 1.
double mse(const Tensor& y, const Tensor& yhat);
/// sqrt(mse); the two satisfy rmse^2 == mse to machine precision.
double rmse(const Tensor& y, const Tensor& yhat);

/// Patience counter with strict-decrease improvement (min_delta = 0).
/// Epochs are observed one loss at a time; stop fires once `patience`
/// consecutive observations fail to improve on the best seen.
class EarlyStopper {
public:
    explicit EarlyStopper(std::size_t patience);

    /// Returns true when this epoch strictly improved the best loss.
    bool observe(double loss);

    bool should_stop() const { return bad_ >= patience_; }
    std::size_t best_epoch() const { return best_epoch_; } // 1-based
    double best_loss() const { return best_; }
    std::size_t epochs_seen() const { return seen_; }

private:
    std::size_t patience_;
    std::size_t seen_ = 0;
    std::size_t bad_ = 0;
    std::size_t best_epoch_ = 0;
    double best_;
};

enum class Monitor { train_loss, val_loss };
enum class StopReason { max_epochs, early_stop };

const char* to_string(Monitor m);
const char* to_string(StopReason r);

struct TrainConfig {
    std::size_t max_epochs = 300;
    std::size_t patience = 7;
    std::size_t batch_size = 32;
    AdamConfig adam; // lr 1e-3, betas 0.9/0.999, eps 1e-8, decay 0
    std::uint64_t seed = 42;
    /// Resolved at train time when unset: val_loss if a validation set is
    /// present, train_loss otherwise.
    std::optional<Monitor> monitor;
    /// Sink for per-epoch progress lines; may be empty.
    std::function<void(const std::string&)> progress;

    void validate() const;
};

struct EpochRecord {
    std::size_t epoch; // 1-based
    double train_mse;  // normalized units, accumulated as batches were seen
    std::optional<double> val_mse;
    double lr;
    double wall_seconds = 0.0; // reported live, excluded from the text form
};

struct TrainLog {
    std::vector<EpochRecord> epochs;
    Monitor monitor = Monitor::train_loss;
    StopReason stop_reason = StopReason::max_epochs;
    std::size_t best_epoch = 0; // 1-based
    double best_loss = 0.0;
};

/// Deterministic text rendering (key=value lines). Wall-clock times are
/// deliberately omitted so identical seeded runs serialize identically.
std::string to_text(const TrainLog& log);

/// Mini-batch training with Adam and early stopping. Mutates `m` in place
/// and leaves it at the best monitored epoch's weights. `val` may be null.
/// Batches are drawn in a seeded shuffled order each epoch; per-sample
/// dropout streams are derived from (seed, epoch, sample index), so results
/// do not depend on batch partitioning history.
TrainLog train_model(Model& m, const WindowedDataset& train, const WindowedDataset* val,
                     const TrainConfig& cfg);

struct EvalResult {
    double mse = 0.0;  // original units
    double rmse = 0.0; // original units
    std::vector<double> actual;    // original units, one per window
    std::vector<double> predicted; // original units, one per window
};

/// Eval-mode predictions over a windowed dataset, inverse-transformed to
/// original units before metric computation.
EvalResult evaluate_model(const Model& m, const WindowedDataset& ds, const ScalerParams& scaler);

struct GradCheckBlock {
    std::string name;
    double max_abs_diff = 0.0;
    double max_rel_err = 0.0; // |analytic - fd| / max(1, |analytic| + |fd|)
    bool pass = true;
};

struct GradCheckReport {
    std::vector<GradCheckBlock> blocks;
    double tolerance = 0.0;
    bool all_pass = true;
};

/// Compares analytic gradients against central finite differences
/// (step 1e-5) for every parameter block of a freshly built model at a
/// random non-zero point. A block passes when every element satisfies
/// |analytic - fd| <= tolerance * max(1, |analytic| + |fd|).
/// `tamper_grads`, when set, mutates the analytic gradients before the
/// comparison (mutation testing hook).
GradCheckReport gradient_check(const ModelConfig& cfg, double tolerance, std::uint64_t seed,
                               const std::function<void(Model&)>& tamper_grads = nullptr);

} // namespace seqcast

#endif // SEQCAST_TRAINING_HPP
