// Command-line front end. Talks to the engine exclusively through the C
// API in seqcast.h; results go to stdout, diagnostics to stderr, and the
// process exit code is the seqcast_status of the failing call.

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "seqcast.h"

namespace {

struct OptionsHandle {
    seqcast_options* ptr;
    OptionsHandle() : ptr(seqcast_options_new()) {}
    ~OptionsHandle() { seqcast_options_free(ptr); }
    OptionsHandle(const OptionsHandle&) = delete;
    OptionsHandle& operator=(const OptionsHandle&) = delete;
};

/// One CLI flag mapped onto a C-API option key; applied only when the user
/// passed it, so defaults stay inside the library.
struct KeyFlag {
    std::string key;
    std::string value;
    CLI::Option* opt = nullptr;
};

class FlagSet {
public:
    explicit FlagSet(CLI::App* cmd) : cmd_(cmd) {}

    void add(const std::string& key, const std::string& cli_name, const std::string& help) {
        flags_.push_back(std::make_unique<KeyFlag>());
        KeyFlag* f = flags_.back().get();
        f->key = key;
        f->opt = cmd_->add_option(cli_name, f->value, help);
    }

    void add_bool(const std::string& key, const std::string& cli_name, const std::string& help,
                  const char* value = "1") {
        flags_.push_back(std::make_unique<KeyFlag>());
        KeyFlag* f = flags_.back().get();
        f->key = key;
        f->value = value;
        f->opt = cmd_->add_flag(cli_name, help);
    }

    /// Pushes every user-set flag into the options; returns 0 or exit code.
    int apply(seqcast_options* opts) const {
        for (const auto& f : flags_) {
            if (f->opt->count() == 0) continue;
            const seqcast_status rc = seqcast_options_set(opts, f->key.c_str(), f->value.c_str());
            if (rc != SEQCAST_OK) {
                std::fprintf(stderr, "error: %s\n", seqcast_last_error());
                return static_cast<int>(rc);
            }
        }
        return 0;
    }

private:
    CLI::App* cmd_;
    std::vector<std::unique_ptr<KeyFlag>> flags_;
};

void add_data_flags(FlagSet& fs) {
    fs.add("data", "--data", "input CSV path");
    fs.add("date_column", "--date-col", "date column name (default: date)");
    fs.add("temp_column", "--temp-col", "temperature column name (default: meantemp)");
    fs.add("extra_columns", "--extra-cols", "comma list of extra feature columns");
    fs.add("date_format", "--date-format", "date format: iso or dmy (default: iso)");
    fs.add_bool("resample_daily", "--resample-daily", "average sub-daily rows into daily means");
    fs.add_bool("calendar", "--calendar", "append month/season feature columns");
    fs.add("temp_min", "--temp-min", "lower sanity bound, degrees C (default: -40)");
    fs.add("temp_max", "--temp-max", "upper sanity bound, degrees C (default: 60)");
    fs.add_bool("enforce_band", "--no-band", "disable the temperature sanity band", "0");
}

void add_model_flags(FlagSet& fs) {
    fs.add("window", "--window", "input window length W (default: 30)");
    fs.add("features", "--features", "feature columns the model consumes (default: 1)");
    fs.add("conv_filters", "--conv-filters", "conv stack widths (default: 256,128)");
    fs.add("kernel", "--kernel", "conv kernel size (default: 2)");
    fs.add("lstm_units", "--lstm-units", "LSTM width (default: 100)");
    fs.add("lstm_depth", "--lstm-depth", "plain LSTM layer count (default: 4)");
    fs.add("dropout_rate", "--dropout", "dropout rate after the first LSTM (default: 0.2)");
    fs.add("bilstm_units", "--bilstm-units", "bidirectional LSTM width (default: 128)");
    fs.add("dense_units", "--dense-units", "hidden dense width (default: 100)");
}

void add_train_flags(FlagSet& fs) {
    fs.add("max_epochs", "--epochs", "epoch cap T (default: 300)");
    fs.add("patience", "--patience", "early-stopping patience p (default: 7)");
    fs.add("batch_size", "--batch", "mini-batch size B (default: 32)");
    fs.add("lr", "--lr", "initial learning rate (default: 0.001)");
    fs.add("decay", "--decay", "inverse-time lr decay per epoch (default: 0)");
    fs.add("beta1", "--beta1", "Adam first-moment decay (default: 0.9)");
    fs.add("beta2", "--beta2", "Adam second-moment decay (default: 0.999)");
    fs.add("eps", "--eps", "Adam epsilon (default: 1e-8)");
    fs.add("monitor", "--monitor", "early-stop signal: auto, train_loss, val_loss");
    fs.add("split_ratio", "--split", "leading fraction of rows used for training (default: 0.8)");
    fs.add("val_fraction", "--val-split",
           "trailing fraction of train windows held out (default: 0.1)");
}

void print_progress(const char* line, void*) { std::printf("%s\n", line); }

int fail(seqcast_status rc) {
    std::fprintf(stderr, "error: %s\n", seqcast_last_error());
    return static_cast<int>(rc);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"seqcast: next-day temperature forecasting over daily climate CSVs"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(seqcast_version()));

    // train ------------------------------------------------------------
    CLI::App* train = app.add_subcommand("train", "fit a model and write a checkpoint");
    FlagSet train_flags(train);
    add_data_flags(train_flags);
    add_model_flags(train_flags);
    add_train_flags(train_flags);
    train_flags.add("seed", "--seed", "seed for init, shuffling, dropout (default: 42)");
    train_flags.add("out_dir", "--out", "output directory for artifacts (default: .)");
    bool quiet = false;
    train->add_flag("--quiet", quiet, "suppress per-epoch progress lines");

    // evaluate ----------------------------------------------------------
    CLI::App* evaluate = app.add_subcommand("evaluate", "score a checkpoint on held-out rows");
    FlagSet eval_flags(evaluate);
    add_data_flags(eval_flags);
    eval_flags.add("checkpoint", "--checkpoint", "checkpoint path (model.bin)");
    eval_flags.add("split_ratio", "--split",
                   "evaluate rows after this leading fraction; 0 = whole file (default: 0.8)");
    eval_flags.add("out_dir", "--out", "output directory for predictions.csv (default: .)");

    // predict -----------------------------------------------------------
    CLI::App* predict = app.add_subcommand("predict", "forecast the day after the CSV ends");
    FlagSet predict_flags(predict);
    add_data_flags(predict_flags);
    predict_flags.add("checkpoint", "--checkpoint", "checkpoint path (model.bin)");
    predict_flags.add("steps", "--steps",
                      "roll the window forward this many days, feeding predictions "
                      "back in; errors compound (default: 1)");

    // gradcheck ---------------------------------------------------------
    CLI::App* gradcheck =
        app.add_subcommand("gradcheck", "compare analytic gradients with finite differences");
    double tolerance = 1e-4;
    gradcheck->add_option("--tolerance", tolerance, "per-element pass threshold (default: 1e-4)");
    FlagSet gradcheck_flags(gradcheck);
    gradcheck_flags.add("seed", "--seed", "probe-point seed (default: 42)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(SEQCAST_USAGE_ERROR);
    }

    OptionsHandle opts;
    if (!opts.ptr) {
        std::fprintf(stderr, "error: out of memory\n");
        return static_cast<int>(SEQCAST_ERROR);
    }

    if (train->parsed()) {
        if (const int rc = train_flags.apply(opts.ptr)) return rc;
        if (!quiet) seqcast_options_set_progress(opts.ptr, print_progress, nullptr);
        seqcast_train_summary s{};
        const seqcast_status rc = seqcast_train(opts.ptr, &s);
        if (rc != SEQCAST_OK) return fail(rc);
        std::printf("train_mse=%.17g train_rmse=%.17g\n", s.train_mse, s.train_rmse);
        if (s.has_val) std::printf("val_mse=%.17g val_rmse=%.17g\n", s.val_mse, s.val_rmse);
        std::printf("epochs_run=%llu best_epoch=%llu stopped_early=%d\n",
                    static_cast<unsigned long long>(s.epochs_run),
                    static_cast<unsigned long long>(s.best_epoch), s.stopped_early);
        return 0;
    }

    if (evaluate->parsed()) {
        if (const int rc = eval_flags.apply(opts.ptr)) return rc;
        seqcast_eval_summary s{};
        const seqcast_status rc = seqcast_evaluate(opts.ptr, &s);
        if (rc != SEQCAST_OK) return fail(rc);
        std::printf("mse=%.17g rmse=%.17g windows=%llu\n", s.mse, s.rmse,
                    static_cast<unsigned long long>(s.windows));
        return 0;
    }

    if (predict->parsed()) {
        if (const int rc = predict_flags.apply(opts.ptr)) return rc;
        std::vector<seqcast_prediction> out(4096);
        size_t count = 0;
        const seqcast_status rc = seqcast_predict(opts.ptr, out.data(), out.size(), &count);
        if (rc != SEQCAST_OK) return fail(rc);
        for (size_t i = 0; i < count; ++i) std::printf("%s,%.17g\n", out[i].date, out[i].value);
        return 0;
    }

    if (gradcheck->parsed()) {
        if (const int rc = gradcheck_flags.apply(opts.ptr)) return rc;
        size_t count = 0;
        seqcast_status rc = seqcast_gradient_check(opts.ptr, tolerance, nullptr, 0, &count, nullptr);
        if (rc != SEQCAST_OK) return fail(rc);
        std::vector<seqcast_gradcheck_block> blocks(count);
        int all_pass = 0;
        rc = seqcast_gradient_check(opts.ptr, tolerance, blocks.data(), blocks.size(), &count,
                                    &all_pass);
        if (rc != SEQCAST_OK && rc != SEQCAST_GRADCHECK_FAILED) return fail(rc);
        for (size_t i = 0; i < count; ++i) {
            std::printf("block=%s max_rel_err=%.3g max_abs_diff=%.3g %s\n", blocks[i].name,
                        blocks[i].max_rel_err, blocks[i].max_abs_diff,
                        blocks[i].pass ? "pass" : "FAIL");
        }
        std::printf("gradcheck=%s tolerance=%g blocks=%llu\n", all_pass ? "pass" : "FAIL",
                    tolerance, static_cast<unsigned long long>(count));
        return static_cast<int>(rc);
    }

    return static_cast<int>(SEQCAST_USAGE_ERROR);
}
