#include "seqcast.h"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <new>
#include <string>
#include <vector>

#include "seqcast/error.hpp"
#include "seqcast/pipeline.hpp"

using namespace seqcast;

struct seqcast_options {
    PipelineOptions o;
    seqcast_progress_fn progress_fn = nullptr;
    void* progress_user = nullptr;
};

struct seqcast_model {
    ModelBundle bundle;
};

namespace {

thread_local std::string t_error;

seqcast_status map_kind(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::usage:
        case ErrorKind::value:
            return SEQCAST_USAGE_ERROR;
        case ErrorKind::shape:
        case ErrorKind::data:
        case ErrorKind::io:
        case ErrorKind::format:
        case ErrorKind::consistency:
            return SEQCAST_DATA_ERROR;
        case ErrorKind::divergence:
            return SEQCAST_DIVERGENCE_ERROR;
    }
    return SEQCAST_ERROR;
}

template <typename F>
seqcast_status guarded(F&& body) {
    t_error.clear();
    try {
        return body();
    } catch (const Error& e) {
        t_error = e.what();
        return map_kind(e.kind());
    } catch (const std::exception& e) {
        t_error = e.what();
        return SEQCAST_ERROR;
    } catch (...) {
        t_error = "unknown failure";
        return SEQCAST_ERROR;
    }
}

seqcast_status usage_failure(const std::string& message) {
    t_error = message;
    return SEQCAST_USAGE_ERROR;
}

bool parse_u64(const std::string& v, std::uint64_t& out) {
    if (v.empty()) return false;
    char* end = nullptr;
    errno = 0;
    const unsigned long long parsed = std::strtoull(v.c_str(), &end, 10);
    if (errno != 0 || end != v.c_str() + v.size()) return false;
    out = parsed;
    return true;
}

bool parse_f64(const std::string& v, double& out) {
    if (v.empty()) return false;
    char* end = nullptr;
    out = std::strtod(v.c_str(), &end);
    return end == v.c_str() + v.size() && std::isfinite(out);
}

bool parse_bool(const std::string& v, bool& out) {
    if (v == "1" || v == "true") {
        out = true;
        return true;
    }
    if (v == "0" || v == "false") {
        out = false;
        return true;
    }
    return false;
}

bool parse_size_list(const std::string& v, std::vector<std::size_t>& out) {
    out.clear();
    std::size_t pos = 0;
    while (pos <= v.size()) {
        const std::size_t comma = v.find(',', pos);
        const std::string item = v.substr(pos, comma == std::string::npos ? comma : comma - pos);
        std::uint64_t n = 0;
        if (!parse_u64(item, n) || n == 0) return false;
        out.push_back(static_cast<std::size_t>(n));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return !out.empty();
}

void copy_name(char* dst, std::size_t cap, const std::string& src) {
    const std::size_t n = std::min(cap - 1, src.size());
    std::memcpy(dst, src.data(), n);
    dst[n] = '\0';
}

} // namespace

extern "C" {

const char* seqcast_last_error(void) { return t_error.c_str(); }

const char* seqcast_version(void) { return "0.1.0"; }

seqcast_options* seqcast_options_new(void) { return new (std::nothrow) seqcast_options(); }

void seqcast_options_free(seqcast_options* opts) { delete opts; }

seqcast_status seqcast_options_set(seqcast_options* opts, const char* key, const char* value) {
    if (!opts || !key || !value) return usage_failure("options, key, and value must be non-null");
    const std::string k = key;
    const std::string v = value;
    PipelineOptions& o = opts->o;
    t_error.clear();

    auto bad_value = [&] {
        return usage_failure("bad value for option \"" + k + "\": \"" + v + "\"");
    };

    std::uint64_t u = 0;
    double d = 0.0;
    bool b = false;

    if (k == "data") {
        o.data_path = v;
    } else if (k == "out_dir") {
        o.out_dir = v;
    } else if (k == "checkpoint") {
        o.checkpoint_path = v;
    } else if (k == "date_column") {
        o.schema.date_column = v;
    } else if (k == "temp_column") {
        o.schema.temp_column = v;
    } else if (k == "extra_columns") {
        o.schema.extra_columns.clear();
        std::size_t pos = 0;
        while (pos <= v.size()) {
            const std::size_t comma = v.find(',', pos);
            const std::string item =
                v.substr(pos, comma == std::string::npos ? comma : comma - pos);
            if (!item.empty()) o.schema.extra_columns.push_back(item);
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
    } else if (k == "date_format") {
        if (v == "iso") {
            o.schema.date_format = DateFormat::iso;
        } else if (v == "dmy") {
            o.schema.date_format = DateFormat::dmy;
        } else {
            return bad_value();
        }
    } else if (k == "resample_daily") {
        if (!parse_bool(v, b)) return bad_value();
        o.schema.resample_daily = b;
    } else if (k == "enforce_band") {
        if (!parse_bool(v, b)) return bad_value();
        o.schema.enforce_band = b;
    } else if (k == "calendar") {
        if (!parse_bool(v, b)) return bad_value();
        o.calendar = b;
    } else if (k == "temp_min") {
        if (!parse_f64(v, d)) return bad_value();
        o.schema.temp_min = d;
    } else if (k == "temp_max") {
        if (!parse_f64(v, d)) return bad_value();
        o.schema.temp_max = d;
    } else if (k == "split_ratio") {
        if (!parse_f64(v, d)) return bad_value();
        o.split_ratio = d;
    } else if (k == "val_fraction") {
        if (!parse_f64(v, d)) return bad_value();
        o.val_fraction = d;
    } else if (k == "window") {
        if (!parse_u64(v, u) || u == 0) return bad_value();
        o.model.window = static_cast<std::size_t>(u);
    } else if (k == "features") {
        if (!parse_u64(v, u) || u == 0) return bad_value();
        o.model.features = static_cast<std::size_t>(u);
    } else if (k == "conv_filters") {
        if (!parse_size_list(v, o.model.conv_filters)) return bad_value();
    } else if (k == "kernel") {
        if (!parse_u64(v, u) || u == 0) return bad_value();
        o.model.kernel = static_cast<std::size_t>(u);
    } else if (k == "lstm_units") {
        if (!parse_u64(v, u) || u == 0) return bad_value();
        o.model.lstm_units = static_cast<std::size_t>(u);
    } else if (k == "lstm_depth") {
        if (!parse_u64(v, u) || u == 0) return bad_value();
        o.model.lstm_depth = static_cast<std::size_t>(u);
    } else if (k == "dropout_rate") {
        if (!parse_f64(v, d) || d < 0.0 || d >= 1.0) return bad_value();
        o.model.dropout_rate = d;
    } else if (k == "bilstm_units") {
        if (!parse_u64(v, u) || u == 0) return bad_value();
        o.model.bilstm_units = static_cast<std::size_t>(u);
    } else if (k == "dense_units") {
        if (!parse_u64(v, u) || u == 0) return bad_value();
        o.model.dense_units = static_cast<std::size_t>(u);
    } else if (k == "seed") {
        if (!parse_u64(v, u)) return bad_value();
        o.model.seed = u;
        o.train.seed = u;
    } else if (k == "max_epochs") {
        if (!parse_u64(v, u) || u == 0) return bad_value();
        o.train.max_epochs = static_cast<std::size_t>(u);
    } else if (k == "patience") {
        if (!parse_u64(v, u) || u == 0) return bad_value();
        o.train.patience = static_cast<std::size_t>(u);
    } else if (k == "batch_size") {
        if (!parse_u64(v, u) || u == 0) return bad_value();
        o.train.batch_size = static_cast<std::size_t>(u);
    } else if (k == "lr") {
        if (!parse_f64(v, d) || d <= 0.0) return bad_value();
        o.train.adam.lr = d;
    } else if (k == "beta1") {
        if (!parse_f64(v, d)) return bad_value();
        o.train.adam.beta1 = d;
    } else if (k == "beta2") {
        if (!parse_f64(v, d)) return bad_value();
        o.train.adam.beta2 = d;
    } else if (k == "eps") {
        if (!parse_f64(v, d) || d <= 0.0) return bad_value();
        o.train.adam.eps = d;
    } else if (k == "decay") {
        if (!parse_f64(v, d) || d < 0.0) return bad_value();
        o.train.adam.decay = d;
    } else if (k == "monitor") {
        if (v == "auto") {
            o.train.monitor.reset();
        } else if (v == "train_loss") {
            o.train.monitor = Monitor::train_loss;
        } else if (v == "val_loss") {
            o.train.monitor = Monitor::val_loss;
        } else {
            return bad_value();
        }
    } else if (k == "steps") {
        if (!parse_u64(v, u) || u == 0) return bad_value();
        o.steps = static_cast<std::size_t>(u);
    } else {
        return usage_failure("unknown option \"" + k + "\"");
    }
    return SEQCAST_OK;
}

seqcast_status seqcast_options_set_progress(seqcast_options* opts, seqcast_progress_fn fn,
                                            void* user) {
    if (!opts) return usage_failure("options must be non-null");
    opts->progress_fn = fn;
    opts->progress_user = user;
    t_error.clear();
    return SEQCAST_OK;
}

seqcast_status seqcast_train(const seqcast_options* opts, seqcast_train_summary* summary) {
    if (!opts || !summary) return usage_failure("options and summary must be non-null");
    return guarded([&] {
        PipelineOptions run = opts->o;
        if (opts->progress_fn) {
            seqcast_progress_fn fn = opts->progress_fn;
            void* user = opts->progress_user;
            run.train.progress = [fn, user](const std::string& line) { fn(line.c_str(), user); };
        }
        const TrainOutcome out = run_train(run);
        const double nan = std::numeric_limits<double>::quiet_NaN();
        *summary = seqcast_train_summary{};
        summary->train_mse = out.train_mse;
        summary->train_rmse = out.train_rmse;
        summary->has_val = out.val_mse.has_value() ? 1 : 0;
        summary->val_mse = out.val_mse.value_or(nan);
        summary->val_rmse = out.val_rmse.value_or(nan);
        summary->epochs_run = out.log.epochs.size();
        summary->best_epoch = out.log.best_epoch;
        summary->stopped_early = out.log.stop_reason == StopReason::early_stop ? 1 : 0;
        summary->best_loss = out.log.best_loss;
        summary->train_windows = out.train_windows;
        summary->val_windows = out.val_windows;
        return SEQCAST_OK;
    });
}

seqcast_status seqcast_evaluate(const seqcast_options* opts, seqcast_eval_summary* summary) {
    if (!opts || !summary) return usage_failure("options and summary must be non-null");
    return guarded([&] {
        const EvaluateOutcome out = run_evaluate(opts->o);
        *summary = seqcast_eval_summary{};
        summary->mse = out.mse;
        summary->rmse = out.rmse;
        summary->windows = out.windows;
        return SEQCAST_OK;
    });
}

seqcast_status seqcast_predict(const seqcast_options* opts, seqcast_prediction* out,
                               size_t capacity, size_t* count) {
    if (!opts || !out || !count) {
        return usage_failure("options, output buffer, and count must be non-null");
    }
    return guarded([&]() -> seqcast_status {
        const PredictOutcome res = run_predict(opts->o);
        if (capacity < res.values.size()) {
            return usage_failure("prediction buffer holds " + std::to_string(capacity) +
                                 " entries, need " + std::to_string(res.values.size()));
        }
        for (std::size_t i = 0; i < res.values.size(); ++i) {
            copy_name(out[i].date, sizeof out[i].date, res.dates[i].iso());
            out[i].value = res.values[i];
        }
        *count = res.values.size();
        return SEQCAST_OK;
    });
}

seqcast_status seqcast_gradient_check(const seqcast_options* opts, double tolerance,
                                      seqcast_gradcheck_block* blocks, size_t capacity,
                                      size_t* count, int* all_pass) {
    if (!count) return usage_failure("count must be non-null");
    return guarded([&]() -> seqcast_status {
        const std::uint64_t seed = opts ? opts->o.model.seed : 42;
        const GradCheckReport report = gradient_check(gradcheck_config(), tolerance, seed);
        *count = report.blocks.size();
        if (!blocks) return SEQCAST_OK; // size query
        if (capacity < report.blocks.size()) {
            return usage_failure("block buffer holds " + std::to_string(capacity) +
                                 " entries, need " + std::to_string(report.blocks.size()));
        }
        for (std::size_t i = 0; i < report.blocks.size(); ++i) {
            const GradCheckBlock& b = report.blocks[i];
            copy_name(blocks[i].name, sizeof blocks[i].name, b.name);
            blocks[i].max_abs_diff = b.max_abs_diff;
            blocks[i].max_rel_err = b.max_rel_err;
            blocks[i].pass = b.pass ? 1 : 0;
        }
        if (all_pass) *all_pass = report.all_pass ? 1 : 0;
        if (!report.all_pass) {
            t_error = "gradient check failed";
            return SEQCAST_GRADCHECK_FAILED;
        }
        return SEQCAST_OK;
    });
}

seqcast_status seqcast_model_open(const char* checkpoint_path, seqcast_model** out) {
    if (!checkpoint_path || !out) return usage_failure("path and out must be non-null");
    return guarded([&] {
        auto handle = new seqcast_model{load_model(checkpoint_path)};
        *out = handle;
        return SEQCAST_OK;
    });
}

void seqcast_model_close(seqcast_model* model) { delete model; }

uint64_t seqcast_model_window(const seqcast_model* model) {
    return model ? model->bundle.model.config.window : 0;
}

uint64_t seqcast_model_features(const seqcast_model* model) {
    return model ? model->bundle.model.config.features : 0;
}

uint64_t seqcast_model_param_count(const seqcast_model* model) {
    if (!model) return 0;
    const auto rows = count_params(model->bundle.model);
    return rows.empty() ? 0 : rows.back().second;
}

seqcast_status seqcast_model_predict(const seqcast_model* model, const double* window, size_t len,
                                     double* prediction) {
    if (!model || !window || !prediction) {
        return usage_failure("model, window, and prediction must be non-null");
    }
    return guarded([&]() -> seqcast_status {
        const ModelConfig& cfg = model->bundle.model.config;
        const std::size_t need = cfg.window * cfg.features;
        if (len != need) {
            return usage_failure("window must hold " + std::to_string(need) + " values, got " +
                                 std::to_string(len));
        }
        Tensor x({cfg.window, cfg.features}, std::vector<double>(window, window + len));
        x = transform(x, model->bundle.scaler);
        const double scaled = model_predict(model->bundle.model, x);
        *prediction = inverse_transform_value(scaled, model->bundle.scaler);
        return SEQCAST_OK;
    });
}

} // extern "C"
