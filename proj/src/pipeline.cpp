#include "seqcast/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "seqcast/crc32.hpp"
#include "seqcast/error.hpp"

namespace seqcast {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct FileDigest {
    std::uint64_t bytes = 0;
    std::uint32_t crc = 0;
};

FileDigest digest_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorKind::io, "cannot open file for digest: " + path);
    FileDigest d;
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        d.crc = crc32(d.crc, buf, static_cast<std::size_t>(in.gcount()));
        d.bytes += static_cast<std::uint64_t>(in.gcount());
    }
    return d;
}

std::string ensure_out_dir(const std::string& out_dir) {
    fs::path dir = out_dir.empty() ? fs::path(".") : fs::path(out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) raise(ErrorKind::io, "cannot create output directory " + dir.string() + ": " +
                                     ec.message());
    return dir.string();
}

json schema_json(const CsvSchema& s) {
    return json{{"date_column", s.date_column},
                {"temp_column", s.temp_column},
                {"extra_columns", s.extra_columns},
                {"date_format", s.date_format == DateFormat::iso ? "iso" : "dmy"},
                {"resample_daily", s.resample_daily},
                {"temp_min", s.temp_min},
                {"temp_max", s.temp_max},
                {"enforce_band", s.enforce_band}};
}

json model_json(const ModelConfig& c) {
    return json{{"window", c.window},
                {"features", c.features},
                {"conv_filters", c.conv_filters},
                {"kernel", c.kernel},
                {"lstm_units", c.lstm_units},
                {"lstm_depth", c.lstm_depth},
                {"dropout_rate", c.dropout_rate},
                {"bilstm_units", c.bilstm_units},
                {"dense_units", c.dense_units},
                {"output_units", c.output_units},
                {"seed", c.seed}};
}

json train_json(const TrainConfig& t) {
    return json{{"max_epochs", t.max_epochs},
                {"patience", t.patience},
                {"batch_size", t.batch_size},
                {"lr", t.adam.lr},
                {"beta1", t.adam.beta1},
                {"beta2", t.adam.beta2},
                {"eps", t.adam.eps},
                {"decay", t.adam.decay},
                {"seed", t.seed},
                {"monitor", t.monitor ? to_string(*t.monitor) : "auto"}};
}

/// The manifest carries everything needed to reproduce the run: resolved
/// options, the input digest, and artifact paths. No wall-clock fields, so
/// identical runs write identical manifests.
std::string write_manifest(const std::string& out_dir, const std::string& command,
                           const PipelineOptions& opts, const json& artifacts) {
    const FileDigest digest = digest_file(opts.data_path);
    char crc_text[16];
    std::snprintf(crc_text, sizeof crc_text, "%08x", digest.crc);
    json doc{{"command", command},
             {"tool", "seqcast"},
             {"tool_version", "0.1.0"},
             {"checkpoint_format", 1},
             {"data",
              json{{"path", opts.data_path}, {"bytes", digest.bytes}, {"crc32", crc_text}}},
             {"schema", schema_json(opts.schema)},
             {"calendar", opts.calendar},
             {"split_ratio", opts.split_ratio},
             {"val_fraction", opts.val_fraction},
             {"model", model_json(opts.model)},
             {"train", train_json(opts.train)},
             {"steps", opts.steps},
             {"artifacts", artifacts}};
    const std::string path = (fs::path(out_dir) / (command + "_manifest.json")).string();
    std::ofstream out(path, std::ios::trunc);
    if (!out) raise(ErrorKind::io, "cannot write manifest: " + path);
    out << doc.dump(2) << "\n";
    if (!out) raise(ErrorKind::io, "failed writing manifest: " + path);
    return path;
}

/// ingest -> impute; shared head of every command.
SeriesBundle load_series(const PipelineOptions& opts, IngestReport* report) {
    const std::vector<ClimateRecord> records = read_csv(opts.data_path, opts.schema, report);
    SeriesBundle bundle = to_series(records, opts.calendar);
    bundle.values = impute_mean(bundle.values, bundle.missing);
    return bundle;
}

void check_feature_count(const ModelConfig& cfg, std::size_t series_features) {
    if (cfg.features != series_features) {
        raise(ErrorKind::consistency,
              "series has " + std::to_string(series_features) + " feature columns, model expects " +
                  std::to_string(cfg.features) +
                  " (match --features-extra/--calendar with the checkpoint)");
    }
}

} // namespace

ModelConfig gradcheck_config() {
    ModelConfig cfg;
    cfg.window = 6;
    cfg.features = 1;
    cfg.conv_filters = {4, 4};
    cfg.kernel = 2;
    cfg.lstm_units = 3;
    cfg.lstm_depth = 2;
    cfg.dropout_rate = 0.2;
    cfg.bilstm_units = 4;
    cfg.dense_units = 5;
    cfg.output_units = 1;
    cfg.seed = 7;
    return cfg;
}

TrainOutcome run_train(const PipelineOptions& opts) {
    if (!(opts.split_ratio > 0.0 && opts.split_ratio < 1.0)) {
        raise(ErrorKind::usage, "train/test split ratio must lie in (0, 1)");
    }
    if (!(opts.val_fraction >= 0.0 && opts.val_fraction < 1.0)) {
        raise(ErrorKind::usage, "validation fraction must lie in [0, 1)");
    }
    opts.model.validate();
    opts.train.validate();

    const std::string out_dir = ensure_out_dir(opts.out_dir);

    TrainOutcome outcome;
    outcome.checkpoint_path = (fs::path(out_dir) / "model.bin").string();
    outcome.trainlog_path = (fs::path(out_dir) / "trainlog.txt").string();
    outcome.manifest_path = write_manifest(
        out_dir, "train", opts,
        json{{"checkpoint", outcome.checkpoint_path}, {"trainlog", outcome.trainlog_path}});

    SeriesBundle bundle = load_series(opts, &outcome.ingest);
    check_feature_count(opts.model, bundle.values.dim(1));

    auto [train_rows, test_rows] = chronological_split(bundle.values, opts.split_ratio);
    (void)test_rows; // left untouched for evaluation runs
    const ScalerParams scaler = fit_scaler(train_rows);
    const Tensor train_scaled = transform(train_rows, scaler);

    WindowedDataset all_windows = make_windows(train_scaled, opts.model.window);
    WindowedDataset train_ds = std::move(all_windows);
    WindowedDataset val_ds;
    bool have_val = false;
    if (opts.val_fraction > 0.0) {
        const auto tail = static_cast<std::size_t>(
            std::floor(static_cast<double>(train_ds.count()) * opts.val_fraction));
        if (tail > 0) {
            auto parts = train_ds.split_tail(opts.val_fraction);
            train_ds = std::move(parts.first);
            val_ds = std::move(parts.second);
            have_val = true;
        }
    }

    Model model = build_model(opts.model);
    outcome.log = train_model(model, train_ds, have_val ? &val_ds : nullptr, opts.train);
    outcome.train_windows = train_ds.count();
    outcome.val_windows = val_ds.count();

    const EvalResult train_eval = evaluate_model(model, train_ds, scaler);
    outcome.train_mse = train_eval.mse;
    outcome.train_rmse = train_eval.rmse;
    if (have_val) {
        const EvalResult val_eval = evaluate_model(model, val_ds, scaler);
        outcome.val_mse = val_eval.mse;
        outcome.val_rmse = val_eval.rmse;
    }

    save_model(model, scaler, outcome.checkpoint_path);
    {
        std::ofstream log_out(outcome.trainlog_path, std::ios::trunc);
        if (!log_out) raise(ErrorKind::io, "cannot write train log: " + outcome.trainlog_path);
        log_out << to_text(outcome.log);
        if (!log_out) raise(ErrorKind::io, "failed writing train log: " + outcome.trainlog_path);
    }
    return outcome;
}

EvaluateOutcome run_evaluate(const PipelineOptions& opts) {
    if (!(opts.split_ratio >= 0.0 && opts.split_ratio < 1.0)) {
        raise(ErrorKind::usage,
              "evaluate split ratio must lie in [0, 1); 0 evaluates the whole file");
    }
    const std::string out_dir = ensure_out_dir(opts.out_dir);

    EvaluateOutcome outcome;
    outcome.predictions_path = (fs::path(out_dir) / "predictions.csv").string();
    outcome.manifest_path = write_manifest(out_dir, "evaluate", opts,
                                           json{{"checkpoint", opts.checkpoint_path},
                                                {"predictions", outcome.predictions_path}});

    const ModelBundle loaded = load_model(opts.checkpoint_path);
    const Model& model = loaded.model;
    const ScalerParams& scaler = loaded.scaler;

    SeriesBundle series = load_series(opts, nullptr);
    check_feature_count(model.config, series.values.dim(1));

    std::size_t test_begin = 0;
    Tensor test_rows = series.values;
    if (opts.split_ratio > 0.0) {
        test_begin = split_point(series.values.dim(0), opts.split_ratio);
        auto parts = chronological_split(series.values, opts.split_ratio);
        test_rows = std::move(parts.second);
    }
    const Tensor test_scaled = transform(test_rows, scaler);
    const WindowedDataset test_ds = make_windows(test_scaled, model.config.window);

    const EvalResult eval = evaluate_model(model, test_ds, scaler);
    outcome.mse = eval.mse;
    outcome.rmse = eval.rmse;
    outcome.windows = test_ds.count();

    std::ofstream out(outcome.predictions_path, std::ios::trunc);
    if (!out) raise(ErrorKind::io, "cannot write predictions: " + outcome.predictions_path);
    out << "date,actual,predicted\n";
    char buf[64];
    for (std::size_t i = 0; i < test_ds.count(); ++i) {
        // Window i predicts the row after it inside the test slice.
        const Date date = series.dates[test_begin + i + model.config.window];
        out << date.iso();
        std::snprintf(buf, sizeof buf, ",%.17g", eval.actual[i]);
        out << buf;
        std::snprintf(buf, sizeof buf, ",%.17g", eval.predicted[i]);
        out << buf << "\n";
    }
    out.flush();
    if (!out) raise(ErrorKind::io, "failed writing predictions: " + outcome.predictions_path);
    return outcome;
}

PredictOutcome run_predict(const PipelineOptions& opts) {
    if (opts.steps == 0) raise(ErrorKind::usage, "steps must be at least 1");

    const ModelBundle loaded = load_model(opts.checkpoint_path);
    const Model& model = loaded.model;
    const ScalerParams& scaler = loaded.scaler;
    const std::size_t W = model.config.window;
    const std::size_t F = model.config.features;
    if (opts.steps > 1 && F != 1) {
        raise(ErrorKind::usage,
              "multi-step roll-forward needs a univariate model (future feature values unknown)");
    }

    SeriesBundle series = load_series(opts, nullptr);
    check_feature_count(model.config, series.values.dim(1));
    const std::size_t L = series.values.dim(0);
    if (L < W) {
        raise(ErrorKind::data, "need at least " + std::to_string(W) + " trailing rows, file has " +
                                   std::to_string(L));
    }

    const Tensor scaled = transform(series.values, scaler);
    std::vector<double> window(W * F);
    std::memcpy(window.data(), scaled.data() + (L - W) * F, window.size() * sizeof(double));

    PredictOutcome outcome;
    Date date = series.dates.back();
    for (std::size_t s = 0; s < opts.steps; ++s) {
        const Tensor x({W, F}, window);
        const double pred_scaled = model_predict(model, x);
        date = date.next_day();
        outcome.dates.push_back(date);
        outcome.values.push_back(inverse_transform_value(pred_scaled, scaler));
        if (s + 1 < opts.steps) {
            // Slide one day: drop the oldest row, append the prediction.
            window.erase(window.begin(), window.begin() + static_cast<std::ptrdiff_t>(F));
            window.push_back(pred_scaled);
        }
    }
    return outcome;
}

} // namespace seqcast
