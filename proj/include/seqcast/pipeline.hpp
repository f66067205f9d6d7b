#ifndef SEQCAST_PIPELINE_HPP
#define SEQCAST_PIPELINE_HPP

#include <optional>
#include <string>
#include <vector>

#include "seqcast/ingest.hpp"
#include "seqcast/model.hpp"
#include "seqcast/training.hpp"

namespace seqcast {

/// Everything a batch run needs, shared by the C API and the CLI. Paths are
/// resolved by the caller; out_dir is created on demand.
struct PipelineOptions {
    std::string data_path;
    std::string out_dir = ".";
    std::string checkpoint_path; // input for evaluate/predict
    CsvSchema schema;
    bool calendar = false;    // append month/season feature columns
    double split_ratio = 0.8; // leading fraction of rows used for training
    double val_fraction = 0.1; // trailing fraction of train windows held out
    ModelConfig model;
    TrainConfig train;
    std::size_t steps = 1; // predict: roll-forward count
};

/// Built-in down-scaled architecture for gradient checking (679 parameters).
ModelConfig gradcheck_config();

struct TrainOutcome {
    TrainLog log;
    IngestReport ingest;
    double train_mse = 0.0; // original units, over the training windows
    double train_rmse = 0.0;
    std::optional<double> val_mse; // original units, when a val split exists
    std::optional<double> val_rmse;
    std::size_t train_windows = 0;
    std::size_t val_windows = 0;
    std::string checkpoint_path;
    std::string trainlog_path;
    std::string manifest_path;
};

/// ingest -> impute -> chronological split -> fit scaler on the train rows
/// -> window each side -> build -> train -> persist checkpoint, train log,
/// and run manifest. Only the leading split_ratio rows are touched; the
/// remainder stays untouched for evaluation runs.
TrainOutcome run_train(const PipelineOptions& opts);

struct EvaluateOutcome {
    double mse = 0.0; // original units
    double rmse = 0.0;
    std::size_t windows = 0;
    std::string predictions_path;
    std::string manifest_path;
};

/// Loads a checkpoint, rebuilds the held-out tail split from the CSV with
/// the checkpoint's scaler, and writes the paired date,actual,predicted
/// series next to the metrics.
EvaluateOutcome run_evaluate(const PipelineOptions& opts);

struct PredictOutcome {
    std::vector<Date> dates;
    std::vector<double> values; // original units
};

/// Next-day forecast from the trailing window of the CSV; steps > 1 rolls
/// the window forward feeding predictions back in (univariate models only;
/// errors compound and the output says nothing about that).
PredictOutcome run_predict(const PipelineOptions& opts);

} // namespace seqcast

#endif // SEQCAST_PIPELINE_HPP
