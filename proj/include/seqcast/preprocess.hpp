#ifndef SEQCAST_PREPROCESS_HPP
#define SEQCAST_PREPROCESS_HPP

#include <cstddef>
#include <utility>
#include <vector>

#include "seqcast/date.hpp"
#include "seqcast/tensor.hpp"

namespace seqcast {

/// Per-feature minimum and maximum recorded when the scaler was fitted,
/// in original units. Transform maps the fitted range onto [-1, 1]:
///
///     x' = 2 * (x - min) / (max - min) - 1
///
/// The scaler is always fitted on the training split only; transformed
/// values outside the fitted range land outside [-1, 1] and are left
/// unclamped so the mapping stays invertible.
struct ScalerParams {
    std::vector<double> min;
    std::vector<double> max;

    std::size_t features() const noexcept { return min.size(); }
};

/// Records columnwise min/max of a [L x F] series. Rejects constant
/// columns (the affine map would degenerate) and requires L >= 2.
ScalerParams fit_scaler(const Tensor& series);

Tensor transform(const Tensor& x, const ScalerParams& p);
Tensor inverse_transform(const Tensor& x, const ScalerParams& p);

// Single-feature convenience used on prediction outputs (feature 0).
double transform_value(double x, const ScalerParams& p, std::size_t feature = 0);
double inverse_transform_value(double x, const ScalerParams& p, std::size_t feature = 0);

/// Replaces missing entries (mask 0) with the column mean over present
/// entries (mask 1). Present entries pass through untouched. Every column
/// must have at least one present value.
Tensor impute_mean(const Tensor& series, const Tensor& missing_mask);

/// Month (1-12) and meteorological season (0-3) per date, as floats, for
/// optional use as extra model features.
Tensor calendar_features(const std::vector<Date>& dates);

/// Paired (window, target) samples carved from a series: sample i covers
/// rows i..i+W-1 and its target is row i+W of feature 0 (the temperature
/// column). Horizon is fixed at one step.
struct WindowedDataset {
    Tensor inputs;  // [N x W x F]
    Tensor targets; // [N x 1]
    std::size_t window = 0;
    std::size_t horizon = 1;

    std::size_t count() const { return inputs.empty() ? 0 : inputs.dim(0); }
    std::size_t features() const { return inputs.empty() ? 0 : inputs.dim(2); }

    /// Window i as a [W x F] tensor.
    Tensor input(std::size_t i) const;

    /// Chronological tail/head split by sample count.
    std::pair<WindowedDataset, WindowedDataset> split_tail(double tail_fraction) const;
};

WindowedDataset make_windows(const Tensor& series, std::size_t window);

/// First floor(ratio * L) rows go to train, the remainder to test; time
/// order is preserved and both sides must be non-empty.
std::pair<Tensor, Tensor> chronological_split(const Tensor& series, double ratio);

/// Row index where the split lands (size of the train side).
std::size_t split_point(std::size_t length, double ratio);

} // namespace seqcast

#endif // SEQCAST_PREPROCESS_HPP
