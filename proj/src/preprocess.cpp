#include "seqcast/preprocess.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "seqcast/error.hpp"

namespace seqcast {

namespace {

void require_matrix(const Tensor& t, const char* who) {
    if (t.rank() != 2) {
        raise(ErrorKind::shape, std::string(who) + ": expected a 2-D [L x F] series, got " +
                                    t.shape_str());
    }
}

void require_feature_match(const Tensor& t, const ScalerParams& p, const char* who) {
    require_matrix(t, who);
    if (t.dim(1) != p.features()) {
        raise(ErrorKind::shape, std::string(who) + ": series has " + std::to_string(t.dim(1)) +
                                    " features but scaler was fitted on " +
                                    std::to_string(p.features()));
    }
}

} // namespace

ScalerParams fit_scaler(const Tensor& series) {
    require_matrix(series, "fit_scaler");
    const std::size_t rows = series.dim(0), cols = series.dim(1);
    if (rows < 2) {
        raise(ErrorKind::data, "fit_scaler: need at least 2 rows, got " + std::to_string(rows));
    }
    ScalerParams p;
    p.min.assign(cols, 0.0);
    p.max.assign(cols, 0.0);
    for (std::size_t c = 0; c < cols; ++c) {
        double lo = series.at(0, c), hi = series.at(0, c);
        for (std::size_t r = 1; r < rows; ++r) {
            const double v = series.at(r, c);
            if (v < lo) lo = v;
            if (v > hi) hi = v;
        }
        if (!(hi > lo)) {
            raise(ErrorKind::data, "fit_scaler: column " + std::to_string(c) +
                                       " is constant (" + std::to_string(lo) +
                                       "); cannot scale a degenerate feature");
        }
        p.min[c] = lo;
        p.max[c] = hi;
    }
    return p;
}

double transform_value(double x, const ScalerParams& p, std::size_t feature) {
    return 2.0 * (x - p.min[feature]) / (p.max[feature] - p.min[feature]) - 1.0;
}

double inverse_transform_value(double x, const ScalerParams& p, std::size_t feature) {
    return (x + 1.0) * (p.max[feature] - p.min[feature]) / 2.0 + p.min[feature];
}

Tensor transform(const Tensor& x, const ScalerParams& p) {
    require_feature_match(x, p, "transform");
    Tensor out(x.shape());
    const std::size_t rows = x.dim(0), cols = x.dim(1);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            out.at(r, c) = transform_value(x.at(r, c), p, c);
        }
    }
    return out;
}

Tensor inverse_transform(const Tensor& x, const ScalerParams& p) {
    require_feature_match(x, p, "inverse_transform");
    Tensor out(x.shape());
    const std::size_t rows = x.dim(0), cols = x.dim(1);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            out.at(r, c) = inverse_transform_value(x.at(r, c), p, c);
        }
    }
    return out;
}

Tensor impute_mean(const Tensor& series, const Tensor& missing_mask) {
    require_matrix(series, "impute_mean");
    if (!series.same_shape(missing_mask)) {
        raise(ErrorKind::shape, "impute_mean: mask shape " + missing_mask.shape_str() +
                                    " does not match series " + series.shape_str());
    }
    const std::size_t rows = series.dim(0), cols = series.dim(1);
    Tensor out = series;
    for (std::size_t c = 0; c < cols; ++c) {
        double sum = 0.0;
        std::size_t present = 0;
        for (std::size_t r = 0; r < rows; ++r) {
            if (missing_mask.at(r, c) != 0.0) {
                sum += series.at(r, c);
                ++present;
            }
        }
        if (present == 0) {
            raise(ErrorKind::data, "impute_mean: column " + std::to_string(c) +
                                       " has no present values to average");
        }
        if (present == rows) continue;
        const double mean = sum / static_cast<double>(present);
        for (std::size_t r = 0; r < rows; ++r) {
            if (missing_mask.at(r, c) == 0.0) {
                out.at(r, c) = mean;
            }
        }
    }
    return out;
}

Tensor calendar_features(const std::vector<Date>& dates) {
    Tensor out({dates.size(), 2});
    for (std::size_t i = 0; i < dates.size(); ++i) {
        out.at(i, 0) = static_cast<double>(dates[i].month);
        out.at(i, 1) = static_cast<double>(season_of(dates[i]));
    }
    return out;
}

Tensor WindowedDataset::input(std::size_t i) const {
    const std::size_t w = inputs.dim(1), f = inputs.dim(2);
    std::vector<double> data(w * f);
    std::memcpy(data.data(), inputs.data() + i * w * f, w * f * sizeof(double));
    return Tensor({w, f}, std::move(data));
}

std::pair<WindowedDataset, WindowedDataset> WindowedDataset::split_tail(double tail_fraction) const {
    const std::size_t n = count();
    auto tail = static_cast<std::size_t>(std::floor(static_cast<double>(n) * tail_fraction));
    if (tail == 0 || tail >= n) {
        raise(ErrorKind::value, "WindowedDataset::split_tail: fraction " +
                                    std::to_string(tail_fraction) + " leaves an empty side of " +
                                    std::to_string(n) + " samples");
    }
    const std::size_t head = n - tail;
    const std::size_t w = inputs.dim(1), f = inputs.dim(2);
    auto slice = [&](std::size_t begin, std::size_t count_) {
        WindowedDataset d;
        std::vector<double> in(count_ * w * f), tg(count_);
        std::memcpy(in.data(), inputs.data() + begin * w * f, in.size() * sizeof(double));
        std::memcpy(tg.data(), targets.data() + begin, tg.size() * sizeof(double));
        d.inputs = Tensor({count_, w, f}, std::move(in));
        d.targets = Tensor({count_, 1}, std::move(tg));
        d.window = window;
        return d;
    };
    return {slice(0, head), slice(head, tail)};
}

WindowedDataset make_windows(const Tensor& series, std::size_t window) {
    require_matrix(series, "make_windows");
    const std::size_t rows = series.dim(0), cols = series.dim(1);
    if (window < 1) {
        raise(ErrorKind::value, "make_windows: window must be >= 1");
    }
    if (rows <= window) {
        raise(ErrorKind::data, "make_windows: series of length " + std::to_string(rows) +
                                   " is too short for window " + std::to_string(window) +
                                   " plus a one-step target");
    }
    const std::size_t n = rows - window;
    WindowedDataset d;
    d.window = window;
    std::vector<double> in(n * window * cols), tg(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::memcpy(in.data() + i * window * cols, series.data() + i * cols,
                    window * cols * sizeof(double));
        tg[i] = series.at(i + window, 0);
    }
    d.inputs = Tensor({n, window, cols}, std::move(in));
    d.targets = Tensor({n, 1}, std::move(tg));
    return d;
}

std::size_t split_point(std::size_t length, double ratio) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(length) * ratio));
}

std::pair<Tensor, Tensor> chronological_split(const Tensor& series, double ratio) {
    require_matrix(series, "chronological_split");
    if (!(ratio > 0.0 && ratio < 1.0)) {
        raise(ErrorKind::value, "chronological_split: ratio must lie in (0, 1), got " +
                                    std::to_string(ratio));
    }
    const std::size_t rows = series.dim(0), cols = series.dim(1);
    const std::size_t head = split_point(rows, ratio);
    if (head == 0 || head == rows) {
        raise(ErrorKind::data, "chronological_split: ratio " + std::to_string(ratio) +
                                   " leaves an empty split of " + std::to_string(rows) + " rows");
    }
    std::vector<double> train(series.data(), series.data() + head * cols);
    std::vector<double> test(series.data() + head * cols, series.data() + rows * cols);
    return {Tensor({head, cols}, std::move(train)), Tensor({rows - head, cols}, std::move(test))};
}

} // namespace seqcast
