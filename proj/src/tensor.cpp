#include "seqcast/tensor.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include "seqcast/error.hpp"

namespace seqcast {

namespace {

std::size_t checked_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t extent : shape) {
        if (extent == 0) {
            raise(ErrorKind::shape, "Tensor: zero extent in shape");
        }
        n *= extent;
    }
    return n;
}

std::string shape_to_str(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

} // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(checked_product(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (checked_product(shape_) != data_.size()) {
        raise(ErrorKind::shape, "Tensor: shape " + shape_to_str(shape_) + " does not match " +
                                    std::to_string(data_.size()) + " elements");
    }
    if (!all_finite()) {
        raise(ErrorKind::value, "Tensor: non-finite element at construction");
    }
}

Tensor Tensor::scalar(double v) {
    return Tensor({1}, {v});
}

Tensor Tensor::reshaped(std::vector<std::size_t> shape) const {
    if (checked_product(shape) != size()) {
        raise(ErrorKind::shape, "Tensor::reshaped: " + shape_to_str(shape) +
                                    " does not hold " + std::to_string(size()) + " elements");
    }
    Tensor out;
    out.shape_ = std::move(shape);
    out.data_ = data_;
    return out;
}

Tensor Tensor::row(std::size_t i) const {
    if (rank() != 2 || i >= shape_[0]) {
        raise(ErrorKind::shape, "Tensor::row: need 2-D tensor and row < " +
                                    std::to_string(rank() == 2 ? shape_[0] : 0));
    }
    const std::size_t cols = shape_[1];
    std::vector<double> out(data_.begin() + static_cast<std::ptrdiff_t>(i * cols),
                            data_.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols));
    return Tensor({cols}, std::move(out));
}

bool Tensor::all_finite() const noexcept {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

std::string Tensor::shape_str() const {
    return shape_to_str(shape_);
}

void require_finite(const Tensor& t, const char* where) {
    if (!t.all_finite()) {
        raise(ErrorKind::divergence, std::string(where) + ": non-finite value produced");
    }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
        raise(ErrorKind::shape,
              "matmul: incompatible shapes " + a.shape_str() + " x " + b.shape_str());
    }
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor out({m, n});
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    // i-k-j order: contributions to each out[i,j] still accumulate in
    // ascending k, so the reduction order matches the naive definition.
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double aik = pa[i * k + kk];
            const double* brow = pb + kk * n;
            double* orow = po + i * n;
            for (std::size_t j = 0; j < n; ++j) {
                orow[j] += aik * brow[j];
            }
        }
    }
    detail::debug_check_finite(out, "matmul");
    return out;
}

namespace {

template <typename F>
Tensor binary_op(const Tensor& a, const Tensor& b, const char* name, F f) {
    if (!a.same_shape(b)) {
        raise(ErrorKind::shape, std::string(name) + ": shape mismatch " + a.shape_str() +
                                    " vs " + b.shape_str());
    }
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out[i] = f(a[i], b[i]);
    }
    detail::debug_check_finite(out, name);
    return out;
}

template <typename F>
Tensor unary_op(const Tensor& a, const char* name, F f) {
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out[i] = f(a[i]);
    }
    detail::debug_check_finite(out, name);
    return out;
}

} // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    return binary_op(a, b, "add", [](double x, double y) { return x + y; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return binary_op(a, b, "sub", [](double x, double y) { return x - y; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return binary_op(a, b, "mul", [](double x, double y) { return x * y; });
}

Tensor add(const Tensor& a, double s) {
    return unary_op(a, "add", [s](double x) { return x + s; });
}

Tensor mul(const Tensor& a, double s) {
    return unary_op(a, "mul", [s](double x) { return x * s; });
}

Tensor tanh(const Tensor& a) {
    return unary_op(a, "tanh", [](double x) { return std::tanh(x); });
}

double sigmoid_scalar(double x) {
    // Evaluate via exp of a non-positive argument so large |x| cannot overflow.
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Tensor sigmoid(const Tensor& a) {
    return unary_op(a, "sigmoid", [](double x) { return sigmoid_scalar(x); });
}

Tensor relu(const Tensor& a) {
    return unary_op(a, "relu", [](double x) { return x > 0.0 ? x : 0.0; });
}

Tensor uniform_init(Rng& rng, std::vector<std::size_t> shape, double limit) {
    if (!(limit > 0.0)) {
        raise(ErrorKind::value, "uniform_init: limit must be positive, got " +
                                    std::to_string(limit));
    }
    Tensor out(std::move(shape));
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = rng.uniform(-limit, limit);
    }
    return out;
}

} // namespace seqcast
