#ifndef SEQCAST_TENSOR_HPP
#define SEQCAST_TENSOR_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "seqcast/rng.hpp"

namespace seqcast {

/// Dense row-major array of 64-bit floats with an explicit shape.
///
/// Tensors are plain values: copyable, immutable once handed to an
/// operation, and always finite (construction from data rejects NaN/Inf;
/// debug builds re-check after every operation). All layer math in the
/// library runs on this one carrier type.
class Tensor {
public:
    Tensor() = default;

    /// Zero-filled tensor of the given shape. Extents must be positive.
    explicit Tensor(std::vector<std::size_t> shape);

    /// Tensor wrapping explicit data; product(shape) must equal data size
    /// and every element must be finite.
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor scalar(double v);

    const std::vector<std::size_t>& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_.at(i); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    // Row-major element access for 2-D and 3-D tensors.
    double& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
    double at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
    double& at(std::size_t i, std::size_t j, std::size_t k) {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }
    double at(std::size_t i, std::size_t j, std::size_t k) const {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    /// Reshape without touching data; product of extents must match size().
    Tensor reshaped(std::vector<std::size_t> shape) const;

    /// Row i of a 2-D tensor as a length-cols vector copy.
    Tensor row(std::size_t i) const;

    bool all_finite() const noexcept;

    std::string shape_str() const;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

/// Matrix product of a [m x k] by [k x n]; summation runs left to right
/// over k so results are bit-reproducible.
Tensor matmul(const Tensor& a, const Tensor& b);

// Elementwise arithmetic. Binary forms require equal shapes; the scalar
// overloads are the only broadcasting supported.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, double s);
Tensor mul(const Tensor& a, double s);

// Elementwise activations.
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor relu(const Tensor& a);

double sigmoid_scalar(double x);

/// I.i.d. uniform draws in [-limit, limit]; limit must be positive. Draws
/// advance the generator one step per element in row-major order.
Tensor uniform_init(Rng& rng, std::vector<std::size_t> shape, double limit);

/// Throws ErrorKind::divergence naming `where` if any element is non-finite.
void require_finite(const Tensor& t, const char* where);

namespace detail {
#ifdef NDEBUG
inline void debug_check_finite(const Tensor&, const char*) {}
#else
inline void debug_check_finite(const Tensor& t, const char* where) {
    require_finite(t, where);
}
#endif
} // namespace detail

} // namespace seqcast

#endif // SEQCAST_TENSOR_HPP
