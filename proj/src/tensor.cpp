#include "vad/tensor.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "vad/rng.hpp"

namespace vad {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) {
        if (e == 0) throw ConfigError("tensor extents must be positive");
        n *= e;
    }
    return n;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {
    cols_ = shape_.size() == 2 ? shape_[1] : 0;
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_product(shape_))
        throw ConfigError("tensor data length does not match shape " + shape_str());
    cols_ = shape_.size() == 2 ? shape_[1] : 0;
}

Tensor Tensor::of(std::initializer_list<double> values) {
    return Tensor({values.size()}, std::vector<double>(values));
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
}

Tensor Tensor::randn(std::vector<std::size_t> shape, Rng& rng, double stddev) {
    Tensor t(std::move(shape));
    for (double& v : t.data_) v = rng.normal() * stddev;
    return t;
}

std::size_t Tensor::rows() const {
    if (rank() != 2) throw ConfigError("rows() on non-matrix tensor " + shape_str());
    return shape_[0];
}

std::size_t Tensor::cols() const {
    if (rank() != 2) throw ConfigError("cols() on non-matrix tensor " + shape_str());
    return shape_[1];
}

Tensor Tensor::reshape(std::vector<std::size_t> new_shape) const {
    if (shape_product(new_shape) != data_.size())
        throw ConfigError("reshape size mismatch: " + shape_str());
    return Tensor(std::move(new_shape), data_);
}

bool Tensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape_.size(); ++i) os << (i ? "x" : "") << shape_[i];
    os << "]";
    return os.str();
}

// i-k-j loop order: the inner loop runs over contiguous rows of b and out,
// which GCC vectorizes with FMA. Good enough for desk-scale training.
void matmul_into(const Tensor& a, const Tensor& b, Tensor& out, bool accumulate) {
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    if (b.rows() != k) throw ConfigError("matmul inner-dim mismatch " + a.shape_str() + " * " + b.shape_str());
    if (out.rows() != m || out.cols() != n) throw ConfigError("matmul output shape mismatch");
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    if (!accumulate) std::fill(out.vec().begin(), out.vec().end(), 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = pa + i * k;
        double* orow = po + i * n;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double av = arow[kk];
            const double* brow = pb + kk * n;
            for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    Tensor out({a.rows(), b.cols()});
    matmul_into(a, b, out, false);
    return out;
}

void matmul_at_b_into(const Tensor& a, const Tensor& b, Tensor& out, bool accumulate) {
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    if (b.rows() != m) throw ConfigError("matmul_at_b shape mismatch");
    if (out.rows() != k || out.cols() != n) throw ConfigError("matmul_at_b output shape mismatch");
    if (!accumulate) std::fill(out.vec().begin(), out.vec().end(), 0.0);
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = pa + i * k;
        const double* brow = pb + i * n;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double av = arow[kk];
            double* orow = po + kk * n;
            for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
}

void matmul_a_bt_into(const Tensor& a, const Tensor& b, Tensor& out, bool accumulate) {
    const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
    if (b.cols() != k) throw ConfigError("matmul_a_bt shape mismatch");
    if (out.rows() != m || out.cols() != n) throw ConfigError("matmul_a_bt output shape mismatch");
    if (!accumulate) std::fill(out.vec().begin(), out.vec().end(), 0.0);
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = pa + i * k;
        double* orow = po + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const double* brow = pb + j * k;
            double acc = 0.0;
            for (std::size_t kk = 0; kk < k; ++kk) acc += arow[kk] * brow[kk];
            orow[j] += acc;
        }
    }
}

double gaussian_log_density(const Tensor& z) {
    if (!z.all_finite()) throw NumericError("gaussian_log_density: non-finite input");
    const double d = static_cast<double>(z.size());
    double ss = 0.0;
    for (double v : z.vec()) ss += v * v;
    return -0.5 * d * std::log(2.0 * std::numbers::pi) - 0.5 * ss;
}

}  // namespace vad
