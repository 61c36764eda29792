#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "vad/errors.hpp"

namespace vad {

class Rng;

// Dense row-major tensor of doubles. Shapes are immutable after construction
// except through reshape(), which never touches the data.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    // 1-D tensor from literal values
    static Tensor of(std::initializer_list<double> values);

    static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<std::size_t> shape, double value);
    static Tensor randn(std::vector<std::size_t> shape, Rng& rng, double stddev = 1.0);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    std::size_t rows() const;  // rank-2 only
    std::size_t cols() const;

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& vec() { return data_; }
    const std::vector<double>& vec() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    double& at2(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double at2(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    Tensor reshape(std::vector<std::size_t> new_shape) const;

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;

    std::string shape_str() const;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
    std::size_t cols_ = 0;  // cached for rank-2 indexing
};

// out = a * b for rank-2 tensors (m x k) * (k x n). `accumulate` adds into out.
void matmul_into(const Tensor& a, const Tensor& b, Tensor& out, bool accumulate = false);
Tensor matmul(const Tensor& a, const Tensor& b);

// out += a^T * b, shapes (m x k)^T * (m x n) -> (k x n). Used by backward passes.
void matmul_at_b_into(const Tensor& a, const Tensor& b, Tensor& out, bool accumulate);
// out += a * b^T, shapes (m x k) * (n x k)^T -> (m x n).
void matmul_a_bt_into(const Tensor& a, const Tensor& b, Tensor& out, bool accumulate);

// Standard-normal log-density of a flattened vector: -(D/2)ln(2pi) - 1/2 sum z_i^2.
double gaussian_log_density(const Tensor& z);

}  // namespace vad
