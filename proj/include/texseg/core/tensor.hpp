#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace texseg {

// Dense row-major tensor of doubles. All training math runs in double so the
// finite-difference suites can hold tight tolerances.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<int64_t> shape, double fill = 0.0)
        : shape_(std::move(shape)), data_(checked_numel(shape_), fill) {}

    static Tensor from(std::vector<int64_t> shape, std::vector<double> data) {
        Tensor t;
        if (checked_numel(shape) != static_cast<int64_t>(data.size()))
            throw std::invalid_argument("Tensor::from: shape/data size mismatch");
        t.shape_ = std::move(shape);
        t.data_ = std::move(data);
        return t;
    }

    static Tensor scalar(double v) { return from({1}, {v}); }

    int64_t ndim() const { return static_cast<int64_t>(shape_.size()); }
    int64_t dim(int i) const { return shape_[static_cast<size_t>(i)]; }
    const std::vector<int64_t>& shape() const { return shape_; }
    int64_t numel() const { return static_cast<int64_t>(data_.size()); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
    double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

    double& at2(int64_t i, int64_t j) { return data_[static_cast<size_t>(i * dim(1) + j)]; }
    double at2(int64_t i, int64_t j) const { return data_[static_cast<size_t>(i * dim(1) + j)]; }

    double& at3(int64_t c, int64_t r, int64_t col) {
        return data_[static_cast<size_t>((c * dim(1) + r) * dim(2) + col)];
    }
    double at3(int64_t c, int64_t r, int64_t col) const {
        return data_[static_cast<size_t>((c * dim(1) + r) * dim(2) + col)];
    }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    void add_scaled(const Tensor& o, double s) {
        assert(same_shape(o));
        for (size_t i = 0; i < data_.size(); ++i) data_[i] += s * o.data_[i];
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : data_) m = std::max(m, std::abs(v));
        return m;
    }

    std::string shape_str() const {
        std::string s = "(";
        for (size_t i = 0; i < shape_.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(shape_[i]);
        }
        return s + ")";
    }

private:
    static int64_t checked_numel(const std::vector<int64_t>& shape) {
        int64_t n = 1;
        for (int64_t d : shape) {
            if (d < 0) throw std::invalid_argument("Tensor: negative dimension");
            n *= d;
        }
        return n;
    }

    std::vector<int64_t> shape_;
    std::vector<double> data_;
};

} // namespace texseg
