#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

#include "sessrec/rng.hpp"

namespace sessrec {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles. Just enough for the model code;
/// rows are contiguous so hot loops can run over raw spans.
class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix gaussian(std::size_t rows, std::size_t cols, double mean, double stddev,
                           Rng& rng) {
        Matrix m(rows, cols);
        for (double& x : m.data_) x = rng.gaussian(mean, stddev);
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    void fill(double value) { data_.assign(data_.size(), value); }

    bool operator==(const Matrix& other) const = default;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

/// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    assert(x.size() == y.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

/// out = M * x  (M is rows x cols, x has cols entries)
inline void matvec(const Matrix& m, std::span<const double> x, std::span<double> out) {
    assert(x.size() == m.cols() && out.size() == m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) out[r] = dot(m.row(r), x);
}

/// out += M^T * x  (x has rows entries, out has cols entries)
inline void matvec_transposed_add(const Matrix& m, std::span<const double> x,
                                  std::span<double> out) {
    assert(x.size() == m.rows() && out.size() == m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r) axpy(x[r], m.row(r), out);
}

/// M += a * b^T  (outer-product accumulation)
inline void outer_add(Matrix& m, std::span<const double> a, std::span<const double> b) {
    assert(a.size() == m.rows() && b.size() == m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r) axpy(a[r], b, m.row(r));
}

}  // namespace sessrec
