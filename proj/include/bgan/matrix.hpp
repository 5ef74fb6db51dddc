#pragma once

#include <cstddef>
#include <new>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bgan {

/// Dense row-major matrix of doubles. The only container the numeric
/// kernels operate on; rows are contiguous so per-row spans are cheap.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix from_rows(const std::vector<std::vector<double>>& rows) {
        if (rows.empty()) return {};
        Matrix m(rows.size(), rows[0].size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != m.cols_)
                throw std::invalid_argument("Matrix::from_rows: ragged input");
            for (std::size_t j = 0; j < m.cols_; ++j) m(i, j) = rows[i][j];
        }
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double* row_ptr(std::size_t i) { return data_.data() + i * cols_; }
    const double* row_ptr(std::size_t i) const { return data_.data() + i * cols_; }
    std::span<double> row(std::size_t i) { return {row_ptr(i), cols_}; }
    std::span<const double> row(std::size_t i) const { return {row_ptr(i), cols_}; }

    std::vector<double> row_copy(std::size_t i) const {
        return {row_ptr(i), row_ptr(i) + cols_};
    }

    void set_row(std::size_t i, std::span<const double> v) {
        if (v.size() != cols_) throw std::invalid_argument("Matrix::set_row: width mismatch");
        double* r = row_ptr(i);
        for (std::size_t j = 0; j < cols_; ++j) r[j] = v[j];
    }

    void fill(double v) { data_.assign(data_.size(), v); }

    /// Reshape reusing existing storage where possible (contents are
    /// unspecified afterwards unless filled).
    void resize(std::size_t rows, std::size_t cols) {
        rows_ = rows;
        cols_ = cols;
        data_.resize(rows * cols);
    }

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

using Vector = std::vector<double>;

inline void require(bool cond, const std::string& what) {
    if (!cond) throw std::invalid_argument(what);
}

inline Matrix hstack(const Matrix& a, const Matrix& b) {
    require(a.rows() == b.rows(), "hstack: row count mismatch");
    Matrix c(a.rows(), a.cols() + b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* r = c.row_ptr(i);
        const double* ar = a.row_ptr(i);
        const double* br = b.row_ptr(i);
        for (std::size_t j = 0; j < a.cols(); ++j) r[j] = ar[j];
        for (std::size_t j = 0; j < b.cols(); ++j) r[a.cols() + j] = br[j];
    }
    return c;
}

inline Matrix replicate_row(std::span<const double> row, std::size_t count) {
    Matrix m(count, row.size());
    for (std::size_t i = 0; i < count; ++i) m.set_row(i, row);
    return m;
}

}  // namespace bgan
