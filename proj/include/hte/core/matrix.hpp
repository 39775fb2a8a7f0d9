#pragma once
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "hte/core/error.hpp"

namespace hte {

// Dense row-major matrix of doubles. Deliberately minimal: the library only
// needs row views, column gathers and element access.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
        Matrix m(rows.size(), rows.size() ? rows.begin()->size() : 0);
        std::size_t i = 0;
        for (const auto& r : rows) {
            if (r.size() != m.cols_) throw DataError("Matrix::from_rows: ragged rows");
            std::size_t j = 0;
            for (double v : r) m(i, j++) = v;
            ++i;
        }
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<const double> row(std::size_t i) const {
        return std::span<const double>(data_.data() + i * cols_, cols_);
    }
    std::span<double> row(std::size_t i) {
        return std::span<double>(data_.data() + i * cols_, cols_);
    }

    std::vector<double> col(std::size_t j) const {
        std::vector<double> out(rows_);
        for (std::size_t i = 0; i < rows_; ++i) out[i] = data_[i * cols_ + j];
        return out;
    }

    void set_row(std::size_t i, std::span<const double> values) {
        for (std::size_t j = 0; j < cols_; ++j) data_[i * cols_ + j] = values[j];
    }

    // Rows of this matrix restricted to the given index set.
    Matrix take_rows(std::span<const std::size_t> idx) const {
        Matrix out(idx.size(), cols_);
        for (std::size_t k = 0; k < idx.size(); ++k) out.set_row(k, row(idx[k]));
        return out;
    }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

template <typename T>
inline std::vector<T> take(const std::vector<T>& v, std::span<const std::size_t> idx) {
    std::vector<T> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(v[i]);
    return out;
}

} // namespace hte
