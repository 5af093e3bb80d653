#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace kgtrim {

// Dense row-major table of doubles (embedding matrix).
class Table {
public:
    Table() = default;
    Table(std::size_t rows, std::size_t dim, double fill = 0.0)
        : rows_(rows), dim_(dim), data_(rows * dim, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t dim() const { return dim_; }

    std::span<double> row(std::size_t r) {
        assert(r < rows_);
        return {data_.data() + r * dim_, dim_};
    }
    std::span<const double> row(std::size_t r) const {
        assert(r < rows_);
        return {data_.data() + r * dim_, dim_};
    }

    double* row_ptr(std::size_t r) { return data_.data() + r * dim_; }
    const double* row_ptr(std::size_t r) const { return data_.data() + r * dim_; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    bool same_shape(const Table& o) const { return rows_ == o.rows_ && dim_ == o.dim_; }

    friend bool operator==(const Table& a, const Table& b) {
        return a.rows_ == b.rows_ && a.dim_ == b.dim_ && a.data_ == b.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t dim_ = 0;
    std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> a) {
    double s = 0.0;
    for (double x : a) s += x * x;
    return s;
}

}  // namespace kgtrim
