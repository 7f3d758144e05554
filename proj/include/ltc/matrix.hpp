#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace ltc {

// Dense row-major matrix of doubles. Value type; copies are deep.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::span<double> flat() noexcept { return data_; }
    std::span<const double> flat() const noexcept { return data_; }
    const std::vector<double>& data() const noexcept { return data_; }

    bool same_shape(const Matrix& other) const noexcept {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }
    bool all_finite() const noexcept;
    void fill(double v);

    Matrix transpose() const;
    // Rows picked by index, in the given order.
    Matrix gather_rows(std::span<const std::size_t> idx) const;

    std::string shape_str() const;

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

enum class ElementOp { add, sub, mul };
enum class Axis { rows, cols, all };

Matrix elementwise(const Matrix& a, const Matrix& b, ElementOp op);
Matrix scaled(const Matrix& a, double s);
// a += s * b
void axpy(Matrix& a, double s, const Matrix& b);

// Axis::rows reduces each row to one value (result N×1), Axis::cols reduces
// each column (result 1×M), Axis::all gives 1×1.
Matrix reduce_sum(const Matrix& a, Axis axis);
Matrix reduce_max(const Matrix& a, Axis axis);
// Index of the maximum per row (Axis::rows) or per column (Axis::cols);
// Axis::all yields a single flat index. Ties go to the lowest index.
std::vector<std::size_t> reduce_argmax(const Matrix& a, Axis axis);

double sum_all(const Matrix& a);
double max_abs(const Matrix& a);

} // namespace ltc
