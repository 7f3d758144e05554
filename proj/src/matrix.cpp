#include "ltc/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ltc/error.hpp"

namespace ltc {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw DimensionError("matrix data length " + std::to_string(data_.size()) +
                             " does not match shape " + shape_str());
    }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw DimensionError("ragged matrix literal");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

bool Matrix::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Matrix Matrix::transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
}

Matrix Matrix::gather_rows(std::span<const std::size_t> idx) const {
    Matrix out(idx.size(), cols_);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] >= rows_) throw DimensionError("row index out of range in gather_rows");
        std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(idx[i] * cols_), cols_,
                    out.data_.begin() + static_cast<std::ptrdiff_t>(i * cols_));
    }
    return out;
}

std::string Matrix::shape_str() const {
    return "(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")";
}

namespace {
void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (!a.same_shape(b)) {
        throw DimensionError(std::string(what) + ": shape mismatch " + a.shape_str() + " vs " +
                             b.shape_str());
    }
}
} // namespace

Matrix elementwise(const Matrix& a, const Matrix& b, ElementOp op) {
    require_same_shape(a, b, "elementwise");
    Matrix out(a.rows(), a.cols());
    auto x = a.flat();
    auto y = b.flat();
    auto o = out.flat();
    for (std::size_t i = 0; i < o.size(); ++i) {
        switch (op) {
        case ElementOp::add: o[i] = x[i] + y[i]; break;
        case ElementOp::sub: o[i] = x[i] - y[i]; break;
        case ElementOp::mul: o[i] = x[i] * y[i]; break;
        }
    }
    return out;
}

Matrix scaled(const Matrix& a, double s) {
    Matrix out = a;
    for (double& v : out.flat()) v *= s;
    return out;
}

void axpy(Matrix& a, double s, const Matrix& b) {
    require_same_shape(a, b, "axpy");
    auto x = a.flat();
    auto y = b.flat();
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += s * y[i];
}

Matrix reduce_sum(const Matrix& a, Axis axis) {
    switch (axis) {
    case Axis::rows: {
        Matrix out(a.rows(), 1);
        for (std::size_t r = 0; r < a.rows(); ++r) {
            double s = 0.0;
            for (double v : a.row(r)) s += v;
            out(r, 0) = s;
        }
        return out;
    }
    case Axis::cols: {
        Matrix out(1, a.cols());
        for (std::size_t r = 0; r < a.rows(); ++r)
            for (std::size_t c = 0; c < a.cols(); ++c) out(0, c) += a(r, c);
        return out;
    }
    case Axis::all: break;
    }
    return Matrix(1, 1, sum_all(a));
}

Matrix reduce_max(const Matrix& a, Axis axis) {
    constexpr double lowest = -std::numeric_limits<double>::infinity();
    switch (axis) {
    case Axis::rows: {
        Matrix out(a.rows(), 1, lowest);
        for (std::size_t r = 0; r < a.rows(); ++r)
            for (double v : a.row(r)) out(r, 0) = std::max(out(r, 0), v);
        return out;
    }
    case Axis::cols: {
        Matrix out(1, a.cols(), lowest);
        for (std::size_t r = 0; r < a.rows(); ++r)
            for (std::size_t c = 0; c < a.cols(); ++c) out(0, c) = std::max(out(0, c), a(r, c));
        return out;
    }
    case Axis::all: break;
    }
    double m = lowest;
    for (double v : a.flat()) m = std::max(m, v);
    return Matrix(1, 1, m);
}

std::vector<std::size_t> reduce_argmax(const Matrix& a, Axis axis) {
    std::vector<std::size_t> out;
    switch (axis) {
    case Axis::rows:
        out.resize(a.rows(), 0);
        for (std::size_t r = 0; r < a.rows(); ++r)
            for (std::size_t c = 1; c < a.cols(); ++c)
                if (a(r, c) > a(r, out[r])) out[r] = c;
        break;
    case Axis::cols:
        out.resize(a.cols(), 0);
        for (std::size_t c = 0; c < a.cols(); ++c)
            for (std::size_t r = 1; r < a.rows(); ++r)
                if (a(r, c) > a(out[c], c)) out[c] = r;
        break;
    case Axis::all: {
        std::size_t best = 0;
        auto f = a.flat();
        for (std::size_t i = 1; i < f.size(); ++i)
            if (f[i] > f[best]) best = i;
        out.push_back(best);
        break;
    }
    }
    return out;
}

double sum_all(const Matrix& a) {
    double s = 0.0;
    for (double v : a.flat()) s += v;
    return s;
}

double max_abs(const Matrix& a) {
    double m = 0.0;
    for (double v : a.flat()) m = std::max(m, std::abs(v));
    return m;
}

} // namespace ltc
