#include "ltc/kernels.hpp"

#include <cmath>
#include <cstdint>

#include "ltc/error.hpp"

namespace ltc {

namespace {

// Below this many multiply-adds the thread fork costs more than it saves.
constexpr std::size_t kParallelWork = 1u << 15;

void check(bool ok, const char* what, const Matrix& a, const Matrix& b) {
    if (!ok) {
        throw DimensionError(std::string(what) + ": incompatible shapes " + a.shape_str() +
                             " and " + b.shape_str());
    }
}

} // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
    check(a.cols() == b.rows(), "matmul", a, b);
    const auto n = static_cast<std::int64_t>(a.rows());
    const std::size_t inner = a.cols();
    const std::size_t p = b.cols();
    Matrix out(a.rows(), p);
    const bool par = a.rows() * inner * p >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
    for (std::int64_t i = 0; i < n; ++i) {
        auto orow = out.row(static_cast<std::size_t>(i));
        auto arow = a.row(static_cast<std::size_t>(i));
        for (std::size_t k = 0; k < inner; ++k) {
            const double aik = arow[k];
            auto brow = b.row(k);
            for (std::size_t j = 0; j < p; ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    check(a.rows() == b.rows(), "matmul_tn", a, b);
    const auto m = static_cast<std::int64_t>(a.cols());
    const std::size_t n = a.rows();
    const std::size_t p = b.cols();
    Matrix out(a.cols(), p);
    const bool par = a.cols() * n * p >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
    for (std::int64_t r = 0; r < m; ++r) {
        auto orow = out.row(static_cast<std::size_t>(r));
        for (std::size_t k = 0; k < n; ++k) {
            const double akr = a(k, static_cast<std::size_t>(r));
            auto brow = b.row(k);
            for (std::size_t j = 0; j < p; ++j) orow[j] += akr * brow[j];
        }
    }
    return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    check(a.cols() == b.cols(), "matmul_nt", a, b);
    const auto n = static_cast<std::int64_t>(a.rows());
    const std::size_t p = b.rows();
    const std::size_t inner = a.cols();
    Matrix out(a.rows(), p);
    const bool par = a.rows() * inner * p >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
    for (std::int64_t i = 0; i < n; ++i) {
        auto arow = a.row(static_cast<std::size_t>(i));
        for (std::size_t j = 0; j < p; ++j) {
            auto brow = b.row(j);
            double s = 0.0;
            for (std::size_t k = 0; k < inner; ++k) s += arow[k] * brow[k];
            out(static_cast<std::size_t>(i), j) = s;
        }
    }
    return out;
}

Matrix normalize_rows(const Matrix& a) {
    Matrix out = a;
    const auto n = static_cast<std::int64_t>(a.rows());
#pragma omp parallel for schedule(static) if (a.size() >= kParallelWork)
    for (std::int64_t i = 0; i < n; ++i) {
        auto r = out.row(static_cast<std::size_t>(i));
        double ss = 0.0;
        for (double v : r) ss += v * v;
        if (ss > 0.0) {
            const double inv = 1.0 / std::sqrt(ss);
            for (double& v : r) v *= inv;
        }
    }
    return out;
}

namespace serial {

Matrix matmul(const Matrix& a, const Matrix& b) {
    check(a.cols() == b.rows(), "matmul", a, b);
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
            out(i, j) = s;
        }
    return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    check(a.rows() == b.rows(), "matmul_tn", a, b);
    Matrix out(a.cols(), b.cols());
    for (std::size_t i = 0; i < a.cols(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.rows(); ++k) s += a(k, i) * b(k, j);
            out(i, j) = s;
        }
    return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    check(a.cols() == b.cols(), "matmul_nt", a, b);
    Matrix out(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.rows(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(j, k);
            out(i, j) = s;
        }
    return out;
}

} // namespace serial

} // namespace ltc
