#pragma once

#include "ltc/matrix.hpp"

// Dense products used by every forward/backward pass. The default kernels
// split output rows across OpenMP threads; each output entry is still summed
// in ascending inner-index order by a single thread, so results are bitwise
// identical to the serial reference regardless of thread count.
namespace ltc {

// a·b
Matrix matmul(const Matrix& a, const Matrix& b);
// aᵀ·b
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// a·bᵀ
Matrix matmul_nt(const Matrix& a, const Matrix& b);

// Scales each row to unit L2 norm; zero rows stay zero.
Matrix normalize_rows(const Matrix& a);

namespace serial {

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);

} // namespace serial

} // namespace ltc
