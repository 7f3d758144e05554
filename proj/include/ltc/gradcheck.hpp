#pragma once

#include <cstddef>
#include <functional>

#include "ltc/matrix.hpp"

namespace ltc {

struct GradCheckReport {
    double max_rel_err = 0.0;
    double max_abs_err = 0.0;
    std::size_t worst_row = 0;
    std::size_t worst_col = 0;
    bool passed = true;
};

using ScalarFn = std::function<double(const Matrix&)>;

// Compares analytic_grad against central differences
// (f(x + h·e) - f(x - h·e)) / 2h entry by entry. Relative error uses the
// denominator max(|analytic|, |numeric|, 1e-8). Throws NumericError if f
// returns a non-finite value at any probe.
GradCheckReport finite_diff_check(const ScalarFn& f, const Matrix& x, const Matrix& analytic_grad,
                                  double h, double tol);

// Central-difference gradient of f at x.
Matrix numeric_gradient(const ScalarFn& f, const Matrix& x, double h);

} // namespace ltc
