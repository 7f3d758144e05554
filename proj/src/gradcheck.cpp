#include "ltc/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "ltc/error.hpp"

namespace ltc {

namespace {
double eval_checked(const ScalarFn& f, const Matrix& x) {
    const double v = f(x);
    if (!std::isfinite(v)) throw NumericError("finite_diff_check: function returned non-finite value");
    return v;
}
} // namespace

Matrix numeric_gradient(const ScalarFn& f, const Matrix& x, double h) {
    if (!(h > 0.0)) throw DomainError("finite difference step must be positive");
    Matrix probe = x;
    Matrix grad(x.rows(), x.cols());
    auto p = probe.flat();
    auto g = grad.flat();
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double orig = p[i];
        p[i] = orig + h;
        const double up = eval_checked(f, probe);
        p[i] = orig - h;
        const double down = eval_checked(f, probe);
        p[i] = orig;
        g[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

GradCheckReport finite_diff_check(const ScalarFn& f, const Matrix& x, const Matrix& analytic_grad,
                                  double h, double tol) {
    if (!x.same_shape(analytic_grad)) {
        throw DimensionError("finite_diff_check: gradient shape " + analytic_grad.shape_str() +
                             " does not match input " + x.shape_str());
    }
    const Matrix numeric = numeric_gradient(f, x, h);
    GradCheckReport rep;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t c = 0; c < x.cols(); ++c) {
            const double a = analytic_grad(r, c);
            const double n = numeric(r, c);
            const double abs_err = std::abs(a - n);
            const double rel_err = abs_err / std::max({std::abs(a), std::abs(n), 1e-8});
            rep.max_abs_err = std::max(rep.max_abs_err, abs_err);
            if (rel_err > rep.max_rel_err) {
                rep.max_rel_err = rel_err;
                rep.worst_row = r;
                rep.worst_col = c;
            }
        }
    }
    rep.passed = rep.max_rel_err <= tol;
    return rep;
}

} // namespace ltc
