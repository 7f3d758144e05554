#pragma once

#include <cmath>
#include <vector>

#include "ltc/matrix.hpp"
#include "ltc/rng.hpp"

namespace ltc::test {

inline Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
    Matrix m(r, c);
    for (double& v : m.flat()) v = scale * rng.normal();
    return m;
}

inline std::vector<std::size_t> random_labels(std::size_t n, std::size_t k, Rng& rng) {
    std::vector<std::size_t> y(n);
    for (auto& v : y) v = static_cast<std::size_t>(rng.below(k));
    return y;
}

// Central differences at h = 1e-5 carry ~1e-11 absolute round-off, so an
// analytic entry this small cannot be resolved to 1e-6 relative error.
// Gradient checks resample such instances the same way they skip kinks.
inline bool has_unresolvable_entry(const Matrix& g, double floor = 1e-5) {
    for (double v : g.flat())
        if (v != 0.0 && std::abs(v) < floor) return true;
    return false;
}

} // namespace ltc::test
