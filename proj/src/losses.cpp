#include "ltc/losses.hpp"

#include <algorithm>
#include <cmath>

#include "ltc/error.hpp"
#include "ltc/kernels.hpp"

namespace ltc {

std::string_view to_string(TrainMode m) {
    switch (m) {
    case TrainMode::baseline: return "baseline";
    case TrainMode::htc: return "htc";
    case TrainMode::ltc: return "ltc";
    }
    return "?";
}

TrainMode parse_mode(std::string_view s) {
    if (s == "baseline") return TrainMode::baseline;
    if (s == "htc") return TrainMode::htc;
    if (s == "ltc") return TrainMode::ltc;
    throw ConfigError("unknown mode '" + std::string(s) + "' (expected baseline, htc or ltc)");
}

namespace {

void check_labels(Labels labels, std::size_t n, std::size_t k) {
    if (labels.size() != n) {
        throw DimensionError("label count " + std::to_string(labels.size()) + " does not match " +
                             std::to_string(n) + " rows");
    }
    for (std::size_t y : labels)
        if (y >= k) {
            throw DomainError("label " + std::to_string(y) + " out of range for " + std::to_string(k) +
                              " classes");
        }
}

void check_codes(const Matrix& v, const Matrix& s, Labels labels) {
    if (v.cols() != s.cols()) {
        throw DimensionError("semantic codes " + v.shape_str() + " and target codes " + s.shape_str() +
                             " differ in length");
    }
    check_labels(labels, v.rows(), s.rows());
}

} // namespace

CeResult cross_entropy(const Matrix& logits, Labels labels) {
    const std::size_t n = logits.rows();
    const std::size_t k = logits.cols();
    if (n == 0) throw DomainError("cross_entropy needs at least one sample");
    check_labels(labels, n, k);
    CeResult out{0.0, Matrix(n, k)};
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto z = logits.row(i);
        const double mx = *std::max_element(z.begin(), z.end());
        double denom = 0.0;
        for (double v : z) denom += std::exp(v - mx);
        const double lse = mx + std::log(denom);
        out.loss += lse - z[labels[i]];
        auto g = out.grad_logits.row(i);
        for (std::size_t c = 0; c < k; ++c) g[c] = std::exp(z[c] - lse) * inv_n;
        g[labels[i]] -= inv_n;
    }
    out.loss *= inv_n;
    return out;
}

CodeLossResult mse_codes(const Matrix& v, const Matrix& s, Labels labels) {
    check_codes(v, s, labels);
    const std::size_t n = v.rows();
    const std::size_t len = v.cols();
    const double scale = 1.0 / static_cast<double>(n * len);
    CodeLossResult out{0.0, Matrix(n, len), Matrix(s.rows(), len)};
    for (std::size_t i = 0; i < n; ++i) {
        auto vi = v.row(i);
        auto si = s.row(labels[i]);
        auto gv = out.grad_v.row(i);
        auto gs = out.grad_s.row(labels[i]);
        for (std::size_t l = 0; l < len; ++l) {
            const double d = vi[l] - si[l];
            out.loss += d * d;
            gv[l] = 2.0 * d * scale;
            gs[l] -= 2.0 * d * scale;
        }
    }
    out.loss *= scale;
    return out;
}

CodeLossResult triplet_global(const Matrix& v, const Matrix& s, Labels labels, double margin) {
    const std::size_t k = s.rows();
    if (k < 2) throw DomainError("triplet loss needs at least two classes");
    if (margin < 0.0) throw DomainError("triplet margin must be non-negative");
    check_codes(v, s, labels);
    const std::size_t n = v.rows();
    const double scale = 1.0 / static_cast<double>(n * (k - 1));

    const Matrix sim = matmul_nt(v, s);  // N×K of v_i·s_k
    // coeff(i, k) counts how often s_k enters sample i's active hinges with
    // sign: +1 per active negative k, -(number active) on the positive class.
    Matrix coeff(n, k);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t y = labels[i];
        const double pos = sim(i, y);
        for (std::size_t c = 0; c < k; ++c) {
            if (c == y) continue;
            const double h = sim(i, c) - pos + margin;
            if (h > 0.0) {
                loss += h;
                coeff(i, c) += 1.0;
                coeff(i, y) -= 1.0;
            }
        }
    }
    CodeLossResult out{loss * scale, matmul(coeff, s), matmul_tn(coeff, v)};
    for (double& g : out.grad_v.flat()) g *= scale;
    for (double& g : out.grad_s.flat()) g *= scale;
    return out;
}

CorrResult corr_consistency(const Matrix& s) {
    const std::size_t k = s.rows();
    if (k < 2) throw DomainError("correlation consistency loss needs at least two classes");
    const double scale = 1.0 / static_cast<double>(k * (k - 1));
    const Matrix gram = matmul_nt(s, s);
    Matrix sgn(k, k);
    double loss = 0.0;
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b) {
            if (a == b) continue;
            const double g = gram(a, b);
            loss += std::abs(g);
            sgn(a, b) = g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0);
        }
    // Each row appears in both (a, b) and (b, a); sgn is symmetric, hence 2·sgn·S.
    CorrResult out{loss * scale, matmul(sgn, s)};
    for (double& g : out.grad_s.flat()) g *= 2.0 * scale;
    return out;
}

LossBundle compose_objective(TrainMode mode, const LossParts& parts, const Hyperparams& hp) {
    auto need = [mode](bool present, const char* what) {
        if (!present) {
            throw UsageError(std::string("mode ") + std::string(to_string(mode)) + " requires the " +
                             what + " loss");
        }
    };
    need(parts.ce.has_value(), "cross-entropy");
    LossBundle b;
    b.ce = parts.ce->loss;
    b.grad_logits = parts.ce->grad_logits;
    b.total = b.ce;
    if (mode == TrainMode::baseline) return b;

    need(parts.mse.has_value(), "MSE");
    b.mse = parts.mse->loss;
    b.total += hp.gamma * b.mse;
    b.grad_v = scaled(parts.mse->grad_v, hp.gamma);
    if (mode == TrainMode::htc) {
        b.grad_s = Matrix(parts.mse->grad_s.rows(), parts.mse->grad_s.cols());
        return b;
    }

    need(parts.triplet.has_value(), "triplet");
    need(parts.corr.has_value(), "correlation-consistency");
    b.triplet = parts.triplet->loss;
    b.corr = parts.corr->loss;
    b.total += hp.lambda * b.triplet;
    b.total += hp.beta * b.corr;
    axpy(b.grad_v, hp.lambda, parts.triplet->grad_v);
    b.grad_s = scaled(parts.mse->grad_s, hp.gamma);
    axpy(b.grad_s, hp.lambda, parts.triplet->grad_s);
    axpy(b.grad_s, hp.beta, parts.corr->grad_s);
    return b;
}

} // namespace ltc
