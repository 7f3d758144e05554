#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "ltc/hyperparams.hpp"
#include "ltc/matrix.hpp"

namespace ltc {

using Labels = std::span<const std::size_t>;

struct CeResult {
    double loss = 0.0;
    Matrix grad_logits;
};

// Loss on semantic codes V (N×L) against codewords S (K×L).
struct CodeLossResult {
    double loss = 0.0;
    Matrix grad_v;
    Matrix grad_s;
};

struct CorrResult {
    double loss = 0.0;
    Matrix grad_s;
};

// Mean softmax cross-entropy with log-sum-exp stabilization.
// grad = (softmax - onehot) / N.
CeResult cross_entropy(const Matrix& logits, Labels labels);

// (1/(N·L)) Σ_i ||v_i - s_{y_i}||².
CodeLossResult mse_codes(const Matrix& v, const Matrix& s, Labels labels);

// (1/(N(K-1))) Σ_i Σ_{k≠y_i} max(v_i·s_k - v_i·s_{y_i} + margin, 0).
// A hinge sitting exactly at zero contributes no gradient.
CodeLossResult triplet_global(const Matrix& v, const Matrix& s, Labels labels, double margin);

// (1/(K(K-1))) Σ_k Σ_{j≠k} |s_k·s_j|, with sign(0) = 0 in the subgradient.
CorrResult corr_consistency(const Matrix& s);

struct LossParts {
    std::optional<CeResult> ce;
    std::optional<CodeLossResult> mse;
    std::optional<CodeLossResult> triplet;
    std::optional<CorrResult> corr;
};

struct LossBundle {
    double total = 0.0;
    double ce = 0.0;
    double mse = 0.0;
    double triplet = 0.0;
    double corr = 0.0;
    Matrix grad_logits;
    Matrix grad_v;  // empty in baseline mode
    Matrix grad_s;  // empty in baseline mode; zero in htc mode
};

// baseline: ce. htc: ce + γ·mse. ltc: ce + γ·mse + λ·triplet + β·corr.
// Throws UsageError when a part required by the mode is missing.
LossBundle compose_objective(TrainMode mode, const LossParts& parts, const Hyperparams& hp);

} // namespace ltc
