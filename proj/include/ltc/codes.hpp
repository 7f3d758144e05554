#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "ltc/matrix.hpp"
#include "ltc/rng.hpp"

namespace ltc {

enum class CodeKind { hadamard_fixed, learnable };
enum class CodeActivation { sign, tanh_scaled };
enum class SteMode { clipped, passthrough };

// Sylvester Hadamard matrix of order m: H_2 = [[1,1],[1,-1]],
// H_{2m} = H_m ⊗ H_2. Throws DomainError unless m is a power of two >= 2.
Matrix hadamard_matrix(std::size_t m);

// Kronecker product a ⊗ b.
Matrix kronecker(const Matrix& a, const Matrix& b);

bool is_power_of_two(std::size_t m) noexcept;

// K×L store of target codewords. Hadamard banks hold fixed ±1 rows; learnable
// banks hold the real parameter matrix W that is binarized on every use.
class CodeBank {
public:
    CodeBank(CodeKind kind, Matrix w, CodeActivation act = CodeActivation::sign, double xi = 1.0);

    CodeKind kind() const noexcept { return kind_; }
    CodeActivation activation() const noexcept { return act_; }
    double xi() const noexcept { return xi_; }
    std::size_t num_classes() const noexcept { return w_.rows(); }
    std::size_t code_length() const noexcept { return w_.cols(); }
    const Matrix& weights() const noexcept { return w_; }

    void set_activation(CodeActivation act, double xi);

    // Codewords S as seen by the losses.
    Matrix activate() const;

    // Maps dL/dS to dL/dW. Sign banks use the straight-through rule: clipped
    // mode limits each entry to [-1, 1], passthrough returns it unchanged.
    // tanh banks use the exact derivative xi·(1 - tanh²(xi·w)).
    Matrix ste_backward(const Matrix& grad_wrt_s, SteMode mode) const;

    // W <- W - eta·grad. Plain step, no momentum or weight decay.
    void update(const Matrix& grad_wrt_w, double eta);

    // Checkpoint restore; shape must match.
    void replace_weights(const Matrix& w);

private:
    CodeKind kind_;
    CodeActivation act_;
    double xi_;
    Matrix w_;
};

// K distinct rows drawn without replacement from rows 2..m of H_m.
// Throws CapacityError when K > m - 1.
CodeBank select_hadamard_codes(std::size_t m, std::size_t num_classes, Rng& rng);

// W ~ N(0, 1) i.i.d., sign activation.
CodeBank init_learnable_codes(std::size_t num_classes, std::size_t code_length, Rng& rng);

// Elementwise sign with sign(0) = +1.
Matrix sign_activate(const Matrix& w);

// K×K matrix of s_k·s_j / L.
Matrix code_correlation(const Matrix& codes);
// Mean of |corr| over the off-diagonal entries of a correlation matrix.
double mean_offdiag_abs(const Matrix& corr);

struct CodeSummary {
    std::vector<std::size_t> plus_ones;  // per row
    std::size_t min_hamming = 0;
    std::size_t max_hamming = 0;
    double min_corr = 0.0;  // off-diagonal, normalized by L
    double max_corr = 0.0;
    double mean_abs_corr = 0.0;
};
CodeSummary summarize_codes(const Matrix& codes);

// Little-endian binary: "LTCB", u32 version, u32 kind, u32 K, u32 L, f64 xi,
// then K·L f64 of W row-major. kind: 0 Hadamard, 1 learnable/sign,
// 2 learnable/tanh.
void save_code_bank(const CodeBank& bank, const std::filesystem::path& path);
CodeBank load_code_bank(const std::filesystem::path& path);

} // namespace ltc
