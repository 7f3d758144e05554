#include "ltc/codes.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "ltc/binio.hpp"
#include "ltc/error.hpp"
#include "ltc/kernels.hpp"

namespace ltc {

namespace {
constexpr std::uint32_t kBankVersion = 1;
} // namespace

bool is_power_of_two(std::size_t m) noexcept { return m != 0 && (m & (m - 1)) == 0; }

Matrix kronecker(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            for (std::size_t k = 0; k < b.rows(); ++k)
                for (std::size_t l = 0; l < b.cols(); ++l)
                    out(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
    return out;
}

Matrix hadamard_matrix(std::size_t m) {
    if (m < 2 || !is_power_of_two(m)) {
        throw DomainError("Hadamard order must be a power of two >= 2, got " + std::to_string(m));
    }
    const Matrix h2{{1.0, 1.0}, {1.0, -1.0}};
    Matrix h = h2;
    while (h.rows() < m) h = kronecker(h, h2);
    return h;
}

Matrix sign_activate(const Matrix& w) {
    Matrix s = w;
    for (double& v : s.flat()) v = v >= 0.0 ? 1.0 : -1.0;
    return s;
}

CodeBank::CodeBank(CodeKind kind, Matrix w, CodeActivation act, double xi)
    : kind_(kind), act_(act), xi_(xi), w_(std::move(w)) {
    if (!(xi_ > 0.0)) throw DomainError("tanh scale xi must be positive");
    if (kind_ == CodeKind::hadamard_fixed) {
        act_ = CodeActivation::sign;
        for (double v : w_.flat())
            if (v != 1.0 && v != -1.0) throw DomainError("Hadamard code bank entries must be +-1");
    }
}

void CodeBank::set_activation(CodeActivation act, double xi) {
    if (kind_ == CodeKind::hadamard_fixed) throw UsageError("Hadamard codes have no activation choice");
    if (!(xi > 0.0)) throw DomainError("tanh scale xi must be positive");
    act_ = act;
    xi_ = xi;
}

Matrix CodeBank::activate() const {
    if (kind_ == CodeKind::hadamard_fixed) return w_;
    if (act_ == CodeActivation::sign) return sign_activate(w_);
    Matrix s = w_;
    for (double& v : s.flat()) v = std::tanh(xi_ * v);
    return s;
}

Matrix CodeBank::ste_backward(const Matrix& grad_wrt_s, SteMode mode) const {
    if (kind_ == CodeKind::hadamard_fixed) {
        throw UsageError("fixed Hadamard codes receive no gradient");
    }
    if (!grad_wrt_s.same_shape(w_)) {
        throw DimensionError("code gradient shape " + grad_wrt_s.shape_str() + " vs bank " +
                             w_.shape_str());
    }
    Matrix g = grad_wrt_s;
    if (act_ == CodeActivation::tanh_scaled) {
        auto gv = g.flat();
        auto wv = w_.flat();
        for (std::size_t i = 0; i < gv.size(); ++i) {
            const double t = std::tanh(xi_ * wv[i]);
            gv[i] *= xi_ * (1.0 - t * t);
        }
        return g;
    }
    if (mode == SteMode::clipped) {
        for (double& v : g.flat()) v = std::min(std::max(v, -1.0), 1.0);
    }
    return g;
}

void CodeBank::update(const Matrix& grad_wrt_w, double eta) {
    if (kind_ == CodeKind::hadamard_fixed) throw UsageError("fixed Hadamard codes cannot be updated");
    if (!grad_wrt_w.all_finite()) throw NumericError("non-finite gradient for target codes");
    axpy(w_, -eta, grad_wrt_w);
}

void CodeBank::replace_weights(const Matrix& w) {
    if (!w.same_shape(w_)) {
        throw DimensionError("code bank shape " + w.shape_str() + " does not match " + w_.shape_str());
    }
    w_ = w;
}

CodeBank select_hadamard_codes(std::size_t m, std::size_t num_classes, Rng& rng) {
    if (num_classes + 1 > m) {
        throw CapacityError("length of Hadamard target codes must exceed class count (L=" +
                            std::to_string(m) + ", K=" + std::to_string(num_classes) + ")");
    }
    const Matrix h = hadamard_matrix(m);
    // Row 0 is all ones and carries no class information.
    auto picks = rng.sample_without_replacement(m - 1, num_classes);
    for (auto& p : picks) ++p;
    return CodeBank(CodeKind::hadamard_fixed, h.gather_rows(picks));
}

CodeBank init_learnable_codes(std::size_t num_classes, std::size_t code_length, Rng& rng) {
    if (num_classes < 2) throw DomainError("learnable codes need at least two classes");
    if (code_length < 1) throw DomainError("code length must be positive");
    Matrix w(num_classes, code_length);
    for (double& v : w.flat()) v = rng.normal();
    return CodeBank(CodeKind::learnable, std::move(w));
}

Matrix code_correlation(const Matrix& codes) {
    Matrix c = matmul_nt(codes, codes);
    const double inv_len = 1.0 / static_cast<double>(codes.cols());
    for (double& v : c.flat()) v *= inv_len;
    return c;
}

double mean_offdiag_abs(const Matrix& corr) {
    const std::size_t k = corr.rows();
    if (k < 2) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j)
            if (i != j) s += std::abs(corr(i, j));
    return s / static_cast<double>(k * (k - 1));
}

CodeSummary summarize_codes(const Matrix& codes) {
    CodeSummary out;
    const std::size_t k = codes.rows();
    const std::size_t len = codes.cols();
    for (std::size_t r = 0; r < k; ++r) {
        out.plus_ones.push_back(static_cast<std::size_t>(
            std::count_if(codes.row(r).begin(), codes.row(r).end(), [](double v) { return v > 0.0; })));
    }
    const Matrix corr = code_correlation(codes);
    out.min_hamming = std::numeric_limits<std::size_t>::max();
    out.min_corr = std::numeric_limits<double>::infinity();
    out.max_corr = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            std::size_t d = 0;
            for (std::size_t l = 0; l < len; ++l) d += (codes(i, l) >= 0.0) != (codes(j, l) >= 0.0);
            out.min_hamming = std::min(out.min_hamming, d);
            out.max_hamming = std::max(out.max_hamming, d);
            out.min_corr = std::min(out.min_corr, corr(i, j));
            out.max_corr = std::max(out.max_corr, corr(i, j));
        }
    }
    if (k < 2) {
        out.min_hamming = 0;
        out.min_corr = out.max_corr = 0.0;
    }
    out.mean_abs_corr = mean_offdiag_abs(corr);
    return out;
}

void save_code_bank(const CodeBank& bank, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw FileError("cannot open '" + path.string() + "' for writing");
    binio::put_magic(os, "LTCB");
    binio::put_u32(os, kBankVersion);
    std::uint32_t kind = 0;
    if (bank.kind() == CodeKind::learnable) kind = bank.activation() == CodeActivation::sign ? 1 : 2;
    binio::put_u32(os, kind);
    binio::put_u32(os, static_cast<std::uint32_t>(bank.num_classes()));
    binio::put_u32(os, static_cast<std::uint32_t>(bank.code_length()));
    binio::put_f64(os, bank.xi());
    for (double v : bank.weights().flat()) binio::put_f64(os, v);
    if (!os) throw FileError("write failed for '" + path.string() + "'");
}

CodeBank load_code_bank(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FileError("cannot open '" + path.string() + "'");
    binio::expect_magic(is, "LTCB");
    const auto version = binio::get_u32(is);
    if (version != kBankVersion) {
        throw VersionError("code bank version " + std::to_string(version) + " not supported");
    }
    const auto kind = binio::get_u32(is);
    const auto k = binio::get_u32(is);
    const auto len = binio::get_u32(is);
    const double xi = binio::get_f64(is);
    if (kind > 2) throw FormatError("unknown code bank kind " + std::to_string(kind));
    if (static_cast<std::uint64_t>(k) * len > (1ull << 32)) throw FormatError("code bank header too large");
    Matrix w(k, len);
    for (double& v : w.flat()) v = binio::get_f64(is);
    if (kind == 0) return CodeBank(CodeKind::hadamard_fixed, std::move(w), CodeActivation::sign, xi);
    return CodeBank(CodeKind::learnable, std::move(w),
                    kind == 1 ? CodeActivation::sign : CodeActivation::tanh_scaled, xi);
}

} // namespace ltc
