#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "doctest.h"
#include "ltc/codes.hpp"
#include "ltc/error.hpp"
#include "ltc/gradcheck.hpp"
#include "ltc/kernels.hpp"
#include "test_util.hpp"

using namespace ltc;

namespace {

std::size_t hamming(std::span<const double> a, std::span<const double> b) {
    std::size_t d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
    return d;
}

} // namespace

TEST_CASE("hadamard base case and orthogonality") {
    CHECK(hadamard_matrix(2) == Matrix{{1, 1}, {1, -1}});
    const Matrix h4 = hadamard_matrix(4);
    CHECK(matmul_nt(h4, h4) == scaled(Matrix::identity(4), 4.0));
    CHECK(hadamard_matrix(8) == kronecker(h4, hadamard_matrix(2)));
    for (std::size_t m = 2; m <= 1024; m *= 2) {
        const Matrix h = hadamard_matrix(m);
        CHECK(matmul_nt(h, h) == scaled(Matrix::identity(m), static_cast<double>(m)));
    }
    CHECK_THROWS_AS(hadamard_matrix(6), DomainError);
    CHECK_THROWS_AS(hadamard_matrix(1), DomainError);
    CHECK_THROWS_AS(hadamard_matrix(0), DomainError);
}

TEST_CASE("selected hadamard codes are balanced and equidistant") {
    Rng rng(1);
    const CodeBank b = select_hadamard_codes(4, 3, rng);
    CHECK(b.kind() == CodeKind::hadamard_fixed);
    CHECK(b.code_length() == 4);
    const Matrix& w = b.weights();
    for (std::size_t r = 0; r < 3; ++r) {
        CHECK(std::count(w.row(r).begin(), w.row(r).end(), 1.0) == 2);
        for (std::size_t s = r + 1; s < 3; ++s) CHECK(hamming(w.row(r), w.row(s)) == 2);
    }
    // K = m - 1 uses every non-first row exactly once.
    const Matrix h = hadamard_matrix(4);
    for (std::size_t hr = 1; hr < 4; ++hr) {
        int found = 0;
        for (std::size_t r = 0; r < 3; ++r)
            found += std::equal(w.row(r).begin(), w.row(r).end(), h.row(hr).begin());
        CHECK(found == 1);
    }
    CHECK_THROWS_AS(select_hadamard_codes(2, 2, rng), CapacityError);
    CHECK_THROWS_AS(select_hadamard_codes(6, 2, rng), DomainError);
}

TEST_CASE("hadamard code properties over many sizes and seeds") {
    for (std::size_t m = 4; m <= 256; m *= 2) {
        for (std::uint64_t seed = 0; seed < 3; ++seed) {
            Rng rng(seed);
            const std::size_t k = 1 + static_cast<std::size_t>(rng.below(m - 1));
            const Matrix w = select_hadamard_codes(m, k, rng).weights();
            for (std::size_t r = 0; r < k; ++r) {
                REQUIRE(static_cast<std::size_t>(std::count(w.row(r).begin(), w.row(r).end(), 1.0)) == m / 2);
                for (std::size_t s = r + 1; s < k; ++s) REQUIRE(hamming(w.row(r), w.row(s)) == m / 2);
            }
        }
    }
}

TEST_CASE("learnable init") {
    Rng a(7), b(7);
    const CodeBank x = init_learnable_codes(3, 8, a);
    const CodeBank y = init_learnable_codes(3, 8, b);
    CHECK(x.weights() == y.weights());
    const Matrix xs = x.activate();
    for (double v : xs.flat()) CHECK((v == 1.0 || v == -1.0));

    Rng big(123);
    const Matrix s = init_learnable_codes(100, 512, big).activate();
    const double frac = static_cast<double>(std::count(s.flat().begin(), s.flat().end(), 1.0)) /
                        static_cast<double>(s.size());
    CHECK(frac == doctest::Approx(0.5).epsilon(0.1));
    CHECK(std::abs(frac - 0.5) <= 0.05);
    CHECK_THROWS_AS(init_learnable_codes(1, 8, a), DomainError);
}

TEST_CASE("activation") {
    CodeBank b(CodeKind::learnable, Matrix{{0.3, -2, 0}});
    CHECK(b.activate() == Matrix{{1, -1, 1}});
    // Sign is idempotent on binary inputs.
    CHECK(sign_activate(b.activate()) == b.activate());

    CodeBank t(CodeKind::learnable, Matrix{{0.1}}, CodeActivation::tanh_scaled, 100.0);
    const double gap = 1.0 - t.activate()(0, 0);
    CHECK(gap > 0.0);
    CHECK(gap < 5e-9);

    Rng rng(3);
    const CodeBank h = select_hadamard_codes(8, 5, rng);
    CHECK(h.activate() == h.weights());
}

TEST_CASE("tanh surrogate approaches sign for |w| >= 0.1") {
    Rng rng(4);
    Matrix w(20, 50);
    for (double& v : w.flat()) {
        const double mag = 0.1 + 3.0 * rng.uniform();
        v = rng.uniform() < 0.5 ? -mag : mag;
    }
    const CodeBank t(CodeKind::learnable, w, CodeActivation::tanh_scaled, 100.0);
    CHECK(max_abs(elementwise(t.activate(), sign_activate(w), ElementOp::sub)) <= 5e-9);
}

TEST_CASE("straight-through backward") {
    CodeBank b(CodeKind::learnable, Matrix{{0.5, -0.5, 2.0}});
    CHECK(b.ste_backward(Matrix{{2.5, -0.3, -7}}, SteMode::clipped) == Matrix{{1.0, -0.3, -1.0}});
    CHECK(b.ste_backward(Matrix{{2.5, -0.3, -7}}, SteMode::passthrough) == Matrix{{2.5, -0.3, -7}});

    Rng rng(8);
    const Matrix g = test::random_matrix(4, 6, rng, 3.0);
    CodeBank big(CodeKind::learnable, test::random_matrix(4, 6, rng));
    const Matrix clipped = big.ste_backward(g, SteMode::clipped);
    CHECK(max_abs(clipped) <= 1.0);
    // Identity inside [-1, 1].
    CHECK(big.ste_backward(clipped, SteMode::clipped) == clipped);

    Rng hr(1);
    CHECK_THROWS_AS(select_hadamard_codes(4, 2, hr).ste_backward(Matrix(2, 4), SteMode::clipped), UsageError);
}

TEST_CASE("tanh backward is the exact derivative") {
    CodeBank t(CodeKind::learnable, Matrix{{0.0}}, CodeActivation::tanh_scaled, 10.0);
    CHECK(t.ste_backward(Matrix{{1.0}}, SteMode::clipped)(0, 0) == doctest::Approx(10.0));

    Rng rng(12);
    const Matrix w = test::random_matrix(3, 5, rng, 0.2);
    const Matrix upstream = test::random_matrix(3, 5, rng);
    const CodeBank bank(CodeKind::learnable, w, CodeActivation::tanh_scaled, 10.0);
    const ScalarFn f = [&](const Matrix& x) {
        const Matrix s = CodeBank(CodeKind::learnable, x, CodeActivation::tanh_scaled, 10.0).activate();
        return sum_all(elementwise(s, upstream, ElementOp::mul));
    };
    CHECK(finite_diff_check(f, w, bank.ste_backward(upstream, SteMode::clipped), 1e-6, 1e-6).passed);
}

TEST_CASE("code update step") {
    CodeBank b(CodeKind::learnable, Matrix{{1}});
    b.update(Matrix{{1}}, 0.1);
    CHECK(b.weights()(0, 0) == doctest::Approx(0.9));
    b.update(Matrix{{0}}, 0.1);
    CHECK(b.weights()(0, 0) == doctest::Approx(0.9));
    CHECK_THROWS_AS(b.update(Matrix{{NAN}}, 0.1), NumericError);

    CodeBank two(CodeKind::learnable, Matrix{{0.5, -1}});
    CodeBank one = two;
    two.update(Matrix{{0.25, 1}}, 0.5);
    two.update(Matrix{{0.5, -2}}, 0.5);
    one.update(Matrix{{0.75, -1}}, 0.5);
    CHECK(two.weights() == one.weights());

    Rng rng(2);
    auto h = select_hadamard_codes(4, 2, rng);
    CHECK_THROWS_AS(h.update(Matrix(2, 4), 0.1), UsageError);
}

TEST_CASE("class scores are invariant under joint row/label permutation") {
    Rng rng(21);
    const Matrix w = test::random_matrix(6, 16, rng);
    const Matrix v = test::random_matrix(10, 16, rng);
    const auto pred = reduce_argmax(matmul_nt(v, sign_activate(w)), Axis::rows);
    std::vector<std::size_t> perm(6);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(perm));
    Matrix wp(6, 16);
    for (std::size_t k = 0; k < 6; ++k)
        std::copy(w.row(k).begin(), w.row(k).end(), wp.row(perm[k]).begin());
    const auto pred_p = reduce_argmax(matmul_nt(v, sign_activate(wp)), Axis::rows);
    for (std::size_t i = 0; i < 10; ++i) CHECK(pred_p[i] == perm[pred[i]]);
}

TEST_CASE("code summary and correlation") {
    Rng rng(5);
    const Matrix h = select_hadamard_codes(8, 7, rng).weights();
    const auto sum = summarize_codes(h);
    for (auto c : sum.plus_ones) CHECK(c == 4);
    CHECK(sum.min_hamming == 4);
    CHECK(sum.max_hamming == 4);
    CHECK(sum.mean_abs_corr == 0.0);
    const Matrix c = code_correlation(h);
    for (std::size_t i = 0; i < 7; ++i) CHECK(c(i, i) == 1.0);
}

TEST_CASE("code bank file round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "ltc_codes_test";
    std::filesystem::create_directories(dir);
    Rng rng(9);
    CodeBank l = init_learnable_codes(4, 16, rng);
    l.set_activation(CodeActivation::tanh_scaled, 7.5);
    save_code_bank(l, dir / "l.ltcb");
    const CodeBank back = load_code_bank(dir / "l.ltcb");
    CHECK(back.weights() == l.weights());
    CHECK(back.activation() == CodeActivation::tanh_scaled);
    CHECK(back.xi() == 7.5);

    const CodeBank h = select_hadamard_codes(16, 5, rng);
    save_code_bank(h, dir / "h.ltcb");
    CHECK(load_code_bank(dir / "h.ltcb").kind() == CodeKind::hadamard_fixed);
    CHECK(std::filesystem::file_size(dir / "h.ltcb") == 4 + 4 * 4 + 8 + 5 * 16 * 8);

    {
        std::ofstream bad(dir / "bad.ltcb", std::ios::binary);
        bad << "XXXX";
    }
    CHECK_THROWS_AS(load_code_bank(dir / "bad.ltcb"), FormatError);
    std::filesystem::resize_file(dir / "h.ltcb", 30);
    CHECK_THROWS_AS(load_code_bank(dir / "h.ltcb"), FormatError);
    std::filesystem::remove_all(dir);
}
