#include "ltc/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "ltc/codes.hpp"
#include "ltc/error.hpp"
#include "ltc/gradcheck.hpp"
#include "ltc/kernels.hpp"
#include "ltc/losses.hpp"
#include "ltc/network.hpp"
#include "ltc/rng.hpp"

namespace ltc {

namespace {

constexpr double kKinkGap = 1e-4;
constexpr double kResolvable = 1e-5;
constexpr std::size_t kMaxDrawsPerInstance = 200;

Matrix gaussian(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
    Matrix m(r, c);
    for (double& v : m.flat()) v = scale * rng.normal();
    return m;
}

std::vector<std::size_t> labels(std::size_t n, std::size_t k, Rng& rng) {
    std::vector<std::size_t> y(n);
    for (auto& v : y) v = static_cast<std::size_t>(rng.below(k));
    return y;
}

bool resolvable(const Matrix& g) {
    return std::none_of(g.flat().begin(), g.flat().end(),
                        [](double v) { return v != 0.0 && std::abs(v) < kResolvable; });
}

bool hinge_clear(const Matrix& v, const Matrix& s, const std::vector<std::size_t>& y, double margin) {
    const Matrix sim = matmul_nt(v, s);
    for (std::size_t i = 0; i < v.rows(); ++i)
        for (std::size_t k = 0; k < s.rows(); ++k)
            if (k != y[i] && std::abs(sim(i, k) - sim(i, y[i]) + margin) < kKinkGap) return false;
    return true;
}

bool gram_clear(const Matrix& s) {
    const Matrix g = matmul_nt(s, s);
    for (std::size_t a = 0; a < s.rows(); ++a)
        for (std::size_t b = 0; b < s.rows(); ++b)
            if (a != b && std::abs(g(a, b)) < kKinkGap) return false;
    return true;
}

bool relu_clear(const std::vector<DenseLayer>& layers, Matrix x) {
    for (const DenseLayer& layer : layers) {
        DenseLayer linear = layer;
        linear.act = Activation::none;
        const Matrix pre = dense_forward(linear, x);
        if (layer.act == Activation::relu)
            for (double v : pre.flat())
                if (std::abs(v) < kKinkGap) return false;
        x = dense_forward(layer, x);
    }
    return true;
}

// One check = a sampler that fills (fn, x, analytic) triples; it returns false
// to request a redraw.
struct Probe {
    ScalarFn fn;
    Matrix x;
    Matrix analytic;
};
using Sampler = std::function<bool(Rng&, std::vector<Probe>&)>;

SuiteRow run(const std::string& name, const Sampler& sample, const SuiteOptions& opts, Rng& rng, bool perturb) {
    SuiteRow row;
    row.name = name;
    std::size_t draws = 0;
    while (row.instances < opts.instances) {
        if (++draws > kMaxDrawsPerInstance * opts.instances) {
            throw NumericError("gradient suite '" + name + "' could not find enough kink-free instances");
        }
        std::vector<Probe> probes;
        if (!sample(rng, probes)) {
            ++row.redrawn;
            continue;
        }
        for (Probe& p : probes) {
            if (perturb && row.instances == 0) {
                auto flat = p.analytic.flat();
                auto it = std::max_element(flat.begin(), flat.end(),
                                           [](double a, double b) { return std::abs(a) < std::abs(b); });
                *it = -*it;
                perturb = false;
            }
            const GradCheckReport rep = finite_diff_check(p.fn, p.x, p.analytic, opts.step, opts.tol);
            row.max_rel_err = std::max(row.max_rel_err, rep.max_rel_err);
            row.passed = row.passed && rep.passed;
        }
        ++row.instances;
    }
    return row;
}

} // namespace

std::vector<SuiteRow> gradient_suite(const SuiteOptions& opts) {
    std::vector<SuiteRow> rows;

    Rng ce_rng = Rng::derive(opts.seed, 1);
    rows.push_back(run("ce", [](Rng& rng, std::vector<Probe>& out) {
        const std::size_t n = 2 + rng.below(5), k = 2 + rng.below(6);
        Matrix z = gaussian(n, k, rng, 2.0);
        auto y = labels(n, k, rng);
        auto r = cross_entropy(z, y);
        if (!resolvable(r.grad_logits)) return false;
        out.push_back({[y](const Matrix& x) { return cross_entropy(x, y).loss; }, std::move(z), std::move(r.grad_logits)});
        return true;
    }, opts, ce_rng, opts.perturb));

    Rng mse_rng = Rng::derive(opts.seed, 2);
    rows.push_back(run("mse", [](Rng& rng, std::vector<Probe>& out) {
        const std::size_t n = 2 + rng.below(5), k = 2 + rng.below(4), l = 4 + rng.below(8);
        const Matrix v = gaussian(n, l, rng), s = gaussian(k, l, rng);
        auto y = labels(n, k, rng);
        auto r = mse_codes(v, s, y);
        if (!resolvable(r.grad_v) || !resolvable(r.grad_s)) return false;
        out.push_back({[s, y](const Matrix& x) { return mse_codes(x, s, y).loss; }, v, std::move(r.grad_v)});
        out.push_back({[v, y](const Matrix& x) { return mse_codes(v, x, y).loss; }, s, std::move(r.grad_s)});
        return true;
    }, opts, mse_rng, false));

    Rng tri_rng = Rng::derive(opts.seed, 3);
    rows.push_back(run("triplet", [](Rng& rng, std::vector<Probe>& out) {
        const std::size_t n = 2 + rng.below(5), k = 2 + rng.below(4), l = 4 + rng.below(8);
        const Matrix v = gaussian(n, l, rng), s = gaussian(k, l, rng);
        auto y = labels(n, k, rng);
        const double margin = 2.0 * rng.uniform();
        if (!hinge_clear(v, s, y, margin)) return false;
        auto r = triplet_global(v, s, y, margin);
        if (!resolvable(r.grad_v) || !resolvable(r.grad_s)) return false;
        out.push_back({[s, y, margin](const Matrix& x) { return triplet_global(x, s, y, margin).loss; }, v,
                       std::move(r.grad_v)});
        out.push_back({[v, y, margin](const Matrix& x) { return triplet_global(v, x, y, margin).loss; }, s,
                       std::move(r.grad_s)});
        return true;
    }, opts, tri_rng, false));

    Rng corr_rng = Rng::derive(opts.seed, 4);
    rows.push_back(run("corr", [](Rng& rng, std::vector<Probe>& out) {
        const std::size_t k = 2 + rng.below(5), l = 4 + rng.below(8);
        Matrix s = gaussian(k, l, rng);
        if (!gram_clear(s)) return false;
        auto r = corr_consistency(s);
        if (!resolvable(r.grad_s)) return false;
        out.push_back({[](const Matrix& x) { return corr_consistency(x).loss; }, std::move(s), std::move(r.grad_s)});
        return true;
    }, opts, corr_rng, false));

    // Full ltc objective through every parameter of a toy network.
    Rng net_rng = Rng::derive(opts.seed, 5);
    rows.push_back(run("network", [](Rng& rng, std::vector<Probe>& out) {
        ModelDims dims;
        dims.input = 6;
        dims.feature_widths = {7, 5};
        dims.classes = 3;
        dims.semantic_hidden = 6;
        dims.code_length = 8;
        ModelParams model = init_model(dims, rng);
        for (Matrix* p : model.params())
            if (p->rows() == 1)
                for (double& v : p->flat()) v = 0.1 * rng.normal();
        const Matrix x = gaussian(4, dims.input, rng);
        const auto y = labels(4, dims.classes, rng);
        const Matrix s = init_learnable_codes(dims.classes, dims.code_length, rng).activate();
        const double margin = 4.0;
        Hyperparams hp;
        hp.lambda = 0.5;

        if (!relu_clear(model.feature, x)) return false;
        const ForwardResult f0 = forward(model, x);
        if (!relu_clear(model.semantic, f0.z) || !hinge_clear(f0.v, s, y, margin)) return false;

        auto objective = [=](const ModelParams& m) {
            ForwardResult f = forward(m, x);
            LossParts parts;
            parts.ce = cross_entropy(f.logits, y);
            parts.mse = mse_codes(f.v, s, y);
            parts.triplet = triplet_global(f.v, s, y, margin);
            parts.corr = corr_consistency(s);
            return std::pair{compose_objective(TrainMode::ltc, parts, hp), std::move(f)};
        };
        auto [bundle, f] = objective(model);
        auto grads = backward(model, f.cache, bundle.grad_logits, bundle.grad_v);
        for (const Matrix& g : grads)
            if (!resolvable(g)) return false;
        const auto params = model.params();
        for (std::size_t i = 0; i < params.size(); ++i) {
            out.push_back({[model, i, objective](const Matrix& p) {
                               ModelParams m = model;
                               *m.params()[i] = p;
                               return objective(m).first.total;
                           },
                           *params[i], std::move(grads[i])});
        }
        return true;
    }, opts, net_rng, false));

    return rows;
}

} // namespace ltc
