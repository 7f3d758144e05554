#include "ltc/network.hpp"

#include <cmath>

#include "ltc/error.hpp"
#include "ltc/kernels.hpp"

namespace ltc {

namespace {

DenseLayer make_layer(std::size_t in, std::size_t out, Activation act, Rng& rng) {
    // Fan-in scaled normal: 2/fan_in for ReLU layers, 1/fan_in otherwise.
    const double stddev = std::sqrt((act == Activation::relu ? 2.0 : 1.0) / static_cast<double>(in));
    DenseLayer l{Matrix(in, out), Matrix(1, out), act};
    for (double& w : l.weight.flat()) w = stddev * rng.normal();
    return l;
}

void apply_activation(Matrix& m, Activation act) {
    switch (act) {
    case Activation::relu:
        for (double& v : m.flat()) v = v > 0.0 ? v : 0.0;
        break;
    case Activation::tanh:
        for (double& v : m.flat()) v = std::tanh(v);
        break;
    case Activation::none: break;
    }
}

// dL/d(pre-activation) from dL/d(output) and the cached output.
Matrix activation_backward(const Matrix& grad_out, const Matrix& out, Activation act) {
    Matrix g = grad_out;
    auto gv = g.flat();
    auto ov = out.flat();
    switch (act) {
    case Activation::relu:
        for (std::size_t i = 0; i < gv.size(); ++i)
            if (!(ov[i] > 0.0)) gv[i] = 0.0;
        break;
    case Activation::tanh:
        for (std::size_t i = 0; i < gv.size(); ++i) gv[i] *= 1.0 - ov[i] * ov[i];
        break;
    case Activation::none: break;
    }
    return g;
}

// Writes dW, db into grads at slot and returns dL/dx.
Matrix dense_backward(const DenseLayer& layer, const Matrix& in, const Matrix& out,
                      const Matrix& grad_out, Matrix& grad_w, Matrix& grad_b) {
    const Matrix dpre = activation_backward(grad_out, out, layer.act);
    grad_w = matmul_tn(in, dpre);
    grad_b = reduce_sum(dpre, Axis::cols);
    return matmul_nt(dpre, layer.weight);
}

} // namespace

std::vector<Matrix*> ModelParams::params() {
    std::vector<Matrix*> out;
    for (auto& l : feature) { out.push_back(&l.weight); out.push_back(&l.bias); }
    out.push_back(&classifier.weight);
    out.push_back(&classifier.bias);
    for (auto& l : semantic) { out.push_back(&l.weight); out.push_back(&l.bias); }
    return out;
}

std::vector<const Matrix*> ModelParams::params() const {
    std::vector<const Matrix*> out;
    for (auto* p : const_cast<ModelParams*>(this)->params()) out.push_back(p);
    return out;
}

std::vector<ParamGroup> ModelParams::groups() const {
    std::vector<ParamGroup> g(2 * feature.size(), ParamGroup::feature);
    g.resize(g.size() + 2 + 2 * semantic.size(), ParamGroup::new_params);
    return g;
}

ModelParams init_model(const ModelDims& dims, Rng& rng) {
    if (dims.input == 0 || dims.classes == 0 || dims.code_length == 0 || dims.semantic_hidden == 0) {
        throw DomainError("model dimensions must be positive");
    }
    if (dims.feature_widths.empty()) throw DomainError("feature extractor needs at least one layer");
    ModelParams m;
    std::size_t in = dims.input;
    for (std::size_t w : dims.feature_widths) {
        if (w == 0) throw DomainError("layer width must be positive");
        m.feature.push_back(make_layer(in, w, Activation::relu, rng));
        in = w;
    }
    // Φ_f and Φ_c draw first so they are identical whatever happens after.
    m.classifier = make_layer(in, dims.classes, Activation::none, rng);
    m.semantic.push_back(make_layer(in, dims.semantic_hidden, Activation::relu, rng));
    m.semantic.push_back(make_layer(dims.semantic_hidden, dims.semantic_hidden, Activation::relu, rng));
    m.semantic.push_back(make_layer(dims.semantic_hidden, dims.code_length, Activation::tanh, rng));
    return m;
}

Matrix dense_forward(const DenseLayer& layer, const Matrix& x) {
    Matrix out = matmul(x, layer.weight);
    for (std::size_t r = 0; r < out.rows(); ++r) {
        auto row = out.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) row[c] += layer.bias(0, c);
    }
    apply_activation(out, layer.act);
    return out;
}

ForwardResult forward(const ModelParams& model, const Matrix& x, bool with_semantic) {
    if (model.feature.empty() || x.cols() != model.feature.front().in()) {
        throw DimensionError("input " + x.shape_str() + " does not match feature extractor input width");
    }
    ForwardResult r;
    r.cache.version = model.version;
    r.cache.model = &model;
    Matrix h = x;
    for (const auto& layer : model.feature) {
        r.cache.feature_in.push_back(h);
        h = dense_forward(layer, h);
        r.cache.feature_out.push_back(h);
    }
    r.z = h;
    r.cache.classifier_in = r.z;
    r.logits = dense_forward(model.classifier, r.z);
    if (with_semantic && !model.semantic.empty()) {
        Matrix s = r.z;
        for (const auto& layer : model.semantic) {
            r.cache.semantic_in.push_back(s);
            s = dense_forward(layer, s);
            r.cache.semantic_out.push_back(s);
        }
        r.v = std::move(s);
    }
    return r;
}

std::vector<Matrix> backward(const ModelParams& model, const ForwardCache& cache,
                             const Matrix& grad_logits, const Matrix& grad_v) {
    if (cache.model != &model || cache.version != model.version ||
        cache.feature_in.size() != model.feature.size()) {
        throw UsageError("forward cache does not belong to the current model state");
    }
    const std::size_t nf = model.feature.size();
    const std::size_t ns = model.semantic.size();
    std::vector<Matrix> grads(2 * (nf + 1 + ns));
    const std::size_t cls_slot = 2 * nf;

    if (!grad_logits.same_shape(Matrix(cache.classifier_in.rows(), model.classifier.out()))) {
        throw DimensionError("grad_logits shape " + grad_logits.shape_str() + " does not match logits");
    }
    // The classifier output is its own cached result; for a linear layer
    // activation_backward never reads it.
    Matrix dz = dense_backward(model.classifier, cache.classifier_in, grad_logits, grad_logits,
                               grads[cls_slot], grads[cls_slot + 1]);

    const std::size_t sem_slot = cls_slot + 2;
    if (!grad_v.empty() && ns > 0) {
        if (cache.semantic_in.size() != ns) throw UsageError("forward ran without the semantic head");
        if (!grad_v.same_shape(cache.semantic_out.back())) {
            throw DimensionError("grad_v shape " + grad_v.shape_str() + " does not match semantic codes");
        }
        Matrix g = grad_v;
        for (std::size_t i = ns; i-- > 0;) {
            g = dense_backward(model.semantic[i], cache.semantic_in[i], cache.semantic_out[i], g,
                               grads[sem_slot + 2 * i], grads[sem_slot + 2 * i + 1]);
        }
        // Both heads read z: the trunk gradient is the sum of the two paths.
        axpy(dz, 1.0, g);
    } else {
        for (std::size_t i = 0; i < ns; ++i) {
            grads[sem_slot + 2 * i] = Matrix(model.semantic[i].in(), model.semantic[i].out());
            grads[sem_slot + 2 * i + 1] = Matrix(1, model.semantic[i].out());
        }
    }

    Matrix g = dz;
    for (std::size_t i = nf; i-- > 0;) {
        g = dense_backward(model.feature[i], cache.feature_in[i], cache.feature_out[i], g, grads[2 * i],
                           grads[2 * i + 1]);
    }
    return grads;
}

Optimizer::Optimizer(const ModelParams& model, const Hyperparams& hp)
    : lr_feature_(hp.lr_feature),
      lr_new_(hp.lr_new),
      lr_codes_(hp.lr_codes),
      momentum_(hp.momentum),
      weight_decay_(hp.weight_decay),
      decay_epochs_(hp.decay_epochs),
      decay_factor_(hp.decay_factor),
      decay_codes_(hp.decay_codes) {
    for (const Matrix* p : model.params()) buffers_.emplace_back(p->rows(), p->cols());
}

double Optimizer::decayed(double base, std::size_t epoch) const {
    double lr = base;
    for (std::size_t d : decay_epochs_)
        if (epoch >= d) lr *= decay_factor_;
    return lr;
}

double Optimizer::lr(ParamGroup g, std::size_t epoch) const {
    return decayed(g == ParamGroup::feature ? lr_feature_ : lr_new_, epoch);
}

double Optimizer::code_lr(std::size_t epoch) const {
    return decay_codes_ ? decayed(lr_codes_, epoch) : lr_codes_;
}

void Optimizer::step(ModelParams& model, const std::vector<Matrix>& grads, std::size_t epoch) {
    auto params = model.params();
    const auto groups = model.groups();
    if (grads.size() != params.size() || buffers_.size() != params.size()) {
        throw DimensionError("gradient list does not match model parameters");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!grads[i].same_shape(*params[i])) {
            throw DimensionError("gradient " + grads[i].shape_str() + " vs parameter " +
                                 params[i]->shape_str());
        }
        if (!grads[i].all_finite()) throw NumericError("non-finite gradient in parameter " + std::to_string(i));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double rate = lr(groups[i], epoch);
        auto p = params[i]->flat();
        auto b = buffers_[i].flat();
        auto g = grads[i].flat();
        for (std::size_t j = 0; j < p.size(); ++j) {
            b[j] = momentum_ * b[j] + g[j] + weight_decay_ * p[j];
            p[j] -= rate * b[j];
        }
    }
    ++model.version;
}

} // namespace ltc
