#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ltc/hyperparams.hpp"
#include "ltc/matrix.hpp"
#include "ltc/rng.hpp"

namespace ltc {

enum class Activation { relu, tanh, none };

struct DenseLayer {
    Matrix weight;  // in×out
    Matrix bias;    // 1×out
    Activation act = Activation::none;

    std::size_t in() const noexcept { return weight.rows(); }
    std::size_t out() const noexcept { return weight.cols(); }
};

// feature_widths lists every Φ_f layer output (the last one is d).
struct ModelDims {
    std::size_t input = 0;
    std::vector<std::size_t> feature_widths{256, 128};
    std::size_t classes = 0;
    std::size_t semantic_hidden = 256;
    std::size_t code_length = 512;

    std::size_t feature_dim() const { return feature_widths.empty() ? input : feature_widths.back(); }
};

enum class ParamGroup { feature, new_params };

// Φ_f (ReLU MLP), Φ_c (linear classifier) and Φ_s (FC-ReLU-FC-ReLU-FC-tanh).
// An empty semantic head is allowed after training: inference never uses it.
struct ModelParams {
    std::vector<DenseLayer> feature;
    DenseLayer classifier;
    std::vector<DenseLayer> semantic;
    // Bumped on every parameter update so stale forward caches are caught.
    std::uint64_t version = 0;

    // Parameter matrices in the fixed order feature (W, b)..., classifier,
    // semantic. Gradients, momentum buffers and checkpoints use this order.
    std::vector<Matrix*> params();
    std::vector<const Matrix*> params() const;
    std::vector<ParamGroup> groups() const;
};

ModelParams init_model(const ModelDims& dims, Rng& rng);

struct ForwardCache {
    std::uint64_t version = 0;
    const ModelParams* model = nullptr;
    // Layer inputs and post-activation outputs, per sub-network.
    std::vector<Matrix> feature_in, feature_out;
    Matrix classifier_in;
    std::vector<Matrix> semantic_in, semantic_out;
};

struct ForwardResult {
    Matrix z;
    Matrix logits;
    Matrix v;  // empty when the semantic head is skipped
    ForwardCache cache;
};

// with_semantic = false evaluates only Φ_c ∘ Φ_f.
ForwardResult forward(const ModelParams& model, const Matrix& x, bool with_semantic = true);

Matrix dense_forward(const DenseLayer& layer, const Matrix& x);

// Exact reverse-mode gradients, one matrix per entry of model.params().
// An empty grad_v skips the semantic branch (its gradients come back zero).
std::vector<Matrix> backward(const ModelParams& model, const ForwardCache& cache,
                             const Matrix& grad_logits, const Matrix& grad_v);

// Momentum SGD with coupled weight decay and per-group step decay:
//   buf <- momentum·buf + grad + weight_decay·param;  param <- param - lr·buf
class Optimizer {
public:
    Optimizer() = default;
    Optimizer(const ModelParams& model, const Hyperparams& hp);

    // Group rate after applying every decay boundary with epoch >= d.
    double lr(ParamGroup g, std::size_t epoch) const;
    double code_lr(std::size_t epoch) const;

    void step(ModelParams& model, const std::vector<Matrix>& grads, std::size_t epoch);

    const std::vector<Matrix>& buffers() const noexcept { return buffers_; }
    void set_buffers(std::vector<Matrix> b) { buffers_ = std::move(b); }

private:
    double decayed(double base, std::size_t epoch) const;

    std::vector<Matrix> buffers_;
    double lr_feature_ = 0.0;
    double lr_new_ = 0.0;
    double lr_codes_ = 0.0;
    double momentum_ = 0.0;
    double weight_decay_ = 0.0;
    std::vector<std::size_t> decay_epochs_;
    double decay_factor_ = 1.0;
    bool decay_codes_ = true;
};

} // namespace ltc
