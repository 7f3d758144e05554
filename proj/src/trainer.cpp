#include "ltc/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "ltc/binio.hpp"
#include "ltc/kernels.hpp"

namespace ltc {

namespace {

constexpr std::uint32_t kCheckpointVersion = 1;

// Per-component sub-streams of the run seed.
constexpr std::uint64_t kModelStream = 5;
constexpr std::uint64_t kCodeStream = 6;
constexpr std::uint64_t kTrainerStream = 8;

constexpr std::size_t kEvalChunk = 1024;

} // namespace

void TrainConfig::validate(std::size_t num_classes) const {
    auto fail = [](const std::string& msg) { throw ConfigError(msg); };
    if (num_classes < 2) fail("need at least two classes, got " + std::to_string(num_classes));
    if (hp.epochs == 0) fail("epochs must be positive");
    if (hp.batch_size == 0) fail("batch_size must be positive");
    if (hp.code_length == 0) fail("code_length must be positive");
    if (hp.gamma < 0 || hp.lambda < 0 || hp.beta < 0) fail("loss weights must be non-negative");
    if (hp.epsilon && *hp.epsilon < 0) fail("epsilon must be non-negative");
    if (!(hp.xi > 0)) fail("xi must be positive");
    if (hp.lr_feature < 0 || hp.lr_new < 0 || hp.lr_codes < 0) fail("learning rates must be non-negative");
    if (hp.momentum < 0 || hp.weight_decay < 0) fail("momentum and weight_decay must be non-negative");
    if (feature_widths.empty()) fail("feature_widths needs at least one layer");
    if (std::find(feature_widths.begin(), feature_widths.end(), 0u) != feature_widths.end()) {
        fail("feature_widths entries must be positive");
    }
    if (semantic_hidden == 0) fail("semantic_hidden must be positive");
    if (eval_every == 0) fail("eval_every must be positive");
    if (mode == TrainMode::htc) {
        if (!is_power_of_two(hp.code_length) || hp.code_length < 2) {
            fail("htc mode needs code_length to be a power of two, got " + std::to_string(hp.code_length));
        }
        if (hp.code_length - 1 < num_classes) {
            fail("length of Hadamard target codes must exceed class count (L=" + std::to_string(hp.code_length) +
                 ", K=" + std::to_string(num_classes) + ")");
        }
    }
}

std::string to_json_line(const EpochMetrics& m) {
    nlohmann::ordered_json j;
    j["epoch"] = m.epoch;
    j["ce"] = m.ce;
    j["mse"] = m.mse;
    j["triplet"] = m.triplet;
    j["corr"] = m.corr;
    j["total"] = m.total;
    j["top1"] = m.top1;
    j["top5"] = m.top5;
    j["code_corr"] = m.code_corr;
    j["wall_seconds"] = m.wall_seconds;
    return j.dump();
}

TrainState init_state(const TrainConfig& cfg, std::size_t input_dim, std::size_t num_classes) {
    cfg.validate(num_classes);
    ModelDims dims;
    dims.input = input_dim;
    dims.feature_widths = cfg.feature_widths;
    dims.classes = num_classes;
    dims.semantic_hidden = cfg.semantic_hidden;
    dims.code_length = cfg.hp.code_length;

    TrainState s;
    s.mode = cfg.mode;
    Rng model_rng = Rng::derive(cfg.hp.seed, kModelStream);
    s.model = init_model(dims, model_rng);
    s.opt = Optimizer(s.model, cfg.hp);
    Rng code_rng = Rng::derive(cfg.hp.seed, kCodeStream);
    if (cfg.mode == TrainMode::htc) {
        s.codes = select_hadamard_codes(cfg.hp.code_length, num_classes, code_rng);
    } else if (cfg.mode == TrainMode::ltc) {
        s.codes = init_learnable_codes(num_classes, cfg.hp.code_length, code_rng);
        s.codes->set_activation(cfg.hp.code_activation, cfg.hp.xi);
    }
    s.rng = Rng::derive(cfg.hp.seed, kTrainerStream);
    return s;
}

// ---------------------------------------------------------------- checkpoints

namespace {

std::uint32_t code_kind_tag(const CodeBank& b) { return b.kind() == CodeKind::hadamard_fixed ? 0u : 1u; }

} // namespace

void save_checkpoint(const TrainState& state, const std::filesystem::path& path) {
    const auto tmp = std::filesystem::path(path).concat(".tmp");
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw FileError("cannot open '" + tmp.string() + "' for writing");
        binio::put_magic(os, "LTCK");
        binio::put_u32(os, kCheckpointVersion);
        const auto nf = static_cast<std::uint32_t>(state.model.feature.size());
        const auto ns = static_cast<std::uint32_t>(state.model.semantic.size());
        binio::put_u32(os, nf + 1 + ns);
        binio::put_u32(os, nf);
        binio::put_u32(os, ns);
        binio::put_u32(os, static_cast<std::uint32_t>(state.mode));
        binio::put_u32(os, static_cast<std::uint32_t>(state.epoch));
        for (std::uint64_t w : state.rng.state()) binio::put_u64(os, w);
        binio::put_u32(os, state.codes ? 1u : 0u);
        if (state.codes) {
            binio::put_u32(os, code_kind_tag(*state.codes));
            binio::put_u32(os, static_cast<std::uint32_t>(state.codes->activation()));
            binio::put_f64(os, state.codes->xi());
        }
        const auto params = state.model.params();
        const auto& bufs = state.opt.buffers();
        binio::put_u32(os, static_cast<std::uint32_t>(params.size() + bufs.size() + (state.codes ? 1 : 0)));
        for (const Matrix* p : params) binio::put_matrix(os, *p);
        for (const Matrix& b : bufs) binio::put_matrix(os, b);
        if (state.codes) binio::put_matrix(os, state.codes->weights());
        if (!os) throw FileError("write failed for '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

namespace {

struct RawCheckpoint {
    std::uint32_t layers = 0, nf = 0, ns = 0, mode = 0, epoch = 0;
    Rng::State rng{};
    bool has_codes = false;
    std::uint32_t kind = 0, act = 0;
    double xi = 1.0;
    std::vector<Matrix> matrices;
};

RawCheckpoint read_raw(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FileError("cannot open checkpoint '" + path.string() + "'");
    binio::expect_magic(is, "LTCK");
    const auto version = binio::get_u32(is);
    if (version != kCheckpointVersion) {
        throw VersionError("checkpoint version " + std::to_string(version) + " not supported (expected " +
                           std::to_string(kCheckpointVersion) + ")");
    }
    RawCheckpoint r;
    r.layers = binio::get_u32(is);
    r.nf = binio::get_u32(is);
    r.ns = binio::get_u32(is);
    r.mode = binio::get_u32(is);
    r.epoch = binio::get_u32(is);
    for (auto& w : r.rng) w = binio::get_u64(is);
    r.has_codes = binio::get_u32(is) != 0;
    if (r.has_codes) {
        r.kind = binio::get_u32(is);
        r.act = binio::get_u32(is);
        r.xi = binio::get_f64(is);
    }
    if (r.layers != r.nf + 1 + r.ns) throw FormatError("checkpoint layer counts are inconsistent");
    const auto count = binio::get_u32(is);
    const std::size_t expected = 4 * std::size_t{r.layers} + (r.has_codes ? 1 : 0);
    if (count != expected) {
        throw FormatError("checkpoint holds " + std::to_string(count) + " matrices, its header implies " +
                          std::to_string(expected));
    }
    r.matrices.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) r.matrices.push_back(binio::get_matrix(is));
    return r;
}

} // namespace

ModelParams read_checkpoint_model(const std::filesystem::path& path) {
    const RawCheckpoint r = read_raw(path);
    ModelParams m;
    std::size_t at = 0;
    auto take = [&](Activation act) {
        DenseLayer layer{r.matrices[at], r.matrices[at + 1], act};
        if (layer.bias.rows() != 1 || layer.bias.cols() != layer.weight.cols()) {
            throw FormatError("checkpoint layer " + std::to_string(at / 2) + " has weight " +
                              layer.weight.shape_str() + " and bias " + layer.bias.shape_str());
        }
        at += 2;
        return layer;
    };
    for (std::uint32_t i = 0; i < r.nf; ++i) m.feature.push_back(take(Activation::relu));
    m.classifier = take(Activation::none);
    for (std::uint32_t i = 0; i < r.ns; ++i) m.semantic.push_back(take(i + 1 == r.ns ? Activation::tanh : Activation::relu));
    std::size_t width = m.feature.empty() ? 0 : m.feature.front().in();
    for (const DenseLayer& l : m.feature) {
        if (l.in() != width) throw FormatError("checkpoint feature layers do not chain");
        width = l.out();
    }
    if (m.classifier.in() != width) throw FormatError("checkpoint classifier does not match the feature width");
    return m;
}

void load_checkpoint(TrainState& state, const std::filesystem::path& path) {
    const RawCheckpoint raw = read_raw(path);
    const auto& loaded = raw.matrices;

    if (raw.nf != state.model.feature.size() || raw.ns != state.model.semantic.size()) {
        throw DimensionError("checkpoint layer layout does not match the model");
    }
    if (raw.mode != static_cast<std::uint32_t>(state.mode)) {
        throw DimensionError("checkpoint was written in a different mode");
    }
    if (raw.has_codes != state.codes.has_value() || (raw.has_codes && raw.kind != code_kind_tag(*state.codes))) {
        throw DimensionError("checkpoint code bank does not match the configured mode");
    }
    auto params = state.model.params();
    for (std::size_t i = 0; i < params.size(); ++i) {
        for (const Matrix& m : {std::cref(loaded[i]), std::cref(loaded[params.size() + i])}) {
            if (!m.same_shape(*params[i])) {
                throw DimensionError("checkpoint matrix " + std::to_string(i) + " has shape " + m.shape_str() +
                                     ", model expects " + params[i]->shape_str());
            }
        }
    }
    if (raw.has_codes && !loaded.back().same_shape(state.codes->weights())) {
        throw DimensionError("checkpoint code bank " + loaded.back().shape_str() + " vs configured " +
                             state.codes->weights().shape_str());
    }

    // Everything validated: commit.
    for (std::size_t i = 0; i < params.size(); ++i) *params[i] = loaded[i];
    state.opt.set_buffers(std::vector<Matrix>(loaded.begin() + static_cast<std::ptrdiff_t>(params.size()),
                                              loaded.begin() + static_cast<std::ptrdiff_t>(2 * params.size())));
    if (raw.has_codes) {
        if (raw.kind == 0) {
            state.codes = CodeBank(CodeKind::hadamard_fixed, loaded.back());
        } else {
            state.codes = CodeBank(CodeKind::learnable, loaded.back(), static_cast<CodeActivation>(raw.act), raw.xi);
        }
    }
    state.epoch = raw.epoch;
    state.rng.set_state(raw.rng);
    ++state.model.version;
}

// ------------------------------------------------------------------ training

namespace {

void append_line(const std::filesystem::path& path, const std::string& line) {
    std::ofstream os(path, std::ios::app);
    if (!os) throw FileError("cannot append to '" + path.string() + "'");
    os << line << '\n';
}

} // namespace

TrainResult train(const TrainConfig& cfg, const Dataset& train_set, const Dataset& test_set,
                  const std::optional<std::filesystem::path>& resume, const TrainHooks& hooks) {
    const std::size_t k = train_set.num_classes;
    cfg.validate(k);
    if (train_set.size() == 0) throw ConfigError("training set is empty");
    if (test_set.size() > 0 && test_set.dim() != train_set.dim()) {
        throw ConfigError("test features have width " + std::to_string(test_set.dim()) + ", training features " +
                          std::to_string(train_set.dim()));
    }
    if (cfg.hp.batch_size > train_set.size()) {
        throw ConfigError("batch_size " + std::to_string(cfg.hp.batch_size) + " exceeds training set size " +
                          std::to_string(train_set.size()));
    }

    TrainState st = init_state(cfg, train_set.dim(), k);
    if (resume) load_checkpoint(st, *resume);

    const bool write = !cfg.out_dir.empty();
    if (write) std::filesystem::create_directories(cfg.out_dir);
    const auto metrics_path = cfg.out_dir / "metrics.jsonl";
    std::filesystem::path last_checkpoint = resume.value_or(std::filesystem::path{});

    auto export_corr = [&](std::size_t epoch) {
        if (write && cfg.export_corr && st.codes) {
            export_code_correlation(*st.codes, cfg.out_dir / ("corr_epoch" + std::to_string(epoch) + ".csv"));
        }
    };
    if (st.epoch == 0) export_corr(0);

    const double margin = cfg.hp.margin(cfg.imbalanced);
    const bool regularized = cfg.mode != TrainMode::baseline;
    const BatchPlan plan{cfg.hp.batch_size, cfg.hp.seed, false};

    TrainResult result;
    for (std::size_t e = st.epoch; e < cfg.hp.epochs; ++e) {
        const auto t0 = std::chrono::steady_clock::now();
        EpochMetrics m;
        m.epoch = e + 1;
        const auto plan_batches = batches(train_set.size(), plan, e);
        for (const auto& idx : plan_batches) {
            const Matrix xb = train_set.x.gather_rows(idx);
            std::vector<std::size_t> yb;
            yb.reserve(idx.size());
            for (std::size_t i : idx) yb.push_back(train_set.y[i]);

            const ForwardResult fwd = forward(st.model, xb, regularized);
            LossParts parts;
            parts.ce = cross_entropy(fwd.logits, yb);
            if (regularized) {
                const Matrix s = st.codes->activate();
                parts.mse = mse_codes(fwd.v, s, yb);
                if (cfg.mode == TrainMode::ltc) {
                    parts.triplet = triplet_global(fwd.v, s, yb, margin);
                    parts.corr = corr_consistency(s);
                }
            }
            LossBundle b = compose_objective(cfg.mode, parts, cfg.hp);
            if (!std::isfinite(b.total)) {
                throw DivergenceError("non-finite loss at epoch " + std::to_string(e + 1), last_checkpoint);
            }
            const auto grads = backward(st.model, fwd.cache, b.grad_logits, b.grad_v);
            st.opt.step(st.model, grads, e);
            if (cfg.mode == TrainMode::ltc) {
                st.codes->update(st.codes->ste_backward(b.grad_s, cfg.hp.ste), st.opt.code_lr(e));
            }
            m.ce += b.ce;
            m.mse += b.mse;
            m.triplet += b.triplet;
            m.corr += b.corr;
            m.total += b.total;
            if (hooks.on_batch) hooks.on_batch(BatchRecord{e, std::move(b)});
        }
        const auto nb = static_cast<double>(plan_batches.size());
        m.ce /= nb;
        m.mse /= nb;
        m.triplet /= nb;
        m.corr /= nb;
        m.total /= nb;
        st.epoch = e + 1;

        const bool last = st.epoch == cfg.hp.epochs;
        if (st.epoch % cfg.eval_every == 0 || last) {
            if (test_set.size() > 0) {
                const Accuracy acc = evaluate(st.model, test_set);
                m.top1 = acc.top1;
                m.top5 = acc.top5;
            }
            if (st.codes) m.code_corr = mean_offdiag_abs(code_correlation(st.codes->activate()));
            if (cfg.record_time) {
                m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            }
            if (write) append_line(metrics_path, to_json_line(m));
            export_corr(st.epoch);
            if (hooks.on_epoch) hooks.on_epoch(m);
            result.metrics.push_back(m);
        }
        if (write && (last || (cfg.checkpoint_every > 0 && st.epoch % cfg.checkpoint_every == 0))) {
            last_checkpoint = cfg.out_dir / (last ? std::string("final.ltck")
                                                  : "ckpt_epoch" + std::to_string(st.epoch) + ".ltck");
            save_checkpoint(st, last_checkpoint);
        }
    }
    result.model = std::move(st.model);
    result.codes = std::move(st.codes);
    return result;
}

// ---------------------------------------------------------------- evaluation

namespace {

struct Hits {
    std::size_t top1 = 0;
    std::size_t top5 = 0;
};

Hits count_hits(const Matrix& logits, std::span<const std::size_t> labels) {
    if (labels.size() != logits.rows()) throw DimensionError("label count does not match logits");
    const std::size_t k = logits.cols();
    const std::size_t top = std::min<std::size_t>(5, k);
    Hits h;
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const std::size_t y = labels[i];
        if (y >= k) throw DomainError("label out of range in evaluation");
        const double target = logits(i, y);
        // Position of the true class in a descending sort with low-index ties.
        std::size_t rank = 0;
        for (std::size_t c = 0; c < k; ++c) {
            const double v = logits(i, c);
            if (v > target || (v == target && c < y)) ++rank;
        }
        h.top1 += rank == 0;
        h.top5 += rank < top;
    }
    return h;
}

} // namespace

Accuracy accuracy_from_logits(const Matrix& logits, std::span<const std::size_t> labels) {
    const Hits h = count_hits(logits, labels);
    const auto n = static_cast<double>(logits.rows());
    return {static_cast<double>(h.top1) / n, static_cast<double>(h.top5) / n};
}

Accuracy evaluate(const ModelParams& model, const Dataset& ds) {
    if (ds.size() == 0) return {};
    Hits total;
    for (std::size_t start = 0; start < ds.size(); start += kEvalChunk) {
        const std::size_t stop = std::min(ds.size(), start + kEvalChunk);
        std::vector<std::size_t> idx(stop - start);
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = start + i;
        const ForwardResult fwd = forward(model, ds.x.gather_rows(idx), false);
        const Hits h = count_hits(fwd.logits, std::span(ds.y).subspan(start, stop - start));
        total.top1 += h.top1;
        total.top5 += h.top5;
    }
    const auto n = static_cast<double>(ds.size());
    return {static_cast<double>(total.top1) / n, static_cast<double>(total.top5) / n};
}

RetrievalReport recall_at_k(const Matrix& embeddings, std::span<const std::size_t> labels,
                            const std::vector<std::size_t>& ks) {
    const std::size_t n = embeddings.rows();
    if (labels.size() != n) throw DimensionError("label count does not match embeddings");
    const Matrix e = normalize_rows(embeddings);
    std::size_t k_classes = 0;
    for (std::size_t y : labels) k_classes = std::max(k_classes, y + 1);
    const auto counts = count_classes(labels, k_classes);

    // rank[i] = number of candidates ranked above the best same-class match.
    std::vector<std::size_t> rank(n, 0);
    std::vector<char> valid(n, 0);
    const auto ni = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 16)
    for (std::int64_t qi = 0; qi < ni; ++qi) {
        const auto q = static_cast<std::size_t>(qi);
        if (counts[labels[q]] < 2) continue;
        valid[q] = 1;
        auto eq = e.row(q);
        std::vector<double> sim(n);
        for (std::size_t j = 0; j < n; ++j) {
            auto ej = e.row(j);
            double s = 0.0;
            for (std::size_t d = 0; d < ej.size(); ++d) s += eq[d] * ej[d];
            sim[j] = s;
        }
        std::size_t best = n;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == q || labels[j] != labels[q]) continue;
            if (best == n || sim[j] > sim[best]) best = j;
        }
        std::size_t r = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == q) continue;
            if (sim[j] > sim[best] || (sim[j] == sim[best] && j < best)) ++r;
        }
        rank[q] = r;
    }
    RetrievalReport rep;
    for (std::size_t q = 0; q < n; ++q) {
        if (valid[q]) ++rep.queries;
        else ++rep.skipped;
    }
    for (std::size_t kk : ks) {
        std::size_t hits = 0;
        for (std::size_t q = 0; q < n; ++q)
            if (valid[q] && rank[q] < kk) ++hits;
        rep.recall_at[kk] = rep.queries ? static_cast<double>(hits) / static_cast<double>(rep.queries) : 0.0;
    }
    return rep;
}

RetrievalReport retrieval_eval(const ModelParams& model, const Dataset& ds, const std::vector<std::size_t>& ks) {
    const ForwardResult fwd = forward(model, ds.x, false);
    return recall_at_k(fwd.z, ds.y, ks);
}

void export_code_correlation(const CodeBank& bank, const std::filesystem::path& path) {
    const Matrix c = code_correlation(bank.activate());
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw FileError("cannot open '" + path.string() + "' for writing");
    char buf[32];
    for (std::size_t r = 0; r < c.rows(); ++r) {
        for (std::size_t col = 0; col < c.cols(); ++col) {
            std::snprintf(buf, sizeof buf, "%.6f", c(r, col));
            os << (col ? "," : "") << buf;
        }
        os << '\n';
    }
    if (!os) throw FileError("write failed for '" + path.string() + "'");
}

Matrix load_correlation_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw FileError("cannot open '" + path.string() + "'");
    std::vector<double> values;
    std::size_t rows = 0, cols = 0;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t c = 0;
        while (std::getline(ss, cell, ',')) {
            values.push_back(std::stod(cell));
            ++c;
        }
        if (rows == 0) cols = c;
        else if (c != cols) throw FormatError("ragged correlation CSV '" + path.string() + "'");
        ++rows;
    }
    return Matrix(rows, cols, std::move(values));
}

} // namespace ltc
