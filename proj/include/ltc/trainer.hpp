#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ltc/codes.hpp"
#include "ltc/data.hpp"
#include "ltc/error.hpp"
#include "ltc/hyperparams.hpp"
#include "ltc/losses.hpp"
#include "ltc/network.hpp"
#include "ltc/rng.hpp"

namespace ltc {

struct TrainConfig {
    TrainMode mode = TrainMode::ltc;
    Hyperparams hp;
    std::vector<std::size_t> feature_widths{256, 128};
    std::size_t semantic_hidden = 256;
    std::size_t eval_every = 1;
    std::size_t checkpoint_every = 0;  // 0 = only the final checkpoint
    std::filesystem::path out_dir;     // empty = no files written
    bool export_corr = true;           // corr_epoch{E}.csv at eval cadence
    bool record_time = false;          // wall_seconds stays 0 unless set
    // Imbalanced training data switches the default margin to L/2.
    bool imbalanced = false;

    // Throws ConfigError on inconsistent settings.
    void validate(std::size_t num_classes) const;
};

struct EpochMetrics {
    std::size_t epoch = 0;  // 1-based count of completed epochs
    double ce = 0.0;
    double mse = 0.0;
    double triplet = 0.0;
    double corr = 0.0;
    double total = 0.0;
    double top1 = 0.0;
    double top5 = 0.0;
    double code_corr = 0.0;
    double wall_seconds = 0.0;

    friend bool operator==(const EpochMetrics&, const EpochMetrics&) = default;
};

std::string to_json_line(const EpochMetrics& m);

struct TrainState {
    TrainMode mode = TrainMode::baseline;
    ModelParams model;
    Optimizer opt;
    std::optional<CodeBank> codes;
    std::size_t epoch = 0;  // completed epochs
    Rng rng;
};

// Fresh state: model, optimizer and (per mode) the code bank.
TrainState init_state(const TrainConfig& cfg, std::size_t input_dim, std::size_t num_classes);

// Little-endian "LTCK" file: u32 version, u32 layer count, u32 feature
// layers, u32 semantic layers, u32 mode, u32 epoch, 4×u64 RNG state,
// u32 has_codes [u32 code kind, u32 activation, f64 xi], u32 matrix count,
// then (u32 rows, u32 cols, f64 data) for every parameter, every momentum
// buffer and finally the code matrix W.
void save_checkpoint(const TrainState& state, const std::filesystem::path& path);
// Loads into an existing state after validating every shape; the state is
// untouched when anything fails.
void load_checkpoint(TrainState& state, const std::filesystem::path& path);
// Rebuilds the network alone from a checkpoint's stored shapes.
ModelParams read_checkpoint_model(const std::filesystem::path& path);

struct BatchRecord {
    std::size_t epoch = 0;
    LossBundle bundle;
};

class DivergenceError : public NumericError {
public:
    DivergenceError(const std::string& what, std::filesystem::path last_checkpoint)
        : NumericError(what), last_checkpoint_(std::move(last_checkpoint)) {}
    const std::filesystem::path& last_checkpoint() const noexcept { return last_checkpoint_; }

private:
    std::filesystem::path last_checkpoint_;
};

struct TrainResult {
    ModelParams model;
    std::optional<CodeBank> codes;
    std::vector<EpochMetrics> metrics;
};

struct TrainHooks {
    std::function<void(const BatchRecord&)> on_batch;
    std::function<void(const EpochMetrics&)> on_epoch;
};

// Runs epochs [resume epoch, hp.epochs). With out_dir set, appends to
// metrics.jsonl, writes corr_epoch{E}.csv and checkpoints.
TrainResult train(const TrainConfig& cfg, const Dataset& train_set, const Dataset& test_set,
                  const std::optional<std::filesystem::path>& resume = std::nullopt,
                  const TrainHooks& hooks = {});

struct Accuracy {
    double top1 = 0.0;
    double top5 = 0.0;
};

// Classification through Φ_c ∘ Φ_f only. Top-5 falls back to top-min(5, K).
Accuracy evaluate(const ModelParams& model, const Dataset& ds);
Accuracy accuracy_from_logits(const Matrix& logits, std::span<const std::size_t> labels);

struct RetrievalReport {
    std::map<std::size_t, double> recall_at;
    std::size_t queries = 0;
    std::size_t skipped = 0;  // queries whose class has no other member
};

// Cosine similarity on L2-normalized Φ_f features, query excluded.
RetrievalReport retrieval_eval(const ModelParams& model, const Dataset& ds,
                               const std::vector<std::size_t>& ks = {1, 2, 4, 8});
RetrievalReport recall_at_k(const Matrix& embeddings, std::span<const std::size_t> labels,
                            const std::vector<std::size_t>& ks);

// K×K CSV of s_k·s_j / L with six decimals.
void export_code_correlation(const CodeBank& bank, const std::filesystem::path& path);
Matrix load_correlation_csv(const std::filesystem::path& path);

} // namespace ltc
