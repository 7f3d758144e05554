// Command-line front end: code banks, synthetic data, gradient checks,
// training and evaluation. Exit codes: 0 ok, 1 failed check, 2 usage or
// configuration error, 3 numeric divergence.

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ltc/codes.hpp"
#include "ltc/config.hpp"
#include "ltc/data.hpp"
#include "ltc/error.hpp"
#include "ltc/selfcheck.hpp"
#include "ltc/trainer.hpp"

namespace {

enum ExitCode { kOk = 0, kCheckFailed = 1, kUsage = 2, kDiverged = 3 };

enum class LogLevel { quiet, info, debug };

LogLevel log_level() {
    const char* env = std::getenv("LTC_LOG");
    if (!env) return LogLevel::info;
    const std::string v = env;
    if (v == "quiet") return LogLevel::quiet;
    if (v == "debug") return LogLevel::debug;
    return LogLevel::info;
}

// Shortest text that parses back to the same double, matching metrics.jsonl.
std::string num(double v) {
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

void print_summary(const ltc::CodeBank& bank) {
    const ltc::CodeSummary s = ltc::summarize_codes(bank.activate());
    const auto [lo, hi] = std::minmax_element(s.plus_ones.begin(), s.plus_ones.end());
    const char* kind = bank.kind() == ltc::CodeKind::hadamard_fixed ? "hadamard"
                       : bank.activation() == ltc::CodeActivation::sign ? "learnable_sign"
                                                                         : "learnable_tanh";
    std::printf("property,value\n");
    std::printf("kind,%s\n", kind);
    std::printf("classes,%zu\n", bank.num_classes());
    std::printf("length,%zu\n", bank.code_length());
    std::printf("plus_ones_min,%zu\n", *lo);
    std::printf("plus_ones_max,%zu\n", *hi);
    std::printf("hamming_min,%zu\n", s.min_hamming);
    std::printf("hamming_max,%zu\n", s.max_hamming);
    std::printf("corr_min,%.6f\n", s.min_corr);
    std::printf("corr_max,%.6f\n", s.max_corr);
    std::printf("mean_abs_corr,%.6f\n", s.mean_abs_corr);
}

void print_pairs(const ltc::CodeBank& bank) {
    const ltc::Matrix s = bank.activate();
    const ltc::Matrix c = ltc::code_correlation(s);
    std::printf("a,b,hamming,corr\n");
    for (std::size_t a = 0; a < s.rows(); ++a)
        for (std::size_t b = a + 1; b < s.rows(); ++b) {
            std::size_t d = 0;
            for (std::size_t l = 0; l < s.cols(); ++l) d += (s(a, l) >= 0) != (s(b, l) >= 0);
            std::printf("%zu,%zu,%zu,%.6f\n", a, b, d, c(a, b));
        }
}

struct GenCodesArgs {
    std::string mode = "hadamard";
    std::size_t classes = 0;
    std::size_t length = 0;
    std::uint64_t seed = 0;
    std::string activation = "sign";
    double xi = 1.0;
    std::string out;
};

int gen_codes(const GenCodesArgs& a) {
    ltc::Rng rng = ltc::Rng::derive(a.seed, 6);
    ltc::CodeBank bank = [&] {
        if (a.mode == "hadamard") {
            if (!ltc::is_power_of_two(a.length)) {
                throw ltc::ConfigError("Hadamard length must be a power of two, got " + std::to_string(a.length));
            }
            return ltc::select_hadamard_codes(a.length, a.classes, rng);
        }
        ltc::CodeBank b = ltc::init_learnable_codes(a.classes, a.length, rng);
        if (a.activation == "tanh") b.set_activation(ltc::CodeActivation::tanh_scaled, a.xi);
        return b;
    }();
    ltc::save_code_bank(bank, a.out);
    print_summary(bank);
    return kOk;
}

struct MakeDataArgs {
    std::string kind = "blobs";
    std::size_t classes = 8;
    std::size_t dim = 32;
    std::size_t groups = 1;
    std::size_t per_class = 100;
    std::size_t test_per_class = 0;
    double ratio = 1.0;
    double sigma_within = 1.0, sigma_class = 1.0, sigma_group = 4.0;
    std::uint64_t seed = 0;
    std::string out, test_out;
};

int make_data(const MakeDataArgs& a) {
    ltc::RunConfig cfg;
    cfg.data.kind = a.kind == "longtail" ? ltc::DataKind::longtail : ltc::DataKind::blobs;
    cfg.data.blobs.classes = a.classes;
    cfg.data.blobs.dim = a.dim;
    cfg.data.blobs.groups = a.groups;
    cfg.data.blobs.per_class = a.per_class;
    cfg.data.blobs.sigma_within = a.sigma_within;
    cfg.data.blobs.sigma_class = a.sigma_class;
    cfg.data.blobs.sigma_group = a.sigma_group;
    cfg.data.imbalance_ratio = a.ratio;
    cfg.data.test_per_class = a.test_out.empty() ? 0 : std::max<std::size_t>(a.test_per_class, 1);
    cfg.train.hp.seed = a.seed;
    const ltc::DataPair d = ltc::build_datasets(cfg);

    ltc::save_csv(d.train, a.out);
    if (!a.test_out.empty()) ltc::save_csv(d.test, a.test_out);
    std::printf("class,count\n");
    for (std::size_t k = 0; k < d.train.class_counts.size(); ++k) {
        std::printf("%zu,%zu\n", k, d.train.class_counts[k]);
    }
    std::printf("ratio,%.1f\n", d.train.imbalance_ratio());
    return kOk;
}

struct TrainArgs {
    std::string config;
    std::vector<std::string> sets;
    std::string mode, out;
    std::size_t length = 0, epochs = 0;
    std::optional<std::uint64_t> seed;
    std::string resume;
};

int train_cmd(const TrainArgs& a, LogLevel level) {
    ltc::RunConfig cfg;
    if (!a.config.empty()) ltc::apply_config_file(cfg, a.config);
    for (const std::string& kv : a.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ltc::ConfigError("--set expects key=value, got '" + kv + "'");
        ltc::apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!a.mode.empty()) ltc::apply_setting(cfg, "mode", a.mode);
    if (a.length) cfg.train.hp.code_length = a.length;
    if (a.epochs) cfg.train.hp.epochs = a.epochs;
    if (a.seed) cfg.train.hp.seed = *a.seed;
    if (!a.out.empty()) cfg.train.out_dir = a.out;
    if (cfg.train.out_dir.empty()) cfg.train.out_dir = "ltc_run";

    const ltc::DataPair data = ltc::build_datasets(cfg);
    cfg.train.validate(data.train.num_classes);

    std::filesystem::create_directories(cfg.train.out_dir);
    // A fresh run starts a fresh metric stream; a resumed one appends.
    if (a.resume.empty()) std::filesystem::remove(cfg.train.out_dir / "metrics.jsonl");
    {
        std::ofstream os(cfg.train.out_dir / "config.cfg", std::ios::trunc);
        os << ltc::dump_config(cfg);
        if (!os) throw ltc::FileError("cannot write resolved config to '" + cfg.train.out_dir.string() + "'");
    }

    ltc::TrainHooks hooks;
    if (level != LogLevel::quiet) {
        hooks.on_epoch = [](const ltc::EpochMetrics& m) {
            std::fprintf(stderr, "epoch %zu  loss %.5f  ce %.5f  top1 %.4f  code_corr %.4f\n", m.epoch, m.total, m.ce,
                         m.top1, m.code_corr);
        };
    }
    if (level == LogLevel::debug) {
        hooks.on_batch = [](const ltc::BatchRecord& r) {
            std::fprintf(stderr, "  batch  total %.6f  ce %.6f  mse %.6f  triplet %.6f  corr %.6f\n", r.bundle.total,
                         r.bundle.ce, r.bundle.mse, r.bundle.triplet, r.bundle.corr);
        };
    }
    std::optional<std::filesystem::path> resume;
    if (!a.resume.empty()) resume = a.resume;
    const ltc::TrainResult r = ltc::train(cfg.train, data.train, data.test, resume, hooks);
    if (!r.metrics.empty()) {
        std::printf("top1 %s\ntop5 %s\n", num(r.metrics.back().top1).c_str(), num(r.metrics.back().top5).c_str());
    }
    return kOk;
}

int gradcheck_cmd(std::uint64_t seed, bool perturb, std::size_t instances) {
    ltc::SuiteOptions opts;
    opts.seed = seed;
    opts.perturb = perturb;
    opts.instances = instances;
    const auto rows = ltc::gradient_suite(opts);
    std::printf("%-8s %9s %8s %13s  %s\n", "check", "instances", "redrawn", "max_rel_err", "status");
    std::vector<std::string> failed;
    for (const auto& row : rows) {
        std::printf("%-8s %9zu %8zu %13.3e  %s\n", row.name.c_str(), row.instances, row.redrawn, row.max_rel_err,
                    row.passed ? "pass" : "FAIL");
        if (!row.passed) failed.push_back(row.name);
    }
    if (failed.empty()) return kOk;
    std::string list;
    for (const auto& f : failed) list += (list.empty() ? "" : ", ") + f;
    std::fprintf(stderr, "gradient check failed: %s\n", list.c_str());
    return kCheckFailed;
}

int eval_cmd(const std::string& checkpoint, const std::string& data_path, bool retrieval) {
    const ltc::ModelParams model = ltc::read_checkpoint_model(checkpoint);
    const ltc::Dataset ds = ltc::load_csv(data_path);
    const std::size_t input = model.feature.empty() ? model.classifier.in() : model.feature.front().in();
    if (ds.dim() != input) {
        throw ltc::ConfigError("data '" + data_path + "' has " + std::to_string(ds.dim()) +
                               " features, checkpoint expects " + std::to_string(input));
    }
    if (ds.num_classes > model.classifier.out()) {
        throw ltc::ConfigError("data '" + data_path + "' has labels up to " + std::to_string(ds.num_classes - 1) +
                               ", checkpoint classifies " + std::to_string(model.classifier.out()) + " classes");
    }
    const ltc::Accuracy acc = ltc::evaluate(model, ds);
    std::printf("top1 %s\ntop5 %s\n", num(acc.top1).c_str(), num(acc.top5).c_str());
    if (retrieval) {
        const ltc::RetrievalReport rep = ltc::retrieval_eval(model, ds);
        for (const auto& [k, v] : rep.recall_at) std::printf("recall@%zu %s\n", k, num(v).c_str());
        if (rep.skipped) std::printf("skipped_queries %zu\n", rep.skipped);
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Learnable and Hadamard target codes for supervised representation learning"};
    app.require_subcommand(1);
    const LogLevel level = log_level();

    GenCodesArgs gc;
    auto* gen = app.add_subcommand("gen-codes", "Generate a target-code bank file");
    gen->add_option("--mode", gc.mode)->check(CLI::IsMember({"hadamard", "learnable"}));
    gen->add_option("--classes", gc.classes)->required();
    gen->add_option("--length", gc.length)->required();
    gen->add_option("--seed", gc.seed);
    gen->add_option("--activation", gc.activation, "learnable banks only")->check(CLI::IsMember({"sign", "tanh"}));
    gen->add_option("--xi", gc.xi, "tanh steepness");
    gen->add_option("--out", gc.out)->required();

    std::string inspect_path;
    bool inspect_pairs = false;
    auto* inspect = app.add_subcommand("inspect-codes", "Print properties of a code-bank file as CSV");
    inspect->add_option("file", inspect_path)->required();
    inspect->add_flag("--pairs", inspect_pairs, "per-pair Hamming distance and correlation instead");

    MakeDataArgs md;
    auto* mk = app.add_subcommand("make-data", "Write a synthetic Gaussian-blob dataset as CSV");
    mk->add_option("--kind", md.kind)->check(CLI::IsMember({"blobs", "longtail"}));
    mk->add_option("--classes", md.classes);
    mk->add_option("--dim", md.dim);
    mk->add_option("--groups", md.groups, "superclasses sharing a center");
    mk->add_option("--per-class,--nmax", md.per_class, "samples per class (head class size for longtail)");
    mk->add_option("--ratio", md.ratio, "max/min class count for longtail");
    mk->add_option("--sigma-within", md.sigma_within);
    mk->add_option("--sigma-class", md.sigma_class);
    mk->add_option("--sigma-group", md.sigma_group);
    mk->add_option("--seed", md.seed);
    mk->add_option("--out", md.out)->required();
    mk->add_option("--test-out", md.test_out, "also write a balanced test split");
    mk->add_option("--test-per-class", md.test_per_class)->default_val(50);

    TrainArgs ta;
    std::uint64_t train_seed = 0;
    auto* tr = app.add_subcommand("train", "Train a model from a config file plus overrides");
    tr->add_option("--config", ta.config);
    tr->add_option("--set", ta.sets, "key=value override, repeatable");
    tr->add_option("--mode", ta.mode);
    tr->add_option("--length", ta.length, "code length");
    tr->add_option("--epochs", ta.epochs);
    auto* seed_opt = tr->add_option("--seed", train_seed);
    tr->add_option("--out", ta.out, "output directory");
    tr->add_option("--resume", ta.resume, "checkpoint to continue from");

    std::uint64_t gc_seed = 0;
    bool gc_perturb = false;
    std::size_t gc_instances = 20;
    auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of every analytic gradient");
    grad->add_option("--seed", gc_seed);
    grad->add_flag("--perturb", gc_perturb, "corrupt one analytic entry (negative control)");
    grad->add_option("--instances", gc_instances);

    std::string ev_ckpt, ev_data;
    bool ev_retrieval = false;
    auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a CSV dataset");
    ev->add_option("--checkpoint", ev_ckpt)->required();
    ev->add_option("--data", ev_data)->required();
    ev->add_flag("--retrieval", ev_retrieval, "also report Recall@{1,2,4,8}");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }
    if (*seed_opt) ta.seed = train_seed;

    try {
        if (*gen) return gen_codes(gc);
        if (*inspect) {
            const ltc::CodeBank bank = ltc::load_code_bank(inspect_path);
            inspect_pairs ? print_pairs(bank) : print_summary(bank);
            return kOk;
        }
        if (*mk) return make_data(md);
        if (*tr) return train_cmd(ta, level);
        if (*grad) return gradcheck_cmd(gc_seed, gc_perturb, gc_instances);
        if (*ev) return eval_cmd(ev_ckpt, ev_data, ev_retrieval);
    } catch (const ltc::DivergenceError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        if (!e.last_checkpoint().empty()) {
            std::fprintf(stderr, "last checkpoint: %s\n", e.last_checkpoint().string().c_str());
        }
        return kDiverged;
    } catch (const ltc::NumericError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kDiverged;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kUsage;
    }
    return kUsage;
}
