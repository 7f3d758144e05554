#include "ltc/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "ltc/error.hpp"

namespace ltc {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
    throw ConfigError("invalid value '" + value + "' for " + key + " (expected " + expected + ")");
}

double to_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc{} || r.ptr != v.data() + v.size()) bad_value(key, v, "a number");
    return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc{} || r.ptr != v.data() + v.size()) bad_value(key, v, "a non-negative integer");
    return out;
}

std::size_t to_size(const std::string& key, const std::string& v) { return static_cast<std::size_t>(to_u64(key, v)); }

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    bad_value(key, v, "true or false");
}

std::vector<std::size_t> to_list(const std::string& key, const std::string& v) {
    std::vector<std::size_t> out;
    if (v.empty() || v == "none") return out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_size(key, trim(item)));
    return out;
}

std::string fmt(double v) {
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string fmt_list(const std::vector<std::size_t>& v) {
    if (v.empty()) return "none";
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
    return out;
}

std::string_view data_kind_name(DataKind k) {
    switch (k) {
    case DataKind::blobs: return "blobs";
    case DataKind::longtail: return "longtail";
    case DataKind::csv: return "csv";
    case DataKind::idx: return "idx";
    }
    return "?";
}

struct Key {
    const char* name;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

#define LTC_DOUBLE(NAME, FIELD)                                                                  \
    Key { NAME, [](RunConfig& c, const std::string& v) { c.FIELD = to_double(NAME, v); },       \
          [](const RunConfig& c) { return fmt(c.FIELD); } }
#define LTC_SIZE(NAME, FIELD)                                                                    \
    Key { NAME, [](RunConfig& c, const std::string& v) { c.FIELD = to_size(NAME, v); },         \
          [](const RunConfig& c) { return std::to_string(c.FIELD); } }
#define LTC_BOOL(NAME, FIELD)                                                                    \
    Key { NAME, [](RunConfig& c, const std::string& v) { c.FIELD = to_bool(NAME, v); },         \
          [](const RunConfig& c) { return std::string(c.FIELD ? "true" : "false"); } }
#define LTC_PATH(NAME, FIELD)                                                                    \
    Key { NAME, [](RunConfig& c, const std::string& v) { c.FIELD = v; },                        \
          [](const RunConfig& c) { return c.FIELD.string(); } }

const std::vector<Key>& keys() {
    static const std::vector<Key> table = {
        Key{"mode", [](RunConfig& c, const std::string& v) { c.train.mode = parse_mode(v); },
            [](const RunConfig& c) { return std::string(to_string(c.train.mode)); }},
        LTC_DOUBLE("gamma", train.hp.gamma),
        LTC_DOUBLE("lambda", train.hp.lambda),
        LTC_DOUBLE("beta", train.hp.beta),
        Key{"epsilon",
            [](RunConfig& c, const std::string& v) {
                if (v == "auto") c.train.hp.epsilon.reset();
                else c.train.hp.epsilon = to_double("epsilon", v);
            },
            [](const RunConfig& c) { return c.train.hp.epsilon ? fmt(*c.train.hp.epsilon) : std::string("auto"); }},
        LTC_DOUBLE("xi", train.hp.xi),
        LTC_SIZE("code_length", train.hp.code_length),
        LTC_DOUBLE("lr_feature", train.hp.lr_feature),
        LTC_DOUBLE("lr_new", train.hp.lr_new),
        LTC_DOUBLE("lr_codes", train.hp.lr_codes),
        LTC_DOUBLE("momentum", train.hp.momentum),
        LTC_DOUBLE("weight_decay", train.hp.weight_decay),
        LTC_SIZE("epochs", train.hp.epochs),
        LTC_SIZE("batch_size", train.hp.batch_size),
        Key{"decay_epochs", [](RunConfig& c, const std::string& v) { c.train.hp.decay_epochs = to_list("decay_epochs", v); },
            [](const RunConfig& c) { return fmt_list(c.train.hp.decay_epochs); }},
        LTC_DOUBLE("decay_factor", train.hp.decay_factor),
        LTC_BOOL("decay_codes", train.hp.decay_codes),
        Key{"code_activation",
            [](RunConfig& c, const std::string& v) {
                if (v == "sign") c.train.hp.code_activation = CodeActivation::sign;
                else if (v == "tanh") c.train.hp.code_activation = CodeActivation::tanh_scaled;
                else bad_value("code_activation", v, "sign or tanh");
            },
            [](const RunConfig& c) {
                return std::string(c.train.hp.code_activation == CodeActivation::sign ? "sign" : "tanh");
            }},
        Key{"ste",
            [](RunConfig& c, const std::string& v) {
                if (v == "clipped") c.train.hp.ste = SteMode::clipped;
                else if (v == "passthrough") c.train.hp.ste = SteMode::passthrough;
                else bad_value("ste", v, "clipped or passthrough");
            },
            [](const RunConfig& c) { return std::string(c.train.hp.ste == SteMode::clipped ? "clipped" : "passthrough"); }},
        Key{"seed", [](RunConfig& c, const std::string& v) { c.train.hp.seed = to_u64("seed", v); },
            [](const RunConfig& c) { return std::to_string(c.train.hp.seed); }},
        Key{"feature_widths", [](RunConfig& c, const std::string& v) { c.train.feature_widths = to_list("feature_widths", v); },
            [](const RunConfig& c) { return fmt_list(c.train.feature_widths); }},
        LTC_SIZE("semantic_hidden", train.semantic_hidden),
        LTC_SIZE("eval_every", train.eval_every),
        LTC_SIZE("checkpoint_every", train.checkpoint_every),
        LTC_PATH("out_dir", train.out_dir),
        LTC_BOOL("export_corr", train.export_corr),
        LTC_BOOL("record_time", train.record_time),
        Key{"data",
            [](RunConfig& c, const std::string& v) {
                if (v == "blobs") c.data.kind = DataKind::blobs;
                else if (v == "longtail") c.data.kind = DataKind::longtail;
                else if (v == "csv") c.data.kind = DataKind::csv;
                else if (v == "idx") c.data.kind = DataKind::idx;
                else bad_value("data", v, "blobs, longtail, csv or idx");
            },
            [](const RunConfig& c) { return std::string(data_kind_name(c.data.kind)); }},
        LTC_SIZE("classes", data.blobs.classes),
        LTC_SIZE("dim", data.blobs.dim),
        LTC_SIZE("groups", data.blobs.groups),
        LTC_SIZE("per_class", data.blobs.per_class),
        LTC_SIZE("test_per_class", data.test_per_class),
        LTC_DOUBLE("sigma_within", data.blobs.sigma_within),
        LTC_DOUBLE("sigma_class", data.blobs.sigma_class),
        LTC_DOUBLE("sigma_group", data.blobs.sigma_group),
        LTC_DOUBLE("imbalance_ratio", data.imbalance_ratio),
        LTC_PATH("train_csv", data.train_csv),
        LTC_PATH("test_csv", data.test_csv),
        LTC_PATH("train_images", data.train_images),
        LTC_PATH("train_labels", data.train_labels),
        LTC_PATH("test_images", data.test_images),
        LTC_PATH("test_labels", data.test_labels),
    };
    return table;
}

#undef LTC_DOUBLE
#undef LTC_SIZE
#undef LTC_BOOL
#undef LTC_PATH

} // namespace

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
    const auto& table = keys();
    auto it = std::find_if(table.begin(), table.end(), [&](const Key& k) { return key == k.name; });
    if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
    it->set(cfg, value);
}

void apply_config_text(RunConfig& cfg, const std::string& text) {
    std::stringstream ss(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value, got '" + t + "'");
        }
        apply_setting(cfg, trim(std::string_view(t).substr(0, eq)), trim(std::string_view(t).substr(eq + 1)));
    }
}

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config file '" + path.string() + "'");
    std::stringstream ss;
    ss << is.rdbuf();
    apply_config_text(cfg, ss.str());
}

std::string dump_config(const RunConfig& cfg) {
    std::string out;
    for (const Key& k : keys()) out += std::string(k.name) + " = " + k.get(cfg) + "\n";
    return out;
}

DataPair build_datasets(RunConfig& cfg) {
    const std::uint64_t seed = cfg.train.hp.seed;
    DataPair out;
    switch (cfg.data.kind) {
    case DataKind::blobs:
    case DataKind::longtail: {
        if (cfg.data.kind == DataKind::longtail && !(cfg.data.imbalance_ratio >= 1.0)) {
            throw ConfigError("imbalance_ratio must be >= 1");
        }
        Rng center_rng = Rng::derive(seed, 1);
        Rng train_rng = Rng::derive(seed, 2);
        Rng test_rng = Rng::derive(seed, 3);
        try {
            const BlobCenters centers = make_blob_centers(cfg.data.blobs, center_rng);
            out.train = sample_blobs(centers, cfg.data.blobs.per_class, cfg.data.blobs.sigma_within, train_rng);
            if (cfg.data.test_per_class > 0) {
                out.test = sample_blobs(centers, cfg.data.test_per_class, cfg.data.blobs.sigma_within, test_rng);
            }
            if (cfg.data.kind == DataKind::longtail) {
                Rng lt_rng = Rng::derive(seed, 4);
                out.train = long_tail_subsample(out.train, cfg.data.imbalance_ratio, lt_rng);
            }
        } catch (const DomainError& e) {
            throw ConfigError(e.what());
        }
        break;
    }
    case DataKind::csv:
        if (cfg.data.train_csv.empty()) throw ConfigError("data = csv needs train_csv");
        out.train = load_csv(cfg.data.train_csv);
        if (!cfg.data.test_csv.empty()) out.test = load_csv(cfg.data.test_csv);
        break;
    case DataKind::idx:
        if (cfg.data.train_images.empty() || cfg.data.train_labels.empty()) {
            throw ConfigError("data = idx needs train_images and train_labels");
        }
        out.train = load_idx(cfg.data.train_images, cfg.data.train_labels);
        if (!cfg.data.test_images.empty()) out.test = load_idx(cfg.data.test_images, cfg.data.test_labels);
        break;
    }
    // Test labels may not cover every class; align class counts with training.
    if (out.test.size() > 0) {
        const std::size_t k = std::max(out.train.num_classes, out.test.num_classes);
        out.train.num_classes = out.test.num_classes = k;
        out.train.class_counts = count_classes(out.train.y, k);
        out.test.class_counts = count_classes(out.test.y, k);
    }
    cfg.train.imbalanced = out.train.imbalance_ratio() > 1.0;
    return out;
}

} // namespace ltc
