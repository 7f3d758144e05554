#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>

#include "ltc/data.hpp"
#include "ltc/trainer.hpp"

namespace ltc {

enum class DataKind { blobs, longtail, csv, idx };

struct DataSpec {
    DataKind kind = DataKind::blobs;
    BlobSpec blobs;
    std::size_t test_per_class = 50;
    double imbalance_ratio = 1.0;
    std::filesystem::path train_csv, test_csv;
    std::filesystem::path train_images, train_labels, test_images, test_labels;
};

struct RunConfig {
    TrainConfig train;
    DataSpec data;
};

// Flat `key = value` text, one per line, `#` starts a comment. Unknown keys
// and malformed values throw ConfigError.
void apply_config_text(RunConfig& cfg, const std::string& text);
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

// Every key with its resolved value, in a fixed order; parses back to an
// equivalent configuration.
std::string dump_config(const RunConfig& cfg);

struct DataPair {
    Dataset train;
    Dataset test;
};

// Builds train/test sets. Blob kinds derive all randomness from the run seed;
// longtail keeps the test split balanced. Sets cfg.train.imbalanced when the
// training split ends up imbalanced.
DataPair build_datasets(RunConfig& cfg);

} // namespace ltc
