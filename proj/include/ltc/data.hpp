#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "ltc/matrix.hpp"
#include "ltc/rng.hpp"

namespace ltc {

struct Dataset {
    Matrix x;                        // N×D
    std::vector<std::size_t> y;      // N labels in [0, K)
    std::size_t num_classes = 0;     // K
    std::vector<std::size_t> class_counts;
    std::vector<std::size_t> superclass;  // per class; empty when unknown

    std::size_t size() const noexcept { return y.size(); }
    std::size_t dim() const noexcept { return x.cols(); }
    double imbalance_ratio() const;  // max n_k / min n_k over non-empty classes

    Dataset subset(std::span<const std::size_t> idx) const;
};

std::vector<std::size_t> count_classes(std::span<const std::size_t> y, std::size_t num_classes);

struct BlobSpec {
    std::size_t classes = 8;
    std::size_t dim = 32;
    std::size_t groups = 2;
    std::size_t per_class = 50;
    double sigma_within = 1.0;  // sample spread around its class center
    double sigma_class = 1.0;   // class-center spread around its group center
    double sigma_group = 4.0;   // group-center spread around the origin
};

// Class centers with a group (superclass) structure. Classes c with the same
// c / (K / G) share a group.
struct BlobCenters {
    Matrix group_centers;  // G×D
    Matrix class_centers;  // K×D
    std::vector<std::size_t> superclass;
};

BlobCenters make_blob_centers(const BlobSpec& spec, Rng& rng);
// per_class samples of N(center, sigma_within²·I) per class, class-major order.
Dataset sample_blobs(const BlobCenters& centers, std::size_t per_class, double sigma_within, Rng& rng);
// Centers then samples from the same generator.
Dataset make_blobs(const BlobSpec& spec, Rng& rng);

// Keeps round(n_max·ρ^(-k/(K-1))) samples of class k, drawn without
// replacement, in original order. Requires a balanced input.
Dataset long_tail_subsample(const Dataset& ds, double ratio, Rng& rng);
std::vector<std::size_t> long_tail_counts(std::size_t n_max, std::size_t classes, double ratio);

// Classes [0, first) go to the first set; the rest are relabeled from 0.
std::pair<Dataset, Dataset> split_by_class(const Dataset& ds, std::size_t first);

// Big-endian IDX: images 0x00000803 (N, rows, cols, u8), labels 0x00000801.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);
// Inverse of load_idx for pixels in [0, 1] (rounded to u8).
void write_idx(const Dataset& ds, std::size_t rows, std::size_t cols,
               const std::filesystem::path& images, const std::filesystem::path& labels);

// Header `label,f0,...,f{D-1}`, one sample per line, features printed with
// round-trip precision.
void save_csv(const Dataset& ds, const std::filesystem::path& path);
Dataset load_csv(const std::filesystem::path& path);

struct BatchPlan {
    std::size_t batch_size = 16;
    std::uint64_t seed = 0;
    bool drop_last = false;
};

// Shuffle of [0, n) seeded by (seed, epoch), cut into consecutive batches.
std::vector<std::vector<std::size_t>> batches(std::size_t n, const BatchPlan& plan, std::size_t epoch);

} // namespace ltc
