#include "ltc/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "ltc/error.hpp"

namespace ltc {

std::vector<std::size_t> count_classes(std::span<const std::size_t> y, std::size_t num_classes) {
    std::vector<std::size_t> counts(num_classes, 0);
    for (std::size_t label : y) {
        if (label >= num_classes) throw DomainError("label " + std::to_string(label) + " out of range");
        ++counts[label];
    }
    return counts;
}

double Dataset::imbalance_ratio() const {
    std::size_t lo = 0, hi = 0;
    for (std::size_t c : class_counts) {
        if (c == 0) continue;
        lo = lo == 0 ? c : std::min(lo, c);
        hi = std::max(hi, c);
    }
    return lo == 0 ? 0.0 : static_cast<double>(hi) / static_cast<double>(lo);
}

Dataset Dataset::subset(std::span<const std::size_t> idx) const {
    Dataset out;
    out.x = x.gather_rows(idx);
    out.y.reserve(idx.size());
    for (std::size_t i : idx) out.y.push_back(y[i]);
    out.num_classes = num_classes;
    out.class_counts = count_classes(out.y, num_classes);
    out.superclass = superclass;
    return out;
}

BlobCenters make_blob_centers(const BlobSpec& spec, Rng& rng) {
    if (spec.classes == 0 || spec.groups == 0 || spec.classes % spec.groups != 0) {
        throw DomainError("class count " + std::to_string(spec.classes) + " is not divisible by group count " +
                          std::to_string(spec.groups));
    }
    if (spec.dim == 0) throw DomainError("blob dimension must be positive");
    BlobCenters c;
    c.group_centers = Matrix(spec.groups, spec.dim);
    for (double& v : c.group_centers.flat()) v = spec.sigma_group * rng.normal();
    const std::size_t per_group = spec.classes / spec.groups;
    c.class_centers = Matrix(spec.classes, spec.dim);
    for (std::size_t k = 0; k < spec.classes; ++k) {
        const std::size_t g = k / per_group;
        c.superclass.push_back(g);
        for (std::size_t d = 0; d < spec.dim; ++d)
            c.class_centers(k, d) = c.group_centers(g, d) + spec.sigma_class * rng.normal();
    }
    return c;
}

Dataset sample_blobs(const BlobCenters& centers, std::size_t per_class, double sigma_within, Rng& rng) {
    if (per_class == 0) throw DomainError("blobs need at least one sample per class");
    const std::size_t k = centers.class_centers.rows();
    const std::size_t dim = centers.class_centers.cols();
    Dataset ds;
    ds.num_classes = k;
    ds.x = Matrix(k * per_class, dim);
    ds.y.reserve(k * per_class);
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t i = 0; i < per_class; ++i) {
            auto row = ds.x.row(ds.y.size());
            for (std::size_t d = 0; d < dim; ++d) row[d] = centers.class_centers(c, d) + sigma_within * rng.normal();
            ds.y.push_back(c);
        }
    }
    ds.class_counts.assign(k, per_class);
    ds.superclass = centers.superclass;
    return ds;
}

Dataset make_blobs(const BlobSpec& spec, Rng& rng) {
    const BlobCenters c = make_blob_centers(spec, rng);
    return sample_blobs(c, spec.per_class, spec.sigma_within, rng);
}

std::vector<std::size_t> long_tail_counts(std::size_t n_max, std::size_t classes, double ratio) {
    if (!(ratio >= 1.0)) throw DomainError("imbalance ratio must be >= 1");
    std::vector<std::size_t> counts(classes, n_max);
    if (classes < 2) return counts;
    for (std::size_t k = 0; k < classes; ++k) {
        const double e = -static_cast<double>(k) / static_cast<double>(classes - 1);
        counts[k] = static_cast<std::size_t>(std::llround(static_cast<double>(n_max) * std::pow(ratio, e)));
    }
    if (counts.back() == 0) {
        std::size_t need = n_max;
        while (std::llround(static_cast<double>(need) / ratio) == 0) ++need;
        throw DomainError("imbalance ratio " + std::to_string(ratio) + " leaves the last class empty with " +
                          std::to_string(n_max) + " samples per class; need at least " + std::to_string(need));
    }
    return counts;
}

Dataset long_tail_subsample(const Dataset& ds, double ratio, Rng& rng) {
    if (!(ratio >= 1.0)) throw DomainError("imbalance ratio must be >= 1");
    const std::size_t k = ds.num_classes;
    if (k == 0 || ds.class_counts.size() != k) throw DomainError("dataset has no class counts");
    const std::size_t n_max = ds.class_counts.front();
    if (std::any_of(ds.class_counts.begin(), ds.class_counts.end(), [&](std::size_t c) { return c != n_max; })) {
        throw DomainError("long-tail subsampling requires a balanced dataset");
    }
    const auto target = long_tail_counts(n_max, k, ratio);
    std::vector<std::vector<std::size_t>> by_class(k);
    for (std::size_t i = 0; i < ds.size(); ++i) by_class[ds.y[i]].push_back(i);
    std::vector<std::size_t> keep;
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t pick : rng.sample_without_replacement(by_class[c].size(), target[c]))
            keep.push_back(by_class[c][pick]);
    }
    std::sort(keep.begin(), keep.end());
    return ds.subset(keep);
}

std::pair<Dataset, Dataset> split_by_class(const Dataset& ds, std::size_t first) {
    if (first == 0 || first >= ds.num_classes) throw DomainError("class split point must be inside (0, K)");
    std::vector<std::size_t> a, b;
    for (std::size_t i = 0; i < ds.size(); ++i) (ds.y[i] < first ? a : b).push_back(i);
    Dataset lo = ds.subset(a);
    lo.num_classes = first;
    lo.class_counts.resize(first);
    Dataset hi = ds.subset(b);
    for (auto& label : hi.y) label -= first;
    hi.num_classes = ds.num_classes - first;
    hi.class_counts = count_classes(hi.y, hi.num_classes);
    if (!ds.superclass.empty()) {
        lo.superclass.assign(ds.superclass.begin(), ds.superclass.begin() + static_cast<std::ptrdiff_t>(first));
        hi.superclass.assign(ds.superclass.begin() + static_cast<std::ptrdiff_t>(first), ds.superclass.end());
    }
    return {std::move(lo), std::move(hi)};
}

namespace {

std::uint32_t read_be32(std::istream& is, const std::filesystem::path& path) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw FormatError("truncated IDX header in '" + path.string() + "'");
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

void write_be32(std::ostream& os, std::uint32_t v) {
    const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                       static_cast<char>(v)};
    os.write(b, 4);
}

std::string hex(std::uint32_t v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%08x", v);
    return buf;
}

std::vector<unsigned char> read_payload(std::istream& is, std::size_t n, const std::filesystem::path& path) {
    std::vector<unsigned char> buf(n);
    is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is.gcount()) != n) {
        throw FormatError("truncated IDX payload in '" + path.string() + "': expected " + std::to_string(n) +
                          " bytes, got " + std::to_string(is.gcount()));
    }
    return buf;
}

} // namespace

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
    std::ifstream img(images, std::ios::binary);
    if (!img) throw FileError("cannot open '" + images.string() + "'");
    std::ifstream lab(labels, std::ios::binary);
    if (!lab) throw FileError("cannot open '" + labels.string() + "'");

    const auto img_magic = read_be32(img, images);
    if (img_magic != 0x00000803) throw FormatError("bad IDX image magic " + hex(img_magic) + " in '" + images.string() + "'");
    const std::size_t n = read_be32(img, images);
    const std::size_t rows = read_be32(img, images);
    const std::size_t cols = read_be32(img, images);
    const auto lab_magic = read_be32(lab, labels);
    if (lab_magic != 0x00000801) throw FormatError("bad IDX label magic " + hex(lab_magic) + " in '" + labels.string() + "'");
    const std::size_t n_labels = read_be32(lab, labels);
    if (n_labels != n) {
        throw FormatError("IDX count mismatch: " + std::to_string(n) + " images vs " + std::to_string(n_labels) +
                          " labels");
    }
    if (n * rows * cols > (std::size_t{1} << 34)) throw FormatError("IDX dimensions too large");

    const auto pixels = read_payload(img, n * rows * cols, images);
    const auto raw_labels = read_payload(lab, n, labels);

    Dataset ds;
    ds.x = Matrix(n, rows * cols);
    auto flat = ds.x.flat();
    for (std::size_t i = 0; i < pixels.size(); ++i) flat[i] = pixels[i] / 255.0;
    ds.y.assign(raw_labels.begin(), raw_labels.end());
    // Class count comes from the largest label; unused labels count zero.
    ds.num_classes = ds.y.empty() ? 0 : *std::max_element(ds.y.begin(), ds.y.end()) + 1;
    ds.class_counts = count_classes(ds.y, ds.num_classes);
    return ds;
}

void write_idx(const Dataset& ds, std::size_t rows, std::size_t cols, const std::filesystem::path& images,
               const std::filesystem::path& labels) {
    if (rows * cols != ds.dim()) throw DimensionError("IDX image shape does not match feature width");
    std::ofstream img(images, std::ios::binary | std::ios::trunc);
    std::ofstream lab(labels, std::ios::binary | std::ios::trunc);
    if (!img || !lab) throw FileError("cannot open IDX output files");
    write_be32(img, 0x00000803);
    write_be32(img, static_cast<std::uint32_t>(ds.size()));
    write_be32(img, static_cast<std::uint32_t>(rows));
    write_be32(img, static_cast<std::uint32_t>(cols));
    for (double v : ds.x.flat()) {
        const long px = std::lround(std::clamp(v, 0.0, 1.0) * 255.0);
        img.put(static_cast<char>(px));
    }
    write_be32(lab, 0x00000801);
    write_be32(lab, static_cast<std::uint32_t>(ds.size()));
    for (std::size_t label : ds.y) {
        if (label > 255) throw DomainError("IDX labels must fit in a byte");
        lab.put(static_cast<char>(label));
    }
}

void save_csv(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw FileError("cannot open '" + path.string() + "' for writing");
    os << "label";
    for (std::size_t d = 0; d < ds.dim(); ++d) os << ",f" << d;
    os << '\n';
    char buf[32];
    for (std::size_t i = 0; i < ds.size(); ++i) {
        os << ds.y[i];
        for (double v : ds.x.row(i)) {
            auto res = std::to_chars(buf, buf + sizeof buf, v);
            os << ',' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
        }
        os << '\n';
    }
    if (!os) throw FileError("write failed for '" + path.string() + "'");
}

Dataset load_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw FileError("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(is, line) || line.rfind("label", 0) != 0) {
        throw FormatError("'" + path.string() + "' is missing the label,f0,... header");
    }
    const auto dim = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
    std::vector<double> values;
    std::vector<std::size_t> y;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::size_t fields = 0;
        const char* p = line.data();
        const char* end = p + line.size();
        while (p <= end) {
            const char* comma = std::find(p, end, ',');
            if (fields == 0) {
                std::size_t label = 0;
                auto r = std::from_chars(p, comma, label);
                if (r.ec != std::errc{} || r.ptr != comma) {
                    throw FormatError("bad label on line " + std::to_string(line_no) + " of '" + path.string() + "'");
                }
                y.push_back(label);
            } else {
                double v = 0.0;
                auto r = std::from_chars(p, comma, v);
                if (r.ec != std::errc{} || r.ptr != comma) {
                    throw FormatError("bad number on line " + std::to_string(line_no) + " of '" + path.string() + "'");
                }
                values.push_back(v);
            }
            ++fields;
            p = comma + 1;
        }
        if (fields != dim + 1) {
            throw FormatError("line " + std::to_string(line_no) + " of '" + path.string() + "' has " +
                              std::to_string(fields) + " fields, expected " + std::to_string(dim + 1));
        }
    }
    Dataset ds;
    ds.x = Matrix(y.size(), dim, std::move(values));
    ds.num_classes = y.empty() ? 0 : *std::max_element(y.begin(), y.end()) + 1;
    ds.y = std::move(y);
    ds.class_counts = count_classes(ds.y, ds.num_classes);
    return ds;
}

std::vector<std::vector<std::size_t>> batches(std::size_t n, const BatchPlan& plan, std::size_t epoch) {
    if (plan.batch_size == 0 || plan.batch_size > n) {
        throw DomainError("batch size " + std::to_string(plan.batch_size) + " must be in [1, " + std::to_string(n) + "]");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = Rng::derive(plan.seed, 0x62617463680000ull + epoch);
    rng.shuffle(std::span<std::size_t>(order));
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t start = 0; start < n; start += plan.batch_size) {
        const std::size_t stop = std::min(n, start + plan.batch_size);
        if (plan.drop_last && stop - start < plan.batch_size) break;
        out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(stop));
    }
    return out;
}

} // namespace ltc
