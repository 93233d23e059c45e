#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "image.hpp"
#include "rng.hpp"

namespace gradebal::dataset {

inline constexpr int kGradeCount = 5;

// Severity grade 0 (no DR) .. 4 (proliferative).
class GradeLabel {
public:
    explicit GradeLabel(int grade) : grade_(grade) {
        if (grade < 0 || grade >= kGradeCount)
            throw Error(ErrorKind::BadGrade, "grade " + std::to_string(grade) + " outside [0, 4]");
    }
    int value() const { return grade_; }

private:
    int grade_;
};

class BinaryLabel {
public:
    explicit BinaryLabel(int v) : value_(v) {
        if (v != 0 && v != 1)
            throw Error(ErrorKind::BadGrade, "binary label must be 0 or 1");
    }
    int value() const { return value_; }

private:
    int value_;
};

// 0 -> normal, 1..4 -> DR.
inline BinaryLabel binarize_label(GradeLabel grade) { return BinaryLabel(grade.value() == 0 ? 0 : 1); }

// A manifest row. `label` holds the grade for five-class runs and the
// binarized label once binarize_entries() has been applied.
struct ManifestEntry {
    std::string image_id;
    int label = 0;
    bool operator==(const ManifestEntry&) const = default;
};

enum class Task { Binary, Multiclass };

inline int class_count(Task task) { return task == Task::Binary ? 2 : kGradeCount; }

inline std::vector<ManifestEntry> binarize_entries(std::vector<ManifestEntry> entries) {
    for (auto& e : entries)
        e.label = binarize_label(GradeLabel(e.label)).value();
    return entries;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t'))
        s.remove_suffix(1);
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    return s;
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(',', start);
        out.emplace_back(trim(line.substr(start, pos == std::string_view::npos ? line.npos : pos - start)));
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return out;
}

inline std::string strip_bom(std::string s) {
    if (s.rfind("\xEF\xBB\xBF", 0) == 0)
        s.erase(0, 3);
    return s;
}

} // namespace detail

/// Parses an APTOS-style `id_code,diagnosis` CSV. Row numbers in errors are
/// 1-based file lines (the header is row 1).
inline std::vector<ManifestEntry> parse_manifest(std::istream& in) {
    std::string line;
    if (!std::getline(in, line))
        throw Error(ErrorKind::MissingHeader, "empty manifest");
    const auto header = detail::split_csv_line(detail::strip_bom(line));
    if (header.size() != 2 || header[0] != "id_code" || header[1] != "diagnosis")
        throw Error(ErrorKind::MissingHeader, "expected header 'id_code,diagnosis'");

    std::vector<ManifestEntry> entries;
    std::set<std::string, std::less<>> seen;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (detail::trim(line).empty())
            continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != 2 || cells[0].empty())
            throw Error(ErrorKind::MalformedRow, "row " + std::to_string(row) + ": expected 'id_code,diagnosis'");
        int grade = -1;
        std::size_t used = 0;
        try {
            grade = std::stoi(cells[1], &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != cells[1].size() || grade < 0 || grade >= kGradeCount)
            throw Error(ErrorKind::BadGrade, "row " + std::to_string(row) + ": grade '" + cells[1] + "'");
        if (!seen.insert(cells[0]).second)
            throw Error(ErrorKind::DuplicateId, "row " + std::to_string(row) + ": duplicate id " + cells[0]);
        entries.push_back({cells[0], grade});
    }
    return entries;
}

inline std::vector<ManifestEntry> load_manifest(const std::filesystem::path& csv_path) {
    std::ifstream in(csv_path, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::IoError, "cannot open manifest " + csv_path.string());
    return parse_manifest(in);
}

/// round-half-even(frac * n). Products within 1e-9 of a .5 boundary count as
/// ties, so decimal fractions such as 0.85 behave as their exact decimal value.
inline std::size_t stratified_count(double frac, std::size_t n) {
    const double x = frac * static_cast<double>(n);
    const double fl = std::floor(x);
    const double rem = x - fl;
    if (std::abs(rem - 0.5) < 1e-9)
        return static_cast<std::size_t>(std::fmod(fl, 2.0) == 0.0 ? fl : fl + 1.0);
    return static_cast<std::size_t>(rem < 0.5 ? fl : fl + 1.0);
}

struct DatasetSplit {
    std::vector<ManifestEntry> train;
    std::vector<ManifestEntry> validation;
    std::vector<ManifestEntry> test;
    std::uint64_t seed = 0;
    double train_frac = 0.0;
    double val_frac = 0.0;
};

namespace detail {

inline std::map<int, std::vector<ManifestEntry>> by_class(const std::vector<ManifestEntry>& entries) {
    std::map<int, std::vector<ManifestEntry>> out;
    for (const auto& e : entries)
        out[e.label].push_back(e);
    return out;
}

inline void shuffle(std::vector<ManifestEntry>& v, std::uint64_t seed) {
    CounterRng rng(seed);
    for (std::size_t i = v.size(); i > 1; --i)
        std::swap(v[i - 1], v[rng.below(i)]);
}

inline void check_fraction(double f, const char* name) {
    if (!(f > 0.0 && f < 1.0))
        throw Error(ErrorKind::InvalidFraction, std::string(name) + " must be in (0, 1)");
}

} // namespace detail

/// Per class (ascending label), shuffles with a generator seeded from
/// (seed, class) and sends the first stratified_count(train_frac, n_c) to train.
inline DatasetSplit stratified_split(const std::vector<ManifestEntry>& entries, double train_frac,
                                     std::uint64_t seed) {
    detail::check_fraction(train_frac, "train_frac");
    if (entries.empty())
        throw Error(ErrorKind::EmptyManifest, "no entries to split");
    DatasetSplit split;
    split.seed = seed;
    split.train_frac = train_frac;
    for (auto& [label, members] : detail::by_class(entries)) {
        detail::shuffle(members, stream_seed(seed, static_cast<std::uint64_t>(label)));
        const std::size_t k = stratified_count(train_frac, members.size());
        split.train.insert(split.train.end(), members.begin(), members.begin() + k);
        split.test.insert(split.test.end(), members.begin() + k, members.end());
    }
    return split;
}

/// Moves stratified_count(val_frac, |train_c|) entries of each training class
/// into validation. The test list is not touched.
inline DatasetSplit carve_validation(const DatasetSplit& split, double val_frac, std::uint64_t seed) {
    detail::check_fraction(val_frac, "val_frac");
    if (!split.validation.empty())
        throw Error(ErrorKind::AlreadyCarved, "validation subset already present");
    DatasetSplit out;
    out.seed = split.seed;
    out.train_frac = split.train_frac;
    out.val_frac = val_frac;
    out.test = split.test;
    // Distinct stream from the train/test shuffle.
    const std::uint64_t carve_seed = stream_seed(seed, 0x76616c);
    for (auto& [label, members] : detail::by_class(split.train)) {
        detail::shuffle(members, stream_seed(carve_seed, static_cast<std::uint64_t>(label)));
        const std::size_t k = stratified_count(val_frac, members.size());
        out.validation.insert(out.validation.end(), members.begin(), members.begin() + k);
        out.train.insert(out.train.end(), members.begin() + k, members.end());
    }
    return out;
}

inline std::map<int, std::size_t> class_counts(const std::vector<ManifestEntry>& entries) {
    std::map<int, std::size_t> out;
    for (const auto& e : entries)
        ++out[e.label];
    return out;
}

/// target - count per class.
inline std::map<int, std::size_t> balance_plan(const std::map<int, std::size_t>& class_counts,
                                               std::size_t target) {
    std::map<int, std::size_t> plan;
    for (const auto& [label, count] : class_counts) {
        if (count > target)
            throw Error(ErrorKind::TargetTooSmall, "class " + std::to_string(label) + " has " +
                                                       std::to_string(count) + " > target " +
                                                       std::to_string(target));
        plan[label] = target - count;
    }
    return plan;
}

// ---------------------------------------------------------------------------
// Split manifests: `id_code,diagnosis,subset`, subset in {train, val, test}.

inline void write_subset_csv(std::ostream& out, const std::vector<ManifestEntry>& entries,
                             std::string_view subset) {
    out << "id_code,diagnosis,subset\n";
    for (const auto& e : entries)
        out << e.image_id << ',' << e.label << ',' << subset << '\n';
}

inline std::vector<ManifestEntry> parse_subset_csv(std::istream& in, std::string_view expected_subset) {
    std::string line;
    if (!std::getline(in, line) || detail::trim(detail::strip_bom(line)) != "id_code,diagnosis,subset")
        throw Error(ErrorKind::MissingHeader, "expected header 'id_code,diagnosis,subset'");
    std::vector<ManifestEntry> out;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (detail::trim(line).empty())
            continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != 3 || cells[0].empty() || cells[2] != expected_subset)
            throw Error(ErrorKind::MalformedRow, "row " + std::to_string(row) + " of " +
                                                     std::string(expected_subset) + " manifest");
        int label = -1;
        try {
            label = std::stoi(cells[1]);
        } catch (const std::exception&) {
        }
        if (label < 0 || label >= kGradeCount)
            throw Error(ErrorKind::BadGrade, "row " + std::to_string(row) + ": label '" + cells[1] + "'");
        out.push_back({cells[0], label});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Normalization

struct NormalizationStats {
    std::array<double, 3> mean{0.485, 0.456, 0.406};
    std::array<double, 3> std{0.229, 0.224, 0.225};

    void validate() const {
        for (double s : std)
            if (!(s > 0.0) || !std::isfinite(s))
                throw Error(ErrorKind::InvalidConfig, "normalization std must be > 0");
        for (double m : mean)
            if (!std::isfinite(m))
                throw Error(ErrorKind::InvalidConfig, "normalization mean must be finite");
    }
};

// Channel-major 3 x H x W reals.
struct FeatureTensor {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    double at(int channel, int x, int y) const {
        return data[(static_cast<std::size_t>(channel) * height + y) * width + x];
    }
};

inline FeatureTensor normalize_image(const ImageRGB& img, const NormalizationStats& stats) {
    FeatureTensor t{img.width, img.height, std::vector<double>(img.data.size())};
    const std::size_t plane = static_cast<std::size_t>(img.width) * img.height;
    for (std::size_t p = 0; p < plane; ++p)
        for (int c = 0; c < 3; ++c)
            t.data[c * plane + p] = (img.data[p * 3 + c] / 255.0 - stats.mean[c]) / stats.std[c];
    return t;
}

// Inverse of normalize_image before quantization: returns channel values in [0, 255] units.
inline double denormalize_value(double v, int channel, const NormalizationStats& stats) {
    return (v * stats.std[channel] + stats.mean[channel]) * 255.0;
}

} // namespace gradebal::dataset
