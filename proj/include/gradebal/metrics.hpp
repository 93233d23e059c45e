#pragma once

// Multiclass evaluation: confusion matrix, accuracy, per-class and macro
// precision/recall/F1, support-weighted F1 and one-vs-rest ROC AUC.
//
// Conventions: a 0/0 quotient is 0; classes with zero support are left out of
// every macro mean and weigh zero in the weighted mean; argmax ties go to the
// lowest class index; AUC counts tied (positive, negative) pairs as half.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "error.hpp"

namespace gradebal::metrics {

class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::size_t class_count)
        : classes_(class_count), counts_(class_count * class_count, 0) {
        if (class_count < 2)
            throw Error(ErrorKind::InvalidConfig, "confusion matrix needs at least 2 classes");
    }

    // Rows are true classes, columns predicted classes.
    static ConfusionMatrix from_rows(const std::vector<std::vector<std::uint64_t>>& rows) {
        ConfusionMatrix cm(rows.size());
        for (std::size_t t = 0; t < rows.size(); ++t) {
            if (rows[t].size() != rows.size())
                throw Error(ErrorKind::LengthMismatch, "confusion matrix must be square");
            for (std::size_t p = 0; p < rows.size(); ++p)
                cm.at(t, p) = rows[t][p];
        }
        return cm;
    }

    std::size_t class_count() const { return classes_; }
    std::uint64_t& at(std::size_t truth, std::size_t predicted) { return counts_[truth * classes_ + predicted]; }
    std::uint64_t at(std::size_t truth, std::size_t predicted) const { return counts_[truth * classes_ + predicted]; }

    std::uint64_t total() const { return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0}); }
    std::uint64_t true_positives(std::size_t c) const { return at(c, c); }
    std::uint64_t support(std::size_t c) const {
        std::uint64_t s = 0;
        for (std::size_t p = 0; p < classes_; ++p)
            s += at(c, p);
        return s;
    }
    std::uint64_t predicted(std::size_t c) const {
        std::uint64_t s = 0;
        for (std::size_t t = 0; t < classes_; ++t)
            s += at(t, c);
        return s;
    }
    std::uint64_t false_positives(std::size_t c) const { return predicted(c) - at(c, c); }
    std::uint64_t false_negatives(std::size_t c) const { return support(c) - at(c, c); }

    bool operator==(const ConfusionMatrix&) const = default;

private:
    std::size_t classes_;
    std::vector<std::uint64_t> counts_;
};

inline ConfusionMatrix confusion_matrix(std::span<const int> predictions, std::span<const int> labels,
                                        std::size_t class_count) {
    if (predictions.size() != labels.size())
        throw Error(ErrorKind::LengthMismatch, "predictions and labels differ in length");
    ConfusionMatrix cm(class_count);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || predictions[i] < 0 || static_cast<std::size_t>(labels[i]) >= class_count ||
            static_cast<std::size_t>(predictions[i]) >= class_count)
            throw Error(ErrorKind::IndexOutOfRange, "class index out of range at sample " + std::to_string(i));
        ++cm.at(labels[i], predictions[i]);
    }
    return cm;
}

inline double ratio(std::uint64_t num, std::uint64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

inline double accuracy(const ConfusionMatrix& cm) {
    const auto total = cm.total();
    if (total == 0)
        throw Error(ErrorKind::EmptyMatrix, "accuracy of an empty confusion matrix");
    std::uint64_t trace = 0;
    for (std::size_t c = 0; c < cm.class_count(); ++c)
        trace += cm.at(c, c);
    return ratio(trace, total);
}

struct PrecisionRecall {
    std::vector<double> precision;
    std::vector<double> recall;
};

inline PrecisionRecall precision_recall(const ConfusionMatrix& cm) {
    PrecisionRecall pr;
    for (std::size_t c = 0; c < cm.class_count(); ++c) {
        const auto tp = cm.true_positives(c);
        pr.precision.push_back(ratio(tp, tp + cm.false_positives(c)));
        pr.recall.push_back(ratio(tp, tp + cm.false_negatives(c)));
    }
    return pr;
}

inline double harmonic(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

// Unweighted mean over classes with non-zero support.
inline double macro_mean(const ConfusionMatrix& cm, const std::vector<double>& per_class) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t c = 0; c < cm.class_count(); ++c)
        if (cm.support(c) > 0) {
            sum += per_class[c];
            ++n;
        }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

struct F1Scores {
    std::vector<double> per_class;
    double macro = 0.0;
    double weighted = 0.0;
};

inline F1Scores f1_scores(const ConfusionMatrix& cm) {
    const auto pr = precision_recall(cm);
    F1Scores f;
    double weighted = 0.0;
    for (std::size_t c = 0; c < cm.class_count(); ++c) {
        f.per_class.push_back(harmonic(pr.precision[c], pr.recall[c]));
        weighted += static_cast<double>(cm.support(c)) * f.per_class[c];
    }
    f.macro = macro_mean(cm, f.per_class);
    const auto total = cm.total();
    f.weighted = total == 0 ? 0.0 : weighted / static_cast<double>(total);
    return f;
}

inline double macro_f1(const ConfusionMatrix& cm) { return f1_scores(cm).macro; }

// N rows of C class probabilities plus the true class of each row.
struct ScoreMatrix {
    std::size_t class_count = 0;
    std::vector<double> probs; // row-major N x C
    std::vector<int> labels;

    std::size_t rows() const { return labels.size(); }
    std::span<const double> row(std::size_t i) const { return {probs.data() + i * class_count, class_count}; }

    void validate() const {
        if (class_count < 2)
            throw Error(ErrorKind::InvalidScores, "score matrix needs at least 2 classes");
        if (probs.size() != labels.size() * class_count)
            throw Error(ErrorKind::LengthMismatch, "score rows and labels differ in length");
        for (std::size_t i = 0; i < rows(); ++i) {
            if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= class_count)
                throw Error(ErrorKind::IndexOutOfRange, "label out of range at row " + std::to_string(i));
            double sum = 0.0;
            for (double p : row(i)) {
                if (!(p >= 0.0 && p <= 1.0))
                    throw Error(ErrorKind::InvalidScores, "probability outside [0, 1] at row " + std::to_string(i));
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-6)
                throw Error(ErrorKind::InvalidScores, "row " + std::to_string(i) + " does not sum to 1");
        }
    }
};

/// Exact Mann-Whitney AUC of `scores` separating positives from negatives,
/// using mid-ranks for ties. nullopt when either group is empty.
inline std::optional<double> binary_auc(std::span<const double> scores, const std::vector<bool>& positive) {
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double rank_sum = 0.0; // sum of positive ranks, ranks are 1-based mid-ranks
    std::uint64_t n_pos = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]])
            ++j;
        const double mid = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k)
            if (positive[order[k]]) {
                rank_sum += mid;
                ++n_pos;
            }
        i = j;
    }
    const std::uint64_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0)
        return std::nullopt;
    const double u = rank_sum - static_cast<double>(n_pos) * static_cast<double>(n_pos + 1) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

struct AucResult {
    std::vector<std::optional<double>> per_class;
    double macro = 0.0;
};

inline AucResult ovr_auc(const ScoreMatrix& scores) {
    const std::size_t n = scores.rows();
    AucResult out;
    std::vector<double> column(n);
    std::vector<bool> positive(n);
    double sum = 0.0;
    std::size_t defined = 0;
    for (std::size_t c = 0; c < scores.class_count; ++c) {
        for (std::size_t i = 0; i < n; ++i) {
            column[i] = scores.probs[i * scores.class_count + c];
            positive[i] = static_cast<std::size_t>(scores.labels[i]) == c;
        }
        out.per_class.push_back(binary_auc(column, positive));
        if (out.per_class.back()) {
            sum += *out.per_class.back();
            ++defined;
        }
    }
    if (defined == 0)
        throw Error(ErrorKind::DegenerateLabels, "no class has both positive and negative examples");
    out.macro = sum / static_cast<double>(defined);
    return out;
}

// Row-wise argmax, ties to the lowest index.
inline std::vector<int> argmax_predictions(const ScoreMatrix& scores) {
    std::vector<int> out(scores.rows());
    for (std::size_t i = 0; i < scores.rows(); ++i) {
        const auto r = scores.row(i);
        out[i] = static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
    }
    return out;
}

struct MetricsReport {
    double accuracy = 0.0;
    std::vector<double> precision_per_class;
    std::vector<double> recall_per_class;
    std::vector<double> f1_per_class;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    double weighted_f1 = 0.0;
    std::vector<std::optional<double>> auc_per_class;
    std::optional<double> macro_auc;
};

/// Full report. AUC is left undefined (nullopt) rather than failing when no
/// class has both positives and negatives, e.g. a single-class evaluation set.
inline MetricsReport evaluate(const ScoreMatrix& scores) {
    scores.validate();
    if (scores.rows() == 0)
        throw Error(ErrorKind::EmptyMatrix, "no samples to evaluate");
    const auto cm = confusion_matrix(argmax_predictions(scores), scores.labels, scores.class_count);
    const auto pr = precision_recall(cm);
    const auto f1 = f1_scores(cm);

    MetricsReport r;
    r.accuracy = accuracy(cm);
    r.precision_per_class = pr.precision;
    r.recall_per_class = pr.recall;
    r.f1_per_class = f1.per_class;
    r.macro_precision = macro_mean(cm, pr.precision);
    r.macro_recall = macro_mean(cm, pr.recall);
    r.macro_f1 = f1.macro;
    r.weighted_f1 = f1.weighted;
    try {
        auto auc = ovr_auc(scores);
        r.auc_per_class = std::move(auc.per_class);
        r.macro_auc = auc.macro;
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::DegenerateLabels)
            throw;
        r.auc_per_class.assign(scores.class_count, std::nullopt);
    }
    return r;
}

// Reals rounded to 6 decimals for serialization.
inline double round6(double v) { return std::round(v * 1e6) / 1e6; }

inline nlohmann::json to_json_value(const MetricsReport& r) {
    auto vec = [](const std::vector<double>& v) {
        nlohmann::json a = nlohmann::json::array();
        for (double x : v)
            a.push_back(round6(x));
        return a;
    };
    auto opt = [](const std::optional<double>& v) -> nlohmann::json {
        return v ? nlohmann::json(round6(*v)) : nlohmann::json(nullptr);
    };
    nlohmann::json auc = nlohmann::json::array();
    for (const auto& a : r.auc_per_class)
        auc.push_back(opt(a));
    return {{"accuracy", round6(r.accuracy)},
            {"precision_per_class", vec(r.precision_per_class)},
            {"recall_per_class", vec(r.recall_per_class)},
            {"f1_per_class", vec(r.f1_per_class)},
            {"macro_precision", round6(r.macro_precision)},
            {"macro_recall", round6(r.macro_recall)},
            {"macro_f1", round6(r.macro_f1)},
            {"weighted_f1", round6(r.weighted_f1)},
            {"auc_per_class", auc},
            {"macro_auc", opt(r.macro_auc)}};
}

} // namespace gradebal::metrics
