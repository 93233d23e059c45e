#include <random>

#include <gtest/gtest.h>

#include "gradebal/metrics.hpp"
#include "oracles.hpp"

using namespace gradebal;
using namespace gradebal::metrics;

namespace {

ScoreMatrix make_scores(std::size_t C, const std::vector<std::vector<double>>& rows, std::vector<int> labels) {
    ScoreMatrix s{C, {}, std::move(labels)};
    for (const auto& r : rows)
        s.probs.insert(s.probs.end(), r.begin(), r.end());
    return s;
}

// Random probability rows; a coarse grid makes ties common.
ScoreMatrix random_scores(std::mt19937_64& rng, std::size_t C, std::size_t N, bool coarse) {
    ScoreMatrix s{C, {}, {}};
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t i = 0; i < N; ++i) {
        std::vector<double> r(C);
        double sum = 0;
        for (auto& v : r) {
            v = coarse ? std::floor(u(rng) * 4) + 1 : u(rng) + 1e-3;
            sum += v;
        }
        for (auto& v : r)
            s.probs.push_back(v / sum);
        s.labels.push_back(static_cast<int>(rng() % C));
    }
    return s;
}

std::vector<std::vector<double>> rows_of(const ScoreMatrix& s) {
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < s.rows(); ++i)
        out.emplace_back(s.row(i).begin(), s.row(i).end());
    return out;
}

} // namespace

TEST(ConfusionMatrix, Examples) {
    const std::vector<int> same{0, 1, 2};
    EXPECT_EQ(confusion_matrix(same, same, 3), ConfusionMatrix::from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}));
    EXPECT_EQ(confusion_matrix(std::vector<int>{}, std::vector<int>{}, 2).total(), 0u);
    const std::vector<int> labels{0, 0, 1, 1}, preds{0, 1, 1, 0};
    EXPECT_EQ(confusion_matrix(preds, labels, 2), ConfusionMatrix::from_rows({{1, 1}, {1, 1}}));
}

TEST(ConfusionMatrix, Errors) {
    const std::vector<int> a{0, 1}, b{0};
    try {
        confusion_matrix(a, b, 2);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::LengthMismatch);
    }
    const std::vector<int> c{0, 2};
    try {
        confusion_matrix(c, a, 2);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::IndexOutOfRange);
    }
}

TEST(Accuracy, Examples) {
    EXPECT_EQ(accuracy(ConfusionMatrix::from_rows({{5, 0}, {0, 5}})), 1.0);
    EXPECT_EQ(accuracy(ConfusionMatrix::from_rows({{0, 5}, {5, 0}})), 0.0);
    EXPECT_DOUBLE_EQ(accuracy(ConfusionMatrix::from_rows({{2, 1}, {1, 2}})), 4.0 / 6.0);
    try {
        accuracy(ConfusionMatrix(3));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::EmptyMatrix);
    }
}

TEST(PrecisionRecall, Examples) {
    auto pr = precision_recall(ConfusionMatrix::from_rows({{3, 0}, {0, 7}}));
    EXPECT_EQ(pr.precision, (std::vector<double>{1, 1}));
    EXPECT_EQ(pr.recall, (std::vector<double>{1, 1}));
    pr = precision_recall(ConfusionMatrix::from_rows({{3, 0}, {1, 0}}));
    EXPECT_EQ(pr.precision, (std::vector<double>{0.75, 0}));
    EXPECT_EQ(pr.recall, (std::vector<double>{1, 0}));
    pr = precision_recall(ConfusionMatrix::from_rows({{2, 1}, {1, 2}}));
    EXPECT_DOUBLE_EQ(pr.precision[0], 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(pr.recall[1], 2.0 / 3.0);
}

TEST(F1Scores, Examples) {
    auto f = f1_scores(ConfusionMatrix::from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}));
    EXPECT_EQ(f.per_class, (std::vector<double>{1, 1, 1}));
    EXPECT_EQ(f.macro, 1.0);
    EXPECT_EQ(f.weighted, 1.0);

    f = f1_scores(ConfusionMatrix::from_rows({{2, 1}, {1, 2}}));
    EXPECT_DOUBLE_EQ(f.macro, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(f.weighted, 2.0 / 3.0);

    f = f1_scores(ConfusionMatrix::from_rows({{3, 0}, {1, 0}}));
    EXPECT_NEAR(f.per_class[0], 6.0 / 7.0, 1e-15);
    EXPECT_EQ(f.per_class[1], 0.0);
    EXPECT_NEAR(f.macro, 3.0 / 7.0, 1e-15);
    EXPECT_NEAR(f.weighted, 9.0 / 14.0, 1e-15);
}

TEST(F1Scores, ZeroSupportExcludedFromMacro) {
    // Class 2 never occurs and is never predicted.
    const auto f = f1_scores(ConfusionMatrix::from_rows({{2, 0, 0}, {0, 2, 0}, {0, 0, 0}}));
    EXPECT_EQ(f.macro, 1.0);
    EXPECT_EQ(f.weighted, 1.0);
}

TEST(OvrAuc, Examples) {
    auto s = make_scores(2, {{0.1, 0.9}, {0.9, 0.1}}, {1, 0});
    EXPECT_EQ(*ovr_auc(s).per_class[1], 1.0);

    s = make_scores(2, {{0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}}, {0, 1, 1});
    const auto tied = ovr_auc(s);
    EXPECT_EQ(*tied.per_class[0], 0.5);
    EXPECT_EQ(*tied.per_class[1], 0.5);

    s = make_scores(2, {{0.2, 0.8}, {0.3, 0.7}, {0.4, 0.6}, {0.9, 0.1}}, {1, 0, 1, 0});
    EXPECT_DOUBLE_EQ(*ovr_auc(s).per_class[1], 0.75);
}

TEST(OvrAuc, UndefinedClassesAndDegenerate) {
    auto s = make_scores(3, {{0.7, 0.2, 0.1}, {0.2, 0.7, 0.1}}, {0, 1});
    const auto r = ovr_auc(s);
    EXPECT_FALSE(r.per_class[2].has_value());
    EXPECT_EQ(r.macro, 1.0);

    s = make_scores(2, {{0.7, 0.3}, {0.6, 0.4}}, {0, 0});
    try {
        ovr_auc(s);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DegenerateLabels);
    }
}

TEST(Evaluate, Examples) {
    auto r = evaluate(make_scores(2, {{0.0, 1.0}}, {1}));
    EXPECT_EQ(r.accuracy, 1.0);
    EXPECT_EQ(r.macro_f1, 1.0);
    EXPECT_FALSE(r.macro_auc.has_value());
    EXPECT_TRUE(to_json_value(r)["macro_auc"].is_null());

    const auto s = make_scores(2, {{0.5, 0.5}}, {0});
    EXPECT_EQ(argmax_predictions(s), (std::vector<int>{0}));
    EXPECT_EQ(evaluate(s).accuracy, 1.0);
}

TEST(Evaluate, RejectsInvalidScores) {
    EXPECT_THROW(evaluate(make_scores(2, {{0.7, 0.7}}, {0})), Error);
    EXPECT_THROW(evaluate(make_scores(2, {{1.2, -0.2}}, {0})), Error);
    EXPECT_THROW(evaluate(make_scores(2, {}, {})), Error);
}

TEST(Evaluate, SerializationRoundsToSixDecimals) {
    const auto j = to_json_value(evaluate(make_scores(2, {{0.9, 0.1}, {0.9, 0.1}, {0.1, 0.9}}, {0, 1, 1})));
    EXPECT_EQ(j["accuracy"].get<double>(), 0.666667);
    EXPECT_EQ(j["precision_per_class"].size(), 2u);
}

TEST(MetricsOracle, RandomConfusionMatrices) {
    std::mt19937_64 rng(1001);
    for (int trial = 0; trial < 1000; ++trial) {
        const int C = trial % 2 ? 5 : 2;
        std::vector<int> truth, pred;
        const int n = 1 + static_cast<int>(rng() % 300);
        for (int i = 0; i < n; ++i) {
            truth.push_back(static_cast<int>(rng() % C));
            pred.push_back(rng() % 3 ? truth.back() : static_cast<int>(rng() % C));
        }
        const auto cm = confusion_matrix(pred, truth, C);
        const auto k = oracle::count_pairs(truth, pred, C);
        const auto pr = precision_recall(cm);
        const auto f1 = f1_scores(cm);
        double total = 0, weighted_recall = 0, macro = 0, supported = 0;
        for (int c = 0; c < C; ++c) {
            const double p = k.tp[c] + k.fp[c] == 0 ? 0 : k.tp[c] / (k.tp[c] + k.fp[c]);
            const double r = k.tp[c] + k.fn[c] == 0 ? 0 : k.tp[c] / (k.tp[c] + k.fn[c]);
            const double f = p + r == 0 ? 0 : 2 * p * r / (p + r);
            EXPECT_NEAR(pr.precision[c], p, 1e-12);
            EXPECT_NEAR(pr.recall[c], r, 1e-12);
            EXPECT_NEAR(f1.per_class[c], f, 1e-12);
            total += k.support[c];
            weighted_recall += k.support[c] * r;
            if (k.support[c] > 0) {
                macro += f;
                supported += 1;
            }
        }
        EXPECT_NEAR(f1.macro, macro / supported, 1e-12);
        EXPECT_NEAR(accuracy(cm), weighted_recall / total, 1e-12);

        std::uint64_t tp = 0, fp = 0;
        for (int c = 0; c < C; ++c) {
            tp += cm.true_positives(c);
            fp += cm.false_positives(c);
            EXPECT_EQ(cm.support(c), static_cast<std::uint64_t>(k.support[c]));
        }
        EXPECT_EQ(tp + fp, cm.total());
    }
}

TEST(MetricsOracle, RandomScoreMatrices) {
    std::mt19937_64 rng(2002);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t C = trial % 2 ? 5 : 2;
        const auto s = random_scores(rng, C, 2 + rng() % 199, trial % 3 == 0);
        const auto lib = evaluate(s);
        const auto ref = oracle::brute_force(rows_of(s), s.labels, static_cast<int>(C));
        EXPECT_NEAR(lib.accuracy, ref.accuracy, 1e-12);
        EXPECT_NEAR(lib.macro_precision, ref.macro_precision, 1e-12);
        EXPECT_NEAR(lib.macro_recall, ref.macro_recall, 1e-12);
        EXPECT_NEAR(lib.macro_f1, ref.macro_f1, 1e-12);
        EXPECT_NEAR(lib.weighted_f1, ref.weighted_f1, 1e-12);
        for (std::size_t c = 0; c < C; ++c) {
            EXPECT_NEAR(lib.precision_per_class[c], ref.precision[c], 1e-12);
            EXPECT_NEAR(lib.recall_per_class[c], ref.recall[c], 1e-12);
            EXPECT_NEAR(lib.f1_per_class[c], ref.f1[c], 1e-12);
            ASSERT_EQ(lib.auc_per_class[c].has_value(), ref.auc[c].has_value());
            if (ref.auc[c]) {
                EXPECT_NEAR(*lib.auc_per_class[c], *ref.auc[c], 1e-12);
            }
        }
        ASSERT_EQ(lib.macro_auc.has_value(), ref.macro_auc.has_value());
        if (ref.macro_auc) {
            EXPECT_NEAR(*lib.macro_auc, *ref.macro_auc, 1e-12);
        }
        EXPECT_EQ(to_json_value(evaluate(s)), to_json_value(lib));
    }
}

TEST(AucProperties, MonotoneTransformAndComplement) {
    std::mt19937_64 rng(3003);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng() % 300;
        std::vector<double> score(n), cubed(n), negated(n);
        std::vector<bool> pos(n);
        for (std::size_t i = 0; i < n; ++i) {
            score[i] = u(rng);
            cubed[i] = std::pow(score[i], 3) * 7 + 2;
            negated[i] = -score[i];
            pos[i] = i == 0 || (i != 1 && rng() % 2);
        }
        const auto a = binary_auc(score, pos);
        ASSERT_TRUE(a);
        EXPECT_EQ(*binary_auc(cubed, pos), *a);
        EXPECT_NEAR(*binary_auc(negated, pos), 1.0 - *a, 1e-12);
        EXPECT_NEAR(*a, *oracle::pair_auc(score, pos), 1e-12);
    }
}
