#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "vad/eval.hpp"
#include "vad/rng.hpp"

using namespace vad;

namespace {

// O(n^2) pairwise oracle: P(s+ > s-) + 0.5 P(s+ = s-)
double pairwise_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    double wins = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != 0) continue;
            ++pairs;
            if (scores[i] > scores[j])
                wins += 1.0;
            else if (scores[i] == scores[j])
                wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

LabeledScores make_ls(std::vector<double> scores, std::vector<int> labels) {
    LabeledScores ls;
    ls.append("v", scores, labels);
    return ls;
}

LabeledScores random_instance(Rng& rng, std::size_t n, bool force_ties) {
    std::vector<double> scores;
    std::vector<int> labels;
    for (std::size_t i = 0; i < n; ++i) {
        double s = rng.uniform();
        if (force_ties) s = std::round(s * 8.0) / 8.0;  // heavy tie mass
        scores.push_back(s);
        labels.push_back(rng.uniform() < 0.4 ? 1 : 0);
    }
    // ensure both classes
    labels[0] = 1;
    labels[n - 1] = 0;
    return make_ls(std::move(scores), std::move(labels));
}

}  // namespace

TEST_CASE("micro_auc trivial cases") {
    CHECK(micro_auc(make_ls({0.9, 0.1}, {1, 0})) == 1.0);
    CHECK(micro_auc(make_ls({0.5, 0.5, 0.5, 0.5}, {1, 0, 1, 0})) == 0.5);
    CHECK(micro_auc(make_ls({0.1, 0.9}, {1, 0})) == 0.0);
}

TEST_CASE("micro_auc equals the pairwise oracle, ties included") {
    Rng rng(42);
    for (int rep = 0; rep < 60; ++rep) {
        const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform_int(300));
        const LabeledScores ls = random_instance(rng, n, rep % 2 == 0);
        CHECK(std::fabs(micro_auc(ls) - pairwise_auc(ls.scores, ls.labels)) < 1e-12);
    }
}

TEST_CASE("micro_auc rejects single-class labels") {
    CHECK_THROWS_AS(micro_auc(make_ls({0.1, 0.2}, {1, 1})), UndefinedAucError);
    CHECK_THROWS_AS(micro_auc(make_ls({0.1, 0.2}, {0, 0})), UndefinedAucError);
}

TEST_CASE("roc_curve endpoints, monotonicity, and area") {
    const LabeledScores ls = make_ls({0.9, 0.1}, {1, 0});
    const RocCurve curve = roc_curve(ls);
    REQUIRE(curve.points.size() == 3);
    CHECK(curve.points.front() == std::pair<double, double>(0.0, 0.0));
    CHECK(curve.points[1] == std::pair<double, double>(0.0, 1.0));
    CHECK(curve.points.back() == std::pair<double, double>(1.0, 1.0));
    CHECK(curve.auc == 1.0);

    CHECK(roc_curve(make_ls({0.1, 0.9}, {1, 0})).auc == 0.0);
}

TEST_CASE("roc trapezoid area equals micro_auc on random instances") {
    Rng rng(43);
    for (int rep = 0; rep < 40; ++rep) {
        const LabeledScores ls = random_instance(rng, 2 + rng.uniform_int(400), rep % 2 == 0);
        const RocCurve curve = roc_curve(ls);
        CHECK(std::fabs(curve.auc - micro_auc(ls)) < 1e-12);
        for (std::size_t i = 1; i < curve.points.size(); ++i) {
            CHECK(curve.points[i].first >= curve.points[i - 1].first);
            CHECK(curve.points[i].second >= curve.points[i - 1].second);
        }
        CHECK(curve.points.front() == std::pair<double, double>(0.0, 0.0));
        CHECK(curve.points.back() == std::pair<double, double>(1.0, 1.0));
    }
}

TEST_CASE("AUC is invariant under strictly increasing transforms") {
    Rng rng(44);
    const LabeledScores ls = random_instance(rng, 257, true);
    const double base = micro_auc(ls);
    LabeledScores affine = ls, expo = ls;
    for (auto& s : affine.scores) s = 2.0 * s + 1.0;
    for (auto& s : expo.scores) s = std::exp(s);
    CHECK(micro_auc(affine) == doctest::Approx(base).epsilon(1e-13));
    CHECK(micro_auc(expo) == doctest::Approx(base).epsilon(1e-13));
}

TEST_CASE("AUC(scores) + AUC(-scores) = 1 when ties are absent") {
    Rng rng(45);
    LabeledScores ls;
    std::vector<double> scores;
    std::vector<int> labels;
    for (int i = 0; i < 301; ++i) {
        scores.push_back(rng.uniform());  // distinct with probability 1
        labels.push_back(i % 3 == 0 ? 1 : 0);
    }
    ls.append("v", scores, labels);
    LabeledScores neg = ls;
    for (auto& s : neg.scores) s = -s;
    CHECK(micro_auc(ls) + micro_auc(neg) == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("video concatenation order does not change micro-AUC") {
    Rng rng(46);
    std::vector<double> s1, s2;
    std::vector<int> l1, l2;
    for (int i = 0; i < 120; ++i) {
        s1.push_back(std::round(rng.uniform() * 16.0) / 16.0);
        l1.push_back(rng.coin() ? 1 : 0);
        s2.push_back(std::round(rng.uniform() * 16.0) / 16.0);
        l2.push_back(rng.coin() ? 1 : 0);
    }
    l1[0] = 1;
    l2[0] = 0;
    LabeledScores ab, ba;
    ab.append("a", s1, l1);
    ab.append("b", s2, l2);
    ba.append("b", s2, l2);
    ba.append("a", s1, l1);
    CHECK(micro_auc(ab) == doctest::Approx(micro_auc(ba)).epsilon(1e-14));
}

TEST_CASE("compare_runs ranks, flags the best, and validates labels") {
    const std::vector<int> labels = {1, 0, 1, 0};
    LabeledScores good = make_ls({0.9, 0.1, 0.8, 0.2}, labels);
    LabeledScores weak = make_ls({0.6, 0.5, 0.4, 0.55}, labels);

    const RunComparison cmp = compare_runs({{"weak", weak}, {"good", good}});
    REQUIRE(cmp.rows.size() == 2);
    CHECK(cmp.rows[0].name == "good");
    CHECK(cmp.rows[0].best);
    CHECK_FALSE(cmp.rows[1].best);
    CHECK(cmp.csv.find("name,auc") == 0);

    SUBCASE("single run yields a one-row table") {
        const RunComparison one = compare_runs({{"only", good}});
        CHECK(one.rows.size() == 1);
        CHECK(one.rows[0].best);
    }
    SUBCASE("identical scores yield equal AUCs") {
        const RunComparison two = compare_runs({{"a", good}, {"b", good}});
        CHECK(two.rows[0].auc == two.rows[1].auc);
    }
    SUBCASE("label mismatch is an error") {
        LabeledScores other = make_ls({0.9, 0.1, 0.8, 0.2}, {0, 1, 0, 1});
        CHECK_THROWS_AS(compare_runs({{"a", good}, {"b", other}}), DataError);
    }
}
