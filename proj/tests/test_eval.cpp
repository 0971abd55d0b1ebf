#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "dald/eval.hpp"
#include "dald/error.hpp"
#include "dald/rng.hpp"

using namespace dald;

namespace {

LabeledScoreSet make_set(const std::vector<double>& human, const std::vector<double>& machine) {
    LabeledScoreSet s;
    for (size_t i = 0; i < human.size(); ++i)
        s.entries.push_back({"h" + std::to_string(i), human[i], Label::human});
    for (size_t i = 0; i < machine.size(); ++i)
        s.entries.push_back({"m" + std::to_string(i), machine[i], Label::machine});
    return s;
}

double brute_force_auroc(const LabeledScoreSet& s) {
    double wins = 0.0;
    size_t n_pos = 0, n_neg = 0;
    for (const auto& a : s.entries) {
        if (a.label != Label::machine) continue;
        ++n_pos;
        for (const auto& b : s.entries) {
            if (b.label != Label::human) continue;
            if (a.score > b.score) wins += 1.0;
            else if (a.score == b.score) wins += 0.5;
        }
    }
    for (const auto& b : s.entries)
        if (b.label == Label::human) ++n_neg;
    return wins / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

LabeledScoreSet random_set(Rng& rng) {
    size_t n = 2 + rng.next_index(199);
    LabeledScoreSet s;
    bool has_pos = false, has_neg = false;
    for (size_t i = 0; i < n; ++i) {
        Label label = rng.next_double() < 0.5 ? Label::human : Label::machine;
        // coarse grid forces heavy ties
        double score = static_cast<double>(rng.next_index(9)) / 4.0;
        s.entries.push_back({"x" + std::to_string(i), score, label});
        (label == Label::machine ? has_pos : has_neg) = true;
    }
    if (!has_pos) s.entries.push_back({"p", 0.5, Label::machine});
    if (!has_neg) s.entries.push_back({"n", 0.5, Label::human});
    return s;
}

}  // namespace

TEST_CASE("auroc oracles") {
    CHECK(auroc(make_set({0.1, 0.2}, {0.3, 0.4})) == doctest::Approx(1.0));
    CHECK(auroc(make_set({1.0, 1.0}, {1.0, 1.0})) == doctest::Approx(0.5));
    CHECK(auroc(make_set({0.5, 0.2}, {0.4, 0.6})) == doctest::Approx(0.75));
}

TEST_CASE("auroc equals brute force on random tied sets") {
    Rng rng(61);
    for (int t = 0; t < 100; ++t) {
        LabeledScoreSet s = random_set(rng);
        CHECK(auroc(s) == brute_force_auroc(s));
    }
}

TEST_CASE("auroc monotone-transform invariance") {
    Rng rng(62);
    for (int t = 0; t < 20; ++t) {
        LabeledScoreSet s = random_set(rng);
        double base = auroc(s);
        LabeledScoreSet exp_s = s, affine_s = s;
        for (auto& e : exp_s.entries) e.score = std::exp(e.score);
        for (auto& e : affine_s.entries) e.score = 3.0 * e.score + 11.0;
        CHECK(auroc(exp_s) == base);
        CHECK(auroc(affine_s) == base);
    }
}

TEST_CASE("label swap maps auroc to 1 - auroc") {
    Rng rng(63);
    for (int t = 0; t < 20; ++t) {
        LabeledScoreSet s = random_set(rng);
        LabeledScoreSet swapped = s;
        for (auto& e : swapped.entries)
            e.label = e.label == Label::human ? Label::machine : Label::human;
        CHECK(auroc(swapped) == doctest::Approx(1.0 - auroc(s)).epsilon(1e-12));
    }
}

TEST_CASE("single class and NaN rejected, infinities clamped") {
    LabeledScoreSet only_human;
    only_human.entries.push_back({"a", 0.1, Label::human});
    only_human.entries.push_back({"b", 0.2, Label::human});
    CHECK_THROWS_AS(auroc(only_human), DaldError);

    LabeledScoreSet with_nan = make_set({0.1}, {0.2});
    with_nan.entries[0].score = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(auroc(with_nan), DaldError);

    LabeledScoreSet with_inf = make_set({0.1, 0.3}, {0.2});
    with_inf.entries[2].score = std::numeric_limits<double>::infinity();
    CHECK(auroc(with_inf) == doctest::Approx(1.0));
}

TEST_CASE("roc curve shape and integral consistency") {
    LabeledScoreSet perfect = make_set({0.1, 0.2}, {0.3, 0.4});
    auto roc = roc_curve(perfect);
    CHECK(roc.front().fpr == 0.0);
    CHECK(roc.front().tpr == 0.0);
    CHECK(roc.back().fpr == 1.0);
    CHECK(roc.back().tpr == 1.0);

    LabeledScoreSet ties = make_set({1.0, 1.0}, {1.0});
    auto flat = roc_curve(ties);
    REQUIRE(flat.size() == 2);
    CHECK(flat[1].fpr == 1.0);
    CHECK(flat[1].tpr == 1.0);

    Rng rng(64);
    for (int t = 0; t < 10; ++t) {
        LabeledScoreSet s = random_set(rng);
        auto points = roc_curve(s);
        double integral = 0.0;
        for (size_t i = 1; i < points.size(); ++i) {
            CHECK(points[i].fpr >= points[i - 1].fpr);
            CHECK(points[i].tpr >= points[i - 1].tpr);
            integral += (points[i].fpr - points[i - 1].fpr) * 0.5 *
                        (points[i].tpr + points[i - 1].tpr);
        }
        CHECK(std::abs(integral - auroc(s)) < 1e-12);
    }
}

TEST_CASE("aupr oracles") {
    CHECK(aupr(make_set({0.1, 0.2}, {0.3, 0.4})) == doctest::Approx(1.0));
    // single positive ranked first
    CHECK(aupr(make_set({0.1, 0.2, 0.3}, {0.9})) == doctest::Approx(1.0));
    // random scores, prevalence 0.5 -> near 0.5
    Rng rng(65);
    LabeledScoreSet big;
    for (int i = 0; i < 10000; ++i)
        big.entries.push_back({"x" + std::to_string(i), rng.next_double(),
                               i % 2 == 0 ? Label::human : Label::machine});
    CHECK(std::abs(aupr(big) - 0.5) < 0.02);
}

TEST_CASE("report serialization carries metadata") {
    LabeledScoreSet s = make_set({0.1, 0.2}, {0.3, 0.4});
    EvalReport r = evaluate(s, "curvature", "toy", "deadbeef");
    CHECK(r.auroc == doctest::Approx(1.0));
    std::string json = eval_report_json(r);
    CHECK(json.find("\"curvature\"") != std::string::npos);
    CHECK(json.find("\"deadbeef\"") != std::string::npos);
    std::string csv = roc_csv(r.roc);
    CHECK(csv.rfind("fpr,tpr\n", 0) == 0);
}
