#include "doctest.h"
#include "oracles.hpp"

#include "tempshift/errors.hpp"
#include "tempshift/metrics.hpp"
#include "tempshift/random.hpp"

#include <cmath>

using namespace tempshift;

namespace {

using Labels = std::vector<std::uint8_t>;

struct Dataset {
    std::vector<double> scores;
    Labels labels;
};

// Scores drawn from a small dyadic grid so ties are common and exact.
Dataset random_dataset(Rng& rng) {
    Dataset d;
    const auto n = static_cast<std::size_t>(rng.between(2, 200));
    const int levels = 1 << rng.between(1, 5);
    const double prevalence = rng.uniform(0.02, 0.6);
    for (std::size_t i = 0; i < n; ++i) {
        const bool pos = rng.uniform() < prevalence;
        d.labels.push_back(pos);
        d.scores.push_back(static_cast<double>(rng.between(0, levels)) / levels + (pos ? 0.125 : 0.0));
    }
    d.labels[0] = 1;
    d.labels[1] = 0;
    return d;
}

} // namespace

TEST_CASE("hand examples") {
    CHECK(roc_auc(std::vector<double>{0.1, 0.4, 0.35, 0.8}, Labels{0, 0, 1, 1}) == 0.75);
    CHECK(pr_auc(std::vector<double>{0.9, 0.8, 0.7, 0.6}, Labels{1, 0, 1, 0}) ==
          doctest::Approx(0.5 * (1.0 + 2.0 / 3.0)).epsilon(1e-15));
    CHECK(roc_auc(std::vector<double>{1, 2, 3, 4}, Labels{0, 0, 1, 1}) == 1.0);
    CHECK(roc_auc(std::vector<double>{2, 2, 2, 2}, Labels{0, 1, 0, 1}) == 0.5);
    CHECK(pr_auc(std::vector<double>{4, 3, 2, 1}, Labels{1, 1, 0, 0}) == 1.0);
}

TEST_CASE("no-skill baseline is prevalence") {
    Labels y(1000, 0);
    for (int i = 0; i < 10; ++i) y[static_cast<std::size_t>(i * 97)] = 1;
    CHECK(no_skill_pr(y) == doctest::Approx(0.010).epsilon(1e-12));
}

TEST_CASE("metrics match threshold-sweep oracles") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(seed);
        const Dataset d = random_dataset(rng);
        const double roc = roc_auc(d.scores, d.labels);
        const double ap = pr_auc(d.scores, d.labels);
        REQUIRE(std::abs(roc - oracle::roc_auc(d.scores, d.labels)) <= 1e-9);
        REQUIRE(std::abs(ap - oracle::average_precision(d.scores, d.labels)) <= 1e-9);
        REQUIRE(roc >= 0.0);
        REQUIRE(roc <= 1.0);
        REQUIRE(ap >= 0.0);
        REQUIRE(ap <= 1.0);
    }
}

TEST_CASE("ROC is invariant under strictly monotone transforms") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng(seed + 1000);
        const Dataset d = random_dataset(rng);
        std::vector<double> t;
        for (double s : d.scores) t.push_back(std::exp(3 * s) - 7);
        CHECK(roc_auc(t, d.labels) == doctest::Approx(roc_auc(d.scores, d.labels)).epsilon(1e-12));
        CHECK(pr_auc(t, d.labels) == doctest::Approx(pr_auc(d.scores, d.labels)).epsilon(1e-12));
    }
}

TEST_CASE("label flip mirrors ROC when scores are distinct") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng(seed + 2000);
        const auto n = static_cast<std::size_t>(rng.between(2, 150));
        std::vector<double> s;
        Labels y;
        for (std::size_t i = 0; i < n; ++i) {
            s.push_back(rng.uniform());
            y.push_back(rng.uniform() < 0.3);
        }
        y[0] = 1;
        y[1] = 0;
        Labels flipped;
        for (auto l : y) flipped.push_back(!l);
        CHECK(roc_auc(s, flipped) == doctest::Approx(1.0 - roc_auc(s, y)).epsilon(1e-12));
    }
}

TEST_CASE("reversed ranking stays within the oracle bound") {
    const std::vector<double> s{1, 2, 3, 4, 5, 6, 7, 8};
    const Labels y{1, 1, 0, 0, 0, 0, 0, 0};
    CHECK(roc_auc(s, y) == 0.0);
    CHECK(pr_auc(s, y) == doctest::Approx(oracle::average_precision(s, y)).epsilon(1e-12));
    CHECK(pr_auc(s, y) <= 0.25 + 1e-12);
}

TEST_CASE("curves") {
    const std::vector<double> s{0.1, 0.4, 0.35, 0.8};
    const Labels y{0, 0, 1, 1};
    const auto roc = roc_curve(s, y);
    REQUIRE(roc.size() >= 2);
    CHECK(roc.front().x == 0.0);
    CHECK(roc.front().y == 0.0);
    CHECK(roc.back().x == 1.0);
    CHECK(roc.back().y == 1.0);
    double area = 0;
    for (std::size_t i = 1; i < roc.size(); ++i) {
        area += (roc[i].x - roc[i - 1].x) * (roc[i].y + roc[i - 1].y) / 2;
    }
    CHECK(area == doctest::Approx(0.75));
    const auto pr = pr_curve(s, y);
    REQUIRE(!pr.empty());
    CHECK(pr.back().x == 1.0);
}

TEST_CASE("undefined metrics raise") {
    CHECK_THROWS_AS(roc_auc(std::vector<double>{1, 2}, Labels{1, 1}), MetricError);
    CHECK_THROWS_AS(pr_auc(std::vector<double>{1, 2}, Labels{0, 0}), MetricError);
    CHECK_THROWS_AS(roc_auc(std::vector<double>{1, 2, 3}, Labels{1, 0}), DataError);
    CHECK_THROWS_AS(roc_auc(std::vector<double>{1, NAN}, Labels{1, 0}), DataError);
}

TEST_CASE("score trace bookkeeping") {
    ScoreTrace a;
    a.scores = {0.1, 0.2};
    a.labels = {0, 1};
    a.coverage = {1, 2};
    a.clip_boundaries = {0};
    ScoreTrace b = a;
    a.append(b);
    CHECK(a.size() == 4);
    CHECK(a.num_positive() == 2);
    CHECK(a.clip_boundaries == std::vector<std::size_t>{0, 2});
    a.validate();
    a.coverage.pop_back();
    CHECK_THROWS_AS(a.validate(), DataError);
}
