#include <doctest.h>

#include <algorithm>
#include <functional>

#include "gramprobe/error.hpp"
#include "gramprobe/metrics.hpp"
#include "support.hpp"

using namespace gramprobe;
using namespace gramprobe::metrics;

namespace {

Scored pairs_from(const std::vector<std::pair<double, double>>& good_bad,
                  const std::vector<std::string>& groups = {}) {
    Scored s;
    for (std::size_t i = 0; i < good_bad.size(); ++i) {
        const std::string p = "p" + std::to_string(i);
        std::optional<std::string> g;
        if (!groups.empty()) g = groups[i];
        s.push_back({p + "-g", good_bad[i].first, 1, p, g});
        s.push_back({p + "-b", good_bad[i].second, 0, p, g});
    }
    return s;
}

Scored unpaired(const std::vector<double>& scores, const std::vector<int>& labels) {
    Scored s;
    for (std::size_t i = 0; i < scores.size(); ++i) s.push_back({"s" + std::to_string(i), scores[i], labels[i], {}, {}});
    return s;
}

/// Scores on a coarse grid so ties are common.
std::vector<double> tied_scores(testing::Gen& g, std::size_t n) {
    std::vector<double> v(n);
    const long levels = g.integer(1, 12);
    for (auto& x : v) x = static_cast<double>(g.integer(0, levels)) * 0.125 - 0.5;
    return v;
}

std::vector<int> both_classes(testing::Gen& g, std::size_t n) {
    std::vector<int> y(n);
    do {
        for (auto& v : y) v = g.coin() ? 1 : 0;
    } while (std::count(y.begin(), y.end(), 1) == 0 || std::count(y.begin(), y.end(), 0) == 0);
    return y;
}

double oracle_acc(const std::vector<std::pair<double, double>>& p) {
    std::size_t wins = 0;
    for (const auto& [good, bad] : p) wins += good > bad;
    return static_cast<double>(wins) / static_cast<double>(p.size());
}

}  // namespace

TEST_CASE("ACC: documented examples") {
    CHECK(acc_minimal_pairs(pairs_from({{0.9, 0.2}, {0.3, 0.8}})).value == 0.5);
    CHECK(acc_minimal_pairs(pairs_from({{0.9, 0.2}, {0.8, 0.3}})).value == 1.0);
    // Exact ties count as failures.
    CHECK(acc_minimal_pairs(pairs_from({{0.5, 0.5}, {0.8, 0.3}})).value == 0.5);
    const auto r = acc_minimal_pairs(pairs_from({{0.9, 0.2}}));
    CHECK(r.n_pos == 1);
    CHECK(r.n_neg == 1);
    CHECK(r.metric == "acc");
}

TEST_CASE("ACC: 1000 random pairs, seed 0, against enumeration") {
    testing::Gen g(0);
    std::vector<std::pair<double, double>> p;
    for (int i = 0; i < 1000; ++i) p.emplace_back(g.uniform(), g.uniform());
    CHECK(acc_minimal_pairs(pairs_from(p)).value == oracle_acc(p));
}

TEST_CASE("ACC: incomplete pairs are listed") {
    Scored s = pairs_from({{0.9, 0.2}, {0.3, 0.8}});
    s.erase(s.begin() + 3);
    CHECK_THROWS_WITH_AS(acc_minimal_pairs(s), doctest::Contains("p1"), DataError);
    CHECK_THROWS_AS(acc_minimal_pairs(unpaired({0.1, 0.2}, {1, 0})), DataError);
    Scored same_label = pairs_from({{0.9, 0.2}});
    same_label[1].label = 1;
    CHECK_THROWS_AS(acc_minimal_pairs(same_label), DataError);
}

TEST_CASE("AUC: documented examples") {
    CHECK(auc(unpaired({0.9, 0.8, 0.8, 0.1}, {1, 1, 0, 0})).value == 0.875);
    CHECK(auc(unpaired({0.3, 0.3, 0.3, 0.3, 0.3}, {1, 0, 1, 0, 0})).value == 0.5);
    CHECK(auc(unpaired({5, 6, 1, 2}, {1, 1, 0, 0})).value == 1.0);
    CHECK_THROWS_AS(auc(unpaired({0.1, 0.2}, {1, 1})), DataError);
    const auto r = auc(unpaired({0.9, 0.8, 0.8, 0.1, 0.0}, {1, 1, 0, 0, 0}));
    CHECK(r.n_pos == 2);
    CHECK(r.n_neg == 3);
}

TEST_CASE("AUC: equals the double sum on random tied instances") {
    testing::Gen g(12);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto n = static_cast<std::size_t>(g.integer(2, 200));
        const auto x = g.coin() ? tied_scores(g, n) : std::vector<double>(n);
        std::vector<double> scores = x;
        if (trial % 2) for (auto& v : scores) v = g.normal();
        const auto y = both_classes(g, n);
        REQUIRE(std::abs(auc_value(scores, y) - testing::oracle::auc(scores, y)) <= 1e-12);
    }
}

TEST_CASE("AUC: class anti-symmetry") {
    testing::Gen g(13);
    for (int trial = 0; trial < 500; ++trial) {
        const auto n = static_cast<std::size_t>(g.integer(2, 80));
        const auto s = tied_scores(g, n);
        auto y = both_classes(g, n);
        const auto n_pos = static_cast<double>(std::count(y.begin(), y.end(), 1));
        const double pairs = n_pos * (static_cast<double>(n) - n_pos);
        const double a = auc_value(s, y);
        for (auto& v : y) v = 1 - v;
        const double flipped = auc_value(s, y);
        // The doubled win counts are exact complements; the quotients can differ from
        // 1 - a by the rounding of the final division only.
        REQUIRE(std::round(2 * a * pairs) + std::round(2 * flipped * pairs) == 2 * pairs);
        REQUIRE(std::abs(flipped - (1.0 - a)) <= 0x1p-52);
    }
}

TEST_CASE("rank invariance under strictly increasing transforms") {
    const std::vector<std::function<double(double)>> transforms = {
        [](double v) { return std::exp(v); }, [](double v) { return 3.0 * v + 7.0; },
        [](double v) { return v * v * v; }};
    testing::Gen g(14);
    for (int trial = 0; trial < 200; ++trial) {
        const auto n = static_cast<std::size_t>(g.integer(2, 60));
        const auto s = tied_scores(g, n);
        const auto y = both_classes(g, n);
        std::vector<std::pair<double, double>> p;
        for (std::size_t i = 0; i + 1 < n; i += 2) p.emplace_back(s[i], s[i + 1]);
        std::vector<double> other(n);
        for (auto& v : other) v = g.normal();
        const bool rank_defined = std::adjacent_find(s.begin(), s.end(), std::not_equal_to<>()) != s.end();

        for (const auto& f : transforms) {
            std::vector<double> t(n);
            std::transform(s.begin(), s.end(), t.begin(), f);
            REQUIRE(auc_value(t, y) == auc_value(s, y));
            std::vector<std::pair<double, double>> pt;
            for (const auto& [a, b] : p) pt.emplace_back(f(a), f(b));
            if (!p.empty()) REQUIRE(acc_minimal_pairs(pairs_from(pt)).value == acc_minimal_pairs(pairs_from(p)).value);
            if (rank_defined) REQUIRE(spearman(t, other) == spearman(s, other));
        }
    }
}

TEST_CASE("correlations") {
    const std::vector<double> x = {1, 2, 3, 4, 5};
    std::vector<double> y2(5), neg(5);
    for (int i = 0; i < 5; ++i) {
        y2[i] = 2 * x[i] + 3;
        neg[i] = -x[i];
    }
    CHECK(pearson(x, y2) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(spearman(x, x) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(spearman(x, neg) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(spearman(std::vector<double>{1, 2, 3}, std::vector<double>{3, 1, 2}) == doctest::Approx(-0.5).epsilon(1e-14));
    CHECK(midranks(std::vector<double>{3, 1, 3, 2}) == std::vector<double>{3.5, 1, 3.5, 2});

    CHECK_THROWS_AS(pearson(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), DataError);
    CHECK_THROWS_AS(spearman(std::vector<double>{1}, std::vector<double>{2}), DataError);
    CHECK_THROWS_AS(pearson(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3}), DataError);

    testing::Gen g(0);
    std::vector<double> a(10000), b(10000);
    for (auto& v : a) v = g.normal();
    for (auto& v : b) v = g.normal();
    CHECK(std::abs(pearson(a, b)) < 0.05);
    CHECK(std::abs(spearman(a, b)) < 0.05);

    testing::Gen h(15);
    for (int trial = 0; trial < 300; ++trial) {
        const auto n = static_cast<std::size_t>(h.integer(2, 40));
        auto u = tied_scores(h, n), v = tied_scores(h, n);
        u.back() += 100.0;  // never constant
        v.front() -= 100.0;
        const double r = pearson(u, v), rho = spearman(u, v);
        REQUIRE(std::abs(r) <= 1.0 + 1e-12);
        REQUIRE(std::abs(rho) <= 1.0 + 1e-12);
        REQUIRE(spearman(u, v) == doctest::Approx(pearson(midranks(u), midranks(v))).epsilon(1e-12));
    }
}

TEST_CASE("nonpairwise accuracy and decision rules") {
    const std::vector<int> y = {1, 0, 1, 1};
    const std::vector<int> flipped = {0, 1, 0, 0};
    CHECK(nonpairwise_accuracy(y, y) == 1.0);
    CHECK(nonpairwise_accuracy(flipped, y) == 0.0);
    CHECK(nonpairwise_accuracy(std::vector<int>{1, 1, 1, 1}, y) == 0.75);
    CHECK_THROWS_AS(nonpairwise_accuracy(std::vector<int>{1}, y), DataError);
    CHECK_THROWS_AS(nonpairwise_accuracy(std::vector<int>{}, std::vector<int>{}), DataError);
    CHECK(threshold_prediction(0.5) == 1);
    CHECK(threshold_prediction(std::nextafter(0.5, 0.0)) == 0);
    CHECK(metalinguistic_prediction(-1.0, -2.0) == 1);
    CHECK(metalinguistic_prediction(-2.0, -2.0) == 0);
}

TEST_CASE("variance summary") {
    CHECK(variance_summary(std::vector<double>{-1, -3}) == 1.0);
    CHECK(variance_summary(std::vector<double>{-2, -2, -2}) == 0.0);
    CHECK_THROWS_AS(variance_summary(std::vector<double>{-1}), DataError);
    testing::Gen g(16);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> v(static_cast<std::size_t>(g.integer(2, 50)));
        for (auto& x : v) x = g.normal() * 3 - 4;
        long double m = 0, s = 0;
        for (double x : v) m += x;
        m /= v.size();
        for (double x : v) s += (x - m) * (x - m);
        REQUIRE(variance_summary(v) == doctest::Approx(static_cast<double>(s / v.size())).epsilon(1e-12));
    }
}

TEST_CASE("percentile with linear interpolation") {
    const std::vector<double> v = {1, 2, 3, 4, 5};
    CHECK(percentile(v, 0.0) == 1.0);
    CHECK(percentile(v, 1.0) == 5.0);
    CHECK(percentile(v, 0.5) == 3.0);
    CHECK(percentile(v, 0.125) == doctest::Approx(1.5));
    CHECK(percentile(std::vector<double>{7}, 0.3) == 7.0);
    CHECK_THROWS_AS(percentile(std::vector<double>{}, 0.5), DataError);
}

TEST_CASE("bootstrap: degenerate, bounded, deterministic") {
    const auto perfect = pairs_from({{0.9, 0.1}, {0.8, 0.2}, {0.7, 0.6}});
    const auto ci = bootstrap_ci(perfect, Metric::Acc, {200, 1, 0.95});
    CHECK(ci.low == 1.0);
    CHECK(ci.high == 1.0);

    testing::Gen g(17);
    for (int trial = 0; trial < 20; ++trial) {
        const auto n = static_cast<std::size_t>(g.integer(4, 60));
        const auto s = tied_scores(g, n);
        const auto y = both_classes(g, n);
        const auto scored = unpaired(s, y);
        const BootstrapConfig cfg{100, static_cast<std::uint64_t>(trial), 0.9};
        const auto a = bootstrap_ci(scored, Metric::Auc, cfg);
        REQUIRE(a.low <= a.high);
        REQUIRE(a.low >= 0.0);
        REQUIRE(a.high <= 1.0);
        const auto b = bootstrap_ci(scored, Metric::Auc, cfg);
        REQUIRE(a.low == b.low);
        REQUIRE(a.high == b.high);
    }
}

TEST_CASE("bootstrap: redraw exhaustion raises") {
    // With two sentences half the draws are single-class, so one resample
    // (ten attempts) runs out for about one seed in a thousand.
    const auto two = unpaired({0.2, 0.1}, {1, 0});
    int exhausted = 0;
    for (std::uint64_t seed = 0; seed < 5000; ++seed) {
        try {
            const auto ci = bootstrap_ci(two, Metric::Auc, {1, seed, 0.95});
            REQUIRE(ci.low == 1.0);
        } catch (const NumericalError&) {
            ++exhausted;
        }
    }
    CHECK(exhausted > 0);
    CHECK(exhausted < 20);
}

TEST_CASE("paired delta") {
    testing::Gen g(18);
    std::vector<std::pair<double, double>> p;
    for (int i = 0; i < 50; ++i) p.emplace_back(g.uniform(), g.uniform());
    const auto base = pairs_from(p);
    const auto same = paired_delta(base, base, Metric::Acc, {200, 3, 0.95});
    CHECK(same.delta == 0.0);
    CHECK(same.ci.low == 0.0);
    CHECK(same.ci.high == 0.0);

    Scored better = base;
    for (auto& s : better) s.score += s.label == 1 ? 0.5 : 0.0;
    for (Metric m : {Metric::Acc, Metric::Auc}) {
        const auto d = paired_delta(base, better, m, {200, 3, 0.95});
        CHECK(d.delta > 0.0);
        CHECK(d.delta == doctest::Approx(d.augmented - d.baseline));
        CHECK(d.ci.low <= d.delta);
        CHECK(d.ci.high >= d.delta);
    }

    Scored renamed = base;
    renamed[0].id = "zzz";
    CHECK_THROWS_AS(paired_delta(base, renamed, Metric::Auc), DataError);
    Scored relabeled = base;
    relabeled[0].label = 0;
    relabeled[1].label = 1;
    CHECK_THROWS_AS(paired_delta(base, relabeled, Metric::Auc), DataError);
}

TEST_CASE("evaluate: groups and intervals") {
    const auto scored = pairs_from({{0.9, 0.1}, {0.2, 0.8}, {0.7, 0.6}, {0.5, 0.5}}, {"a", "a", "b", "b"});
    const auto acc = evaluate(scored, Metric::Acc, std::nullopt, true);
    CHECK(acc.value == 0.5);
    CHECK_FALSE(acc.ci.has_value());
    REQUIRE(acc.groups.size() == 2);
    CHECK(acc.groups[0].group == "a");
    CHECK(*acc.groups[0].value == 0.5);
    CHECK(acc.groups[0].n_pos == 2);
    CHECK(*acc.groups[1].value == 0.5);

    const auto a = evaluate(scored, Metric::Auc, BootstrapConfig{100, 0, 0.95}, true);
    REQUIRE(a.ci.has_value());
    CHECK(a.ci->low <= a.ci->high);
    CHECK(a.value == testing::oracle::auc({0.9, 0.1, 0.2, 0.8, 0.7, 0.6, 0.5, 0.5}, {1, 0, 1, 0, 1, 0, 1, 0}));

    // A group holding only positives has no AUC; it is reported without a value.
    Scored lopsided = unpaired({0.1, 0.2, 0.3}, {1, 0, 1});
    lopsided[0].group = "only-pos";
    lopsided[1].group = "mixed";
    lopsided[2].group = "mixed";
    const auto r = evaluate(lopsided, Metric::Auc, std::nullopt, true);
    REQUIRE(r.groups.size() == 2);
    CHECK(r.groups[0].group == "mixed");
    CHECK(r.groups[0].value.has_value());
    CHECK_FALSE(r.groups[1].value.has_value());

    CHECK(metric_from_string("auc") == Metric::Auc);
    CHECK_THROWS_AS(metric_from_string("f1"), UsageError);
}
