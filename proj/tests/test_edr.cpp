#include "pcast/edr.hpp"
#include "pcast/errors.hpp"
#include "pcast/normalize.hpp"

#include "support/oracles.hpp"

#include <doctest.h>

#include <random>

using namespace pcast;

namespace {

Eigen::VectorXd to_vec(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

TEST_CASE("zscore moments and special cases") {
    SUBCASE("constant series maps to zeros") {
        const NormalizedSeries n = zscore(to_vec({1.0, 1.0, 1.0}));
        CHECK(n.mu == 1.0);
        CHECK(n.sigma == 0.0);
        CHECK(n.values.isZero(0.0));
    }
    SUBCASE("two-point series") {
        const NormalizedSeries n = zscore(to_vec({0.0, 2.0}));
        CHECK(n.mu == 1.0);
        CHECK(n.sigma == 1.0);  // population std
        CHECK(n.values[0] == -1.0);
        CHECK(n.values[1] == 1.0);
    }
    SUBCASE("unit moments after normalization") {
        std::mt19937_64 rng(7);
        std::normal_distribution<double> gauss(5.0, 3.0);
        Eigen::VectorXd x(40);
        for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = gauss(rng);
        const NormalizedSeries n = zscore(x);
        CHECK(std::abs(n.values.mean()) < 1e-9);
        const double sd = std::sqrt(n.values.array().square().sum() / static_cast<double>(x.size()));
        CHECK(std::abs(sd - 1.0) < 1e-9);
    }
    SUBCASE("idempotence for non-constant input") {
        const Eigen::VectorXd x = to_vec({3.0, -1.0, 4.0, 1.0, 5.0});
        const Eigen::VectorXd once = zscore(x).values;
        const Eigen::VectorXd twice = zscore(once).values;
        CHECK((once - twice).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("empty input rejected") {
        CHECK_THROWS_AS(zscore(Eigen::VectorXd()), std::invalid_argument);
    }
}

TEST_CASE("edr_distance base cases") {
    const Eigen::VectorXd s = to_vec({0.3, 1.2, -0.7, 0.0});
    CHECK(edr_distance(s, s, {0.0}) == 0.0);
    CHECK(edr_distance(s, s, {1.0}) == 0.0);
    CHECK(edr_distance(Eigen::VectorXd(), s, {0.5}) == 4.0);
    CHECK(edr_distance(s, Eigen::VectorXd(), {0.5}) == 4.0);
    // 3x3 DP table by hand: one substitution suffices.
    CHECK(edr_distance(to_vec({0.0, 1.0}), to_vec({0.0, 3.0}), {0.5}) == 1.0);
    CHECK_THROWS_AS(edr_distance(s, s, {-0.1}), std::invalid_argument);
}

TEST_CASE("edr_distance equals the naive recursion and satisfies its invariants") {
    std::mt19937_64 rng(42);
    const std::vector<double> alphabet = {-1.0, -0.5, 0.0, 0.5, 1.0};
    std::uniform_int_distribution<std::size_t> pick_len(0, 7);
    std::uniform_int_distribution<std::size_t> pick_sym(0, alphabet.size() - 1);
    const std::vector<double> epsilons = {0.0, 0.25, 0.6, 1.1};

    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> a(pick_len(rng)), b(pick_len(rng));
        for (auto& v : a) v = alphabet[pick_sym(rng)];
        for (auto& v : b) v = alphabet[pick_sym(rng)];
        const Eigen::VectorXd va = to_vec(a), vb = to_vec(b);

        double prev = -1.0;
        for (std::size_t e = 0; e < epsilons.size(); ++e) {
            const EdrParams p{epsilons[e]};
            const double dp = edr_distance(va, vb, p);
            CHECK(dp == oracles::edr_naive(a, b, p.epsilon));
            CHECK(dp == edr_distance(vb, va, p));  // symmetry
            const double lo = static_cast<double>(a.size() > b.size() ? a.size() - b.size() : b.size() - a.size());
            const double hi = static_cast<double>(std::max(a.size(), b.size()));
            CHECK(dp >= lo);
            CHECK(dp <= hi);
            if (e > 0) CHECK(dp <= prev);  // larger epsilon never increases the distance
            prev = dp;
        }
    }
}

namespace {

PanelDataset ranking_panel() {
    PanelDataset ds;
    ds.country = "SYN";
    for (int y = 2010; y <= 2023; ++y) ds.years.push_back(y);
    const Eigen::Index n = ds.n_years();

    Eigen::VectorXd target(n);
    for (Eigen::Index i = 0; i < n; ++i) target[i] = 50.0 + 2.0 * static_cast<double>(i);
    ds.target = MaskedVector::complete(target);

    std::mt19937_64 rng(11);
    std::normal_distribution<double> gauss(0.0, 1.0);

    Eigen::VectorXd noisy = target;
    for (Eigen::Index i = 0; i < n; ++i) noisy[i] += 0.05 * gauss(rng);
    Eigen::VectorXd shuffled = target;
    std::shuffle(shuffled.data(), shuffled.data() + n, rng);
    const Eigen::VectorXd constant = Eigen::VectorXd::Constant(n, 3.0);
    const Eigen::VectorXd copy = target;

    ds.indicators = {{"NOISY", "target plus tiny noise"},
                     {"SHUF", "shuffled target"},
                     {"CONST", "constant"},
                     {"COPY", "exact copy"}};
    Eigen::MatrixXd values(n, 4);
    values.col(0) = noisy;
    values.col(1) = shuffled;
    values.col(2) = constant;
    values.col(3) = copy;
    ds.data = MaskedMatrix::complete(values);
    return ds;
}

}  // namespace

TEST_CASE("rank_features orders candidates by EDR distance to the target") {
    const PanelDataset ds = ranking_panel();
    const EdrParams p{0.25};
    const FeatureRanking ranking = rank_features(ds, p, 2);

    REQUIRE(ranking.distances.size() == 4);
    CHECK(ranking.distances[0].first.code == "COPY");
    CHECK(ranking.distances[0].second == 0.0);
    CHECK(ranking.distances[1].first.code == "NOISY");
    CHECK(ranking.distances[3].first.code == "CONST");  // constant is farthest
    REQUIRE(ranking.selected.size() == 2);
    CHECK(ranking.selected[0].code == "COPY");
    CHECK(ranking.selected[1].code == "NOISY");

    // Distances must match an independent DP on the z-scored series.
    for (const auto& [key, dist] : ranking.distances) {
        const auto col = *ds.find_indicator(key.code);
        std::vector<double> a, b;
        const Eigen::VectorXd az = zscore(ds.data.values.col(col)).values;
        const Eigen::VectorXd bz = zscore(ds.target->values).values;
        a.assign(az.data(), az.data() + az.size());
        b.assign(bz.data(), bz.data() + bz.size());
        CHECK(dist == oracles::edr_naive(a, b, p.epsilon));
    }

    // Nondecreasing distances along the list.
    for (std::size_t i = 1; i < ranking.distances.size(); ++i)
        CHECK(ranking.distances[i - 1].second <= ranking.distances[i].second);
}

TEST_CASE("rank_features saturates k and validates inputs") {
    const PanelDataset ds = ranking_panel();
    CHECK(rank_features(ds, {0.25}, 50).selected.size() == 4);
    CHECK_THROWS_AS(rank_features(ds, {0.25}, 0), std::invalid_argument);

    PanelDataset holey = ds;
    holey.target->present[3] = false;
    CHECK_THROWS_AS(rank_features(holey, {0.25}, 2), DataError);

    PanelDataset incomplete = ds;
    incomplete.data.present(2, 1) = false;
    CHECK_THROWS_AS(rank_features(incomplete, {0.25}, 2), DataError);
}

TEST_CASE("rank_features is schedule independent") {
    const PanelDataset ds = ranking_panel();
    const FeatureRanking seq = rank_features(ds, {0.25}, 3, 1);
    const FeatureRanking par = rank_features(ds, {0.25}, 3, 4);
    REQUIRE(seq.distances.size() == par.distances.size());
    for (std::size_t i = 0; i < seq.distances.size(); ++i) {
        CHECK(seq.distances[i].first.code == par.distances[i].first.code);
        CHECK(seq.distances[i].second == par.distances[i].second);
    }
}
