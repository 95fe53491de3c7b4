#include "pcast/errors.hpp"
#include "pcast/impute.hpp"
#include "pcast/random_forest.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace pcast;

TEST_CASE("forest reproduces a constant target exactly") {
    Eigen::MatrixXd X(6, 2);
    X << 1, 9, 2, 8, 3, 7, 4, 6, 5, 5, 6, 4;
    const Eigen::VectorXd y = Eigen::VectorXd::Constant(6, 4.25);
    RfConfig cfg;
    cfg.n_trees = 25;
    const RandomForestModel model = fit_random_forest(X, y, cfg);
    CHECK(model.predict(X.row(0).transpose()) == 4.25);
    CHECK(model.predict(Eigen::Vector2d(100.0, -3.0)) == 4.25);
}

TEST_CASE("forest tracks y = x on a dense grid") {
    const Eigen::Index n = 200;
    Eigen::MatrixXd X(n, 1);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        X(i, 0) = static_cast<double>(i) / static_cast<double>(n - 1);
        y[i] = X(i, 0);
    }
    RfConfig cfg;
    cfg.n_trees = 100;
    cfg.seed = 3;
    const RandomForestModel model = fit_random_forest(X, y, cfg);
    for (const double x : {0.25, 0.5, 0.77}) {
        const double pred = model.predict(Eigen::VectorXd::Constant(1, x));
        CHECK(std::abs(pred - x) < 0.1);
    }
}

TEST_CASE("forest degenerate and error cases") {
    Eigen::MatrixXd X(2, 1);
    X << 1.0, 1.0;
    const Eigen::VectorXd y = Eigen::Vector2d(3.0, 3.0);
    const RandomForestModel model = fit_random_forest(X, y, {});
    CHECK(model.predict(Eigen::VectorXd::Constant(1, 1.0)) == 3.0);

    CHECK_THROWS_AS(fit_random_forest(Eigen::MatrixXd(1, 1), Eigen::VectorXd(1), {}),
                    std::invalid_argument);
    CHECK_THROWS_AS(fit_random_forest(Eigen::MatrixXd(4, 0), Eigen::VectorXd(4), {}),
                    std::invalid_argument);
}

TEST_CASE("forest is deterministic and schedule independent") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd X(30, 3);
    Eigen::VectorXd y(30);
    for (Eigen::Index i = 0; i < 30; ++i) {
        for (Eigen::Index j = 0; j < 3; ++j) X(i, j) = gauss(rng);
        y[i] = X(i, 0) - 2.0 * X(i, 2) + 0.1 * gauss(rng);
    }
    RfConfig cfg;
    cfg.n_trees = 40;
    cfg.seed = 99;
    const RandomForestModel a = fit_random_forest(X, y, cfg, {}, 1);
    const RandomForestModel b = fit_random_forest(X, y, cfg, {}, 4);
    const Eigen::VectorXd probe = Eigen::Vector3d(0.2, -0.3, 0.8);
    CHECK(a.predict(probe) == b.predict(probe));
    CHECK(a.tree_seeds == b.tree_seeds);
}

namespace {

PanelDataset linear_panel(std::uint64_t seed, Eigen::Index rows, Eigen::Index cols,
                          double missing_rate, Eigen::MatrixXd* truth_out) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    PanelDataset ds;
    ds.country = "SYN";
    for (Eigen::Index i = 0; i < rows; ++i) ds.years.push_back(2000 + static_cast<int>(i));
    Eigen::VectorXd latent(rows);
    for (Eigen::Index i = 0; i < rows; ++i) latent[i] = gauss(rng);

    Eigen::MatrixXd truth(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        ds.indicators.push_back({"L" + std::to_string(j), ""});
        const double a = 2.0 * gauss(rng);
        const double b = 1.0 + unif(rng);
        for (Eigen::Index i = 0; i < rows; ++i) truth(i, j) = a + b * latent[i] + 0.05 * gauss(rng);
    }
    ds.data = MaskedMatrix(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        Eigen::Index observed = 0;
        for (Eigen::Index i = 0; i < rows; ++i)
            if (unif(rng) >= missing_rate) {
                ds.data.set(i, j, truth(i, j));
                ++observed;
            }
        if (observed == 0) ds.data.set(0, j, truth(0, j));  // keep the impute precondition
    }
    if (truth_out) *truth_out = truth;
    return ds;
}

}  // namespace

TEST_CASE("impute is a no-op on complete data") {
    Eigen::MatrixXd truth;
    PanelDataset ds = linear_panel(1, 12, 4, 0.0, &truth);
    const auto [out, report] = impute(ds, {});
    CHECK(out == ds);
    CHECK(report.iterations_run == 0);
    CHECK(report.change_norms.empty());
    for (const auto& [code, count] : report.imputed_cells) CHECK(count == 0);
}

TEST_CASE("impute recovers a strongly correlated pair") {
    PanelDataset ds;
    ds.country = "SYN";
    for (int i = 0; i < 14; ++i) ds.years.push_back(2010 + i);
    ds.indicators = {{"A", ""}, {"B", ""}};
    ds.data = MaskedMatrix(14, 2);
    for (Eigen::Index i = 0; i < 14; ++i) {
        const double a = 1.0 + static_cast<double>(i);
        ds.data.set(i, 0, a);
        if (i != 6) ds.data.set(i, 1, 2.0 * a);  // one hole in b = 2a
    }
    RfConfig cfg;
    cfg.seed = 17;
    const auto [out, report] = impute(ds, cfg);
    CHECK(out.data.all_present());
    const double expected = 2.0 * 7.0;
    CHECK(std::abs(out.data.values(6, 1) - expected) / expected < 0.15);
    CHECK(report.imputed_cells.at("B") == 1);
    CHECK(report.imputed_cells.at("A") == 0);
}

TEST_CASE("impute keeps a constant column constant") {
    PanelDataset ds;
    ds.country = "SYN";
    for (int i = 0; i < 10; ++i) ds.years.push_back(2010 + i);
    ds.indicators = {{"C", ""}, {"X", ""}};
    ds.data = MaskedMatrix(10, 2);
    for (Eigen::Index i = 0; i < 10; ++i) {
        if (i != 4) ds.data.set(i, 0, 2.5);
        ds.data.set(i, 1, static_cast<double>(i));
    }
    const auto [out, report] = impute(ds, {});
    CHECK(out.data.values(4, 0) == 2.5);
}

TEST_CASE("impute never touches observed cells and fills every hole") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const PanelDataset ds = linear_panel(seed, 20, 5, 0.25, nullptr);
        RfConfig cfg;
        cfg.seed = seed;
        const auto [out, report] = impute(ds, cfg);
        CHECK(out.data.all_present());
        for (Eigen::Index j = 0; j < ds.n_indicators(); ++j)
            for (Eigen::Index i = 0; i < ds.n_years(); ++i)
                if (ds.data.present(i, j)) CHECK(same_bits(out.data.values(i, j), ds.data.values(i, j)));
        CHECK(report.iterations_run <= cfg.max_iter);
        for (const double norm : report.change_norms) CHECK(norm >= 0.0);
        // Stopping rule: last sweep hit tol, rose, or exhausted max_iter.
        const auto& norms = report.change_norms;
        REQUIRE_FALSE(norms.empty());
        const double last = norms.back();
        const bool converged = last < cfg.tol;
        const bool rose = norms.size() >= 2 && last > norms[norms.size() - 2];
        const bool exhausted = report.iterations_run == cfg.max_iter;
        CHECK((converged || rose || exhausted));
        // Every earlier sweep must NOT have satisfied a stopping rule.
        for (std::size_t k = 0; k + 1 < norms.size(); ++k) {
            CHECK(norms[k] >= cfg.tol);
            if (k >= 1) CHECK(norms[k] <= norms[k - 1]);
        }
    }
}

TEST_CASE("forest imputation beats column means on linear MCAR data") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        Eigen::MatrixXd truth;
        const PanelDataset ds = linear_panel(seed + 100, 40, 6, 0.20, &truth);
        RfConfig cfg;
        cfg.seed = seed;
        const auto [out, report] = impute(ds, cfg);

        double rf_sse = 0.0, mean_sse = 0.0;
        Eigen::Index holes = 0;
        for (Eigen::Index j = 0; j < ds.n_indicators(); ++j) {
            double mean = 0.0;
            Eigen::Index observed = 0;
            for (Eigen::Index i = 0; i < ds.n_years(); ++i)
                if (ds.data.present(i, j)) {
                    mean += ds.data.values(i, j);
                    ++observed;
                }
            mean /= static_cast<double>(observed);
            for (Eigen::Index i = 0; i < ds.n_years(); ++i)
                if (!ds.data.present(i, j)) {
                    rf_sse += std::pow(out.data.values(i, j) - truth(i, j), 2);
                    mean_sse += std::pow(mean - truth(i, j), 2);
                    ++holes;
                }
        }
        REQUIRE(holes > 0);
        CHECK(std::sqrt(rf_sse / static_cast<double>(holes)) <=
              std::sqrt(mean_sse / static_cast<double>(holes)));
    }
}

TEST_CASE("impute determinism across runs and thread counts") {
    const PanelDataset ds = linear_panel(9, 16, 5, 0.3, nullptr);
    RfConfig cfg;
    cfg.seed = 1234;
    const auto [a, ra] = impute(ds, cfg, 1);
    const auto [b, rb] = impute(ds, cfg, 1);
    const auto [c, rc] = impute(ds, cfg, 4);
    CHECK(a == b);
    CHECK(a == c);
    CHECK(ra.change_norms == rb.change_norms);
    CHECK(ra.change_norms == rc.change_norms);
}

TEST_CASE("impute rejects hopeless inputs") {
    PanelDataset ds;
    ds.country = "SYN";
    for (int i = 0; i < 6; ++i) ds.years.push_back(2010 + i);
    ds.indicators = {{"A", ""}, {"B", ""}};
    ds.data = MaskedMatrix(6, 2);
    for (Eigen::Index i = 0; i < 6; ++i) ds.data.set(i, 0, 1.0 * static_cast<double>(i));
    CHECK_THROWS_AS(impute(ds, {}), DataError);  // column B fully missing

    PanelDataset tiny;
    tiny.country = "SYN";
    tiny.years = {2010, 2011};
    tiny.indicators = {{"A", ""}};
    tiny.data = MaskedMatrix(2, 1);
    tiny.data.set(0, 0, 1.0);
    tiny.data.set(1, 0, 2.0);
    CHECK_THROWS_AS(impute(tiny, {}), DataError);  // fewer than 3 rows
}
