#include "pcast/impute.hpp"

#include "pcast/errors.hpp"
#include "pcast/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace pcast {

namespace {

struct Hole {
    Eigen::Index col;
    std::vector<Eigen::Index> observed;
    std::vector<Eigen::Index> missing;
};

// Features for column `col` = every other column of M, in column order.
Eigen::MatrixXd feature_matrix(const Eigen::MatrixXd& M, Eigen::Index col,
                               const std::vector<Eigen::Index>& rows) {
    Eigen::MatrixXd F(static_cast<Eigen::Index>(rows.size()), M.cols() - 1);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        Eigen::Index k = 0;
        for (Eigen::Index j = 0; j < M.cols(); ++j) {
            if (j == col) continue;
            F(static_cast<Eigen::Index>(i), k++) = M(rows[i], j);
        }
    }
    return F;
}

}  // namespace

std::pair<PanelDataset, ImputationReport> impute(const PanelDataset& ds, const RfConfig& cfg,
                                                 unsigned threads) {
    ds.validate();
    cfg.validate(std::max<Eigen::Index>(ds.n_indicators() - 1, 1));
    if (ds.n_years() < 3) throw DataError("impute: need at least 3 rows");

    ImputationReport report;
    for (Eigen::Index j = 0; j < ds.n_indicators(); ++j) {
        const Eigen::Index missing = ds.n_years() - ds.data.present.col(j).count();
        if (missing == ds.n_years())
            throw DataError("impute: column '" + ds.indicators[j].code + "' has no observed values");
        report.imputed_cells[ds.indicators[j].code] = missing;
    }

    PanelDataset out = ds;
    if (ds.data.all_present()) return {std::move(out), std::move(report)};

    Eigen::MatrixXd M = ds.data.values;
    std::vector<Hole> holes;
    for (Eigen::Index j = 0; j < ds.n_indicators(); ++j) {
        Hole hole{j, {}, {}};
        double mean = 0.0;
        for (Eigen::Index i = 0; i < ds.n_years(); ++i)
            (ds.data.present(i, j) ? hole.observed : hole.missing).push_back(i);
        for (const auto i : hole.observed) mean += M(i, j);
        mean /= static_cast<double>(hole.observed.size());
        for (const auto i : hole.missing) M(i, j) = mean;
        if (!hole.missing.empty()) holes.push_back(std::move(hole));
    }
    std::stable_sort(holes.begin(), holes.end(),
                     [](const Hole& a, const Hole& b) { return a.missing.size() < b.missing.size(); });

    const auto snapshot = [&] {
        std::vector<double> cells;
        for (const auto& hole : holes)
            for (const auto i : hole.missing) cells.push_back(M(i, hole.col));
        return cells;
    };

    std::vector<double> prev = snapshot();
    for (int sweep = 1; sweep <= cfg.max_iter; ++sweep) {
        for (const auto& hole : holes) {
            if (ds.n_indicators() < 2) break;  // no regressors; keep the mean fill
            Eigen::VectorXd y(static_cast<Eigen::Index>(hole.observed.size()));
            for (std::size_t i = 0; i < hole.observed.size(); ++i) y[static_cast<Eigen::Index>(i)] = M(hole.observed[i], hole.col);
            RfConfig forest_cfg = cfg;
            forest_cfg.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(sweep),
                                          static_cast<std::uint64_t>(hole.col));
            const RandomForestModel forest = fit_random_forest(feature_matrix(M, hole.col, hole.observed), y,
                                                               forest_cfg, {}, threads);
            const Eigen::MatrixXd F = feature_matrix(M, hole.col, hole.missing);
            for (std::size_t i = 0; i < hole.missing.size(); ++i)
                M(hole.missing[i], hole.col) = forest.predict(F.row(static_cast<Eigen::Index>(i)).transpose());
        }

        const std::vector<double> cur = snapshot();
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < cur.size(); ++i) {
            num += (cur[i] - prev[i]) * (cur[i] - prev[i]);
            den += cur[i] * cur[i];
        }
        const double change = den > 0.0 ? std::sqrt(num / den)
                                        : (num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        report.change_norms.push_back(change);
        report.iterations_run = sweep;
        prev = cur;

        if (change < cfg.tol) break;
        if (report.change_norms.size() >= 2 &&
            change > report.change_norms[report.change_norms.size() - 2])
            break;
    }

    for (const auto& hole : holes)
        for (const auto i : hole.missing) out.data.set(i, hole.col, M(i, hole.col));
    return {std::move(out), std::move(report)};
}

}  // namespace pcast
