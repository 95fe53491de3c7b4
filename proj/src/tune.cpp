#include "pcast/tune.hpp"

#include "pcast/csv.hpp"
#include "pcast/errors.hpp"
#include "pcast/metrics.hpp"
#include "pcast/parallel.hpp"
#include "pcast/rng.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace pcast {

std::size_t Grid::combination_count() const {
    return learning_rate.size() * max_depth.size() * n_estimators.size() * subsample.size();
}

std::vector<gbt::GbtParams> Grid::combinations(const gbt::GbtParams& base) const {
    std::vector<gbt::GbtParams> out;
    out.reserve(combination_count());
    for (const double lr : learning_rate)
        for (const int depth : max_depth)
            for (const int trees : n_estimators)
                for (const double sub : subsample) {
                    gbt::GbtParams params = base;
                    params.learning_rate = lr;
                    params.max_depth = depth;
                    params.n_estimators = trees;
                    params.subsample = sub;
                    out.push_back(params);
                }
    return out;
}

SupervisedFrame SupervisedFrame::slice(Eigen::Index start, Eigen::Index count) const {
    SupervisedFrame out;
    out.feature_codes = feature_codes;
    out.years.assign(years.begin() + start, years.begin() + start + count);
    out.X.values = X.values.middleRows(start, count);
    out.X.present = X.present.middleRows(start, count);
    out.y = y.segment(start, count);
    return out;
}

std::pair<SupervisedFrame, SupervisedFrame> split_train_test(const SupervisedFrame& frame,
                                                             const SplitSpec& spec) {
    if (spec.n_test < 1) throw std::invalid_argument("split_train_test: n_test must be >= 1");
    if (frame.rows() <= spec.n_test)
        throw std::invalid_argument("split_train_test: need more rows than n_test");
    return {frame.slice(0, frame.rows() - spec.n_test), frame.slice(frame.rows() - spec.n_test, spec.n_test)};
}

GridSearchResult grid_search(const SupervisedFrame& train, const Grid& grid,
                             const GridSearchOptions& opts) {
    if (grid.combination_count() == 0) throw std::invalid_argument("grid_search: empty grid");
    if (opts.folds < 1) throw std::invalid_argument("grid_search: folds must be >= 1");
    const Eigen::Index n = train.rows();
    if (n < opts.folds + 2) throw std::invalid_argument("grid_search: too few rows for the fold scheme");

    // Validation blocks tile the tail; the block size shrinks when the rows
    // cannot support folds blocks plus at least 2 leading training rows.
    const Eigen::Index block = std::max<Eigen::Index>(
        1, std::min<Eigen::Index>(opts.block, (n - 2) / static_cast<Eigen::Index>(opts.folds)));

    auto combos = grid.combinations(opts.base);
    for (std::size_t i = 0; i < combos.size(); ++i)
        combos[i].seed = derive_seed(opts.seed, static_cast<std::uint64_t>(i));

    std::vector<GridRow> table(combos.size());
    parallel_for(combos.size(), opts.threads, [&](std::size_t i) {
        const gbt::GbtParams& params = combos[i];
        double score_sum = 0.0;
        for (int fold = 0; fold < opts.folds; ++fold) {
            const Eigen::Index val_start = n - static_cast<Eigen::Index>(opts.folds - fold) * block;
            const SupervisedFrame fit_part = train.slice(0, val_start);
            const SupervisedFrame val_part = train.slice(val_start, block);
            const gbt::GbtModel model = gbt::fit(fit_part.X, fit_part.y, params);
            score_sum += mape(val_part.y, gbt::predict(model, val_part.X));
        }
        table[i] = {params, score_sum / static_cast<double>(opts.folds)};
    });

    const auto better = [](const GridRow& a, const GridRow& b) {
        if (a.cv_mape != b.cv_mape) return a.cv_mape < b.cv_mape;
        if (a.params.n_estimators != b.params.n_estimators) return a.params.n_estimators < b.params.n_estimators;
        if (a.params.max_depth != b.params.max_depth) return a.params.max_depth < b.params.max_depth;
        if (a.params.learning_rate != b.params.learning_rate) return a.params.learning_rate < b.params.learning_rate;
        return a.params.subsample > b.params.subsample;
    };
    std::size_t best = 0;
    for (std::size_t i = 1; i < table.size(); ++i)
        if (better(table[i], table[best])) best = i;

    return {table[best].params, std::move(table)};
}

EvalReport evaluate(const SupervisedFrame& train, const SupervisedFrame& test,
                    const gbt::GbtParams& params) {
    if (train.rows() < 1 || test.rows() < 1) throw std::invalid_argument("evaluate: empty train or test");

    const gbt::GbtModel model = gbt::fit(train.X, train.y, params);
    EvalReport report;
    report.best_params = params;

    const Eigen::VectorXd train_pred = gbt::predict(model, train.X);
    const Eigen::VectorXd test_pred = gbt::predict(model, test.X);
    report.train_mape = mape(train.y, train_pred);
    report.test_mape = mape(test.y, test_pred);
    for (Eigen::Index i = 0; i < train.rows(); ++i)
        report.train_pairs.push_back({train.years[static_cast<std::size_t>(i)], train.y[i], train_pred[i]});
    for (Eigen::Index i = 0; i < test.rows(); ++i)
        report.test_pairs.push_back({test.years[static_cast<std::size_t>(i)], test.y[i], test_pred[i]});
    return report;
}

void save_grid_csv(const std::vector<GridRow>& table, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path.string());
    out << "learning_rate,max_depth,n_estimators,subsample,cv_mape\n";
    for (const auto& row : table)
        out << csv::format_double(row.params.learning_rate) << ',' << row.params.max_depth << ','
            << row.params.n_estimators << ',' << csv::format_double(row.params.subsample) << ','
            << csv::format_double(row.cv_mape) << '\n';
    if (!out) throw DataError("write failed: " + path.string());
}

void save_eval_csv(const EvalReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path.string());
    out << "year,actual,predicted,split\n";
    for (const auto& pair : report.train_pairs)
        out << pair.year << ',' << csv::format_double(pair.actual) << ','
            << csv::format_double(pair.predicted) << ",train\n";
    for (const auto& pair : report.test_pairs)
        out << pair.year << ',' << csv::format_double(pair.actual) << ','
            << csv::format_double(pair.predicted) << ",test\n";
    if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace pcast
