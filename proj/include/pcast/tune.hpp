#pragma once

#include "pcast/gbtree.hpp"
#include "pcast/masked.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace pcast {

/// Hyperparameter candidates, swept as a full cross product. The defaults
/// enumerate 3 x 2 x 2 x 3 = 36 combinations.
struct Grid {
    std::vector<double> learning_rate = {0.01, 0.1, 0.2};
    std::vector<int> max_depth = {3, 6};
    std::vector<int> n_estimators = {100, 200};
    std::vector<double> subsample = {0.8, 0.9, 1.0};

    std::size_t combination_count() const;

    /// Cross product in a fixed order (learning_rate, then max_depth, then
    /// n_estimators, then subsample); combination index = position here.
    /// Non-swept fields are copied from `base`.
    std::vector<gbt::GbtParams> combinations(const gbt::GbtParams& base) const;
};

struct SplitSpec {
    Eigen::Index n_test = 2;
};

/// Time-ordered design matrix plus complete target, one row per year.
struct SupervisedFrame {
    std::vector<int> years;
    std::vector<std::string> feature_codes;
    MaskedMatrix X;
    Eigen::VectorXd y;

    Eigen::Index rows() const { return X.rows(); }
    SupervisedFrame slice(Eigen::Index start, Eigen::Index count) const;
};

/// Last n_test rows become the test set, everything earlier trains; no
/// shuffling. Requires rows > n_test >= 1.
std::pair<SupervisedFrame, SupervisedFrame> split_train_test(const SupervisedFrame& frame,
                                                             const SplitSpec& spec);

struct GridSearchOptions {
    int folds = 3;
    Eigen::Index block = 2;  // validation rows per fold, clamped to fit tiny inputs
    std::uint64_t seed = 0;
    unsigned threads = 1;
    gbt::GbtParams base;  // fixed (non-swept) boosting parameters
};

struct GridRow {
    gbt::GbtParams params;
    double cv_mape = 0.0;
};

struct GridSearchResult {
    gbt::GbtParams best;
    std::vector<GridRow> table;
};

/// Expanding-window cross-validation: fold j trains on an initial segment and
/// validates on the block immediately after it, with the blocks tiling the
/// tail of the training rows. Scores are validation MAPE averaged over folds;
/// ties prefer smaller n_estimators, then smaller max_depth, then smaller
/// learning_rate, then larger subsample. Each combination's fit seed derives
/// from (seed, combination index).
GridSearchResult grid_search(const SupervisedFrame& train, const Grid& grid,
                             const GridSearchOptions& opts);

struct YearPair {
    int year;
    double actual;
    double predicted;
};

struct EvalReport {
    double train_mape = 0.0;
    double test_mape = 0.0;
    std::vector<YearPair> train_pairs;
    std::vector<YearPair> test_pairs;
    gbt::GbtParams best_params;
    std::vector<GridRow> grid_table;
};

/// Fits `params` on train and reports MAPE plus per-year pairs on both sides.
/// grid_table is left for the caller to fill.
EvalReport evaluate(const SupervisedFrame& train, const SupervisedFrame& test,
                    const gbt::GbtParams& params);

/// `learning_rate,max_depth,n_estimators,subsample,cv_mape` rows.
void save_grid_csv(const std::vector<GridRow>& table, const std::filesystem::path& path);
/// `year,actual,predicted,split` rows.
void save_eval_csv(const EvalReport& report, const std::filesystem::path& path);

}  // namespace pcast
