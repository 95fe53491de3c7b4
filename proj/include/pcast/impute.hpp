#pragma once

#include "pcast/panel.hpp"
#include "pcast/random_forest.hpp"

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace pcast {

/// Diagnostics of one imputation run. change_norms[k] is the normalized RMS
/// difference of the imputed cells between sweep k+1 and sweep k
/// (sqrt(sum (new-old)^2 / sum new^2) over imputed cells only).
struct ImputationReport {
    int iterations_run = 0;
    std::vector<double> change_norms;
    std::map<std::string, Eigen::Index> imputed_cells;
};

/// Iterative random-forest imputation of the indicator columns: initialize
/// missing cells with column means, visit columns by ascending missingness,
/// fit a forest per column on its observed rows (all other columns as
/// features, using the current imputations) and predict its missing cells.
/// Stops when the change norm drops below cfg.tol, increases over the
/// previous sweep, or cfg.max_iter sweeps have run. Observed cells are
/// returned bit-identical; the output has no missing indicator cells.
std::pair<PanelDataset, ImputationReport> impute(const PanelDataset& ds, const RfConfig& cfg,
                                                 unsigned threads = 1);

}  // namespace pcast
