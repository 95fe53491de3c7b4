#pragma once

#include "pcast/panel.hpp"

#include <Eigen/Core>

#include <cmath>
#include <filesystem>
#include <stdexcept>
#include <utility>
#include <vector>

namespace pcast {

/// Matching tolerance for the edit distance on real sequences. Two elements
/// match (cost 0) iff their absolute difference is at most epsilon; gap and
/// mismatch both cost 1.
struct EdrParams {
    double epsilon = 0.25;
};

/// Edit distance on real sequences over the usual DP:
///   D[i][0] = i, D[0][j] = j,
///   D[i][j] = min(D[i-1][j-1] + match(a_i, b_j), D[i-1][j] + 1, D[i][j-1] + 1).
template <typename DerivedA, typename DerivedB>
double edr_distance(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b,
                    const EdrParams& p = {}) {
    if (!(p.epsilon >= 0.0)) throw std::invalid_argument("edr_distance: epsilon must be nonnegative");
    const Eigen::Index na = a.size();
    const Eigen::Index nb = b.size();

    // Rolling single-row DP; row[j] holds D[i][j].
    std::vector<double> row(static_cast<std::size_t>(nb) + 1);
    for (Eigen::Index j = 0; j <= nb; ++j) row[static_cast<std::size_t>(j)] = static_cast<double>(j);
    for (Eigen::Index i = 1; i <= na; ++i) {
        double diag = row[0];  // D[i-1][j-1]
        row[0] = static_cast<double>(i);
        for (Eigen::Index j = 1; j <= nb; ++j) {
            const double up = row[static_cast<std::size_t>(j)];
            const double match =
                std::abs(static_cast<double>(a[i - 1]) - static_cast<double>(b[j - 1])) <= p.epsilon ? 0.0 : 1.0;
            row[static_cast<std::size_t>(j)] =
                std::min({diag + match, up + 1.0, row[static_cast<std::size_t>(j) - 1] + 1.0});
            diag = up;
        }
    }
    return row[static_cast<std::size_t>(nb)];
}

/// Candidates ordered by ascending EDR distance of their z-scored series to
/// the z-scored target; `selected` holds the first min(k, candidates) keys.
struct FeatureRanking {
    std::vector<std::pair<IndicatorKey, double>> distances;
    std::vector<IndicatorKey> selected;
};

/// Ranks every indicator column of a complete panel against the target.
/// Requires a fully observed target and complete candidate columns.
FeatureRanking rank_features(const PanelDataset& ds, const EdrParams& p, int k = 8, unsigned threads = 1);

/// `rank,indicator_code,indicator_name,edr_distance,selected` rows.
void save_ranking_csv(const FeatureRanking& ranking, const std::filesystem::path& path);

}  // namespace pcast
