#include "pcast/edr.hpp"

#include "pcast/csv.hpp"
#include "pcast/errors.hpp"
#include "pcast/normalize.hpp"
#include "pcast/parallel.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_set>

namespace pcast {

FeatureRanking rank_features(const PanelDataset& ds, const EdrParams& p, int k, unsigned threads) {
    ds.validate();
    if (k < 1) throw std::invalid_argument("rank_features: k must be positive");
    if (ds.n_indicators() < 1) throw std::invalid_argument("rank_features: no candidate columns");
    if (!ds.target || !ds.target->all_present())
        throw DataError("rank_features: target must be fully observed over the ranking window");
    if (!ds.data.all_present())
        throw DataError("rank_features: candidate columns must be complete (impute first)");

    const Eigen::VectorXd target_z = zscore(ds.target->values).values;

    std::vector<double> dist(static_cast<std::size_t>(ds.n_indicators()));
    parallel_for(dist.size(), threads, [&](std::size_t j) {
        const Eigen::VectorXd cand_z = zscore(ds.data.values.col(static_cast<Eigen::Index>(j))).values;
        dist[j] = edr_distance(cand_z, target_z, p);
    });

    FeatureRanking out;
    out.distances.reserve(dist.size());
    for (std::size_t j = 0; j < dist.size(); ++j) out.distances.emplace_back(ds.indicators[j], dist[j]);
    std::sort(out.distances.begin(), out.distances.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second < b.second;
        return a.first.code < b.first.code;
    });

    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), out.distances.size());
    out.selected.reserve(take);
    for (std::size_t i = 0; i < take; ++i) out.selected.push_back(out.distances[i].first);
    return out;
}

void save_ranking_csv(const FeatureRanking& ranking, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path.string());
    out << "rank,indicator_code,indicator_name,edr_distance,selected\n";
    std::unordered_set<std::string> selected;
    for (const auto& key : ranking.selected) selected.insert(key.code);
    for (std::size_t i = 0; i < ranking.distances.size(); ++i) {
        const auto& [key, d] = ranking.distances[i];
        out << csv::join_record({std::to_string(i + 1), key.code, key.name, csv::format_double(d),
                                 selected.count(key.code) ? "1" : "0"})
            << '\n';
    }
    if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace pcast
