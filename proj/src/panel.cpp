#include "pcast/panel.hpp"

#include "pcast/errors.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

namespace pcast {

std::optional<Eigen::Index> PanelDataset::find_indicator(const std::string& code) const {
    for (std::size_t j = 0; j < indicators.size(); ++j)
        if (indicators[j].code == code) return static_cast<Eigen::Index>(j);
    return std::nullopt;
}

std::optional<Eigen::Index> PanelDataset::find_year(int year) const {
    const auto it = std::lower_bound(years.begin(), years.end(), year);
    if (it == years.end() || *it != year) return std::nullopt;
    return static_cast<Eigen::Index>(it - years.begin());
}

void PanelDataset::validate() const {
    if (years.empty()) throw std::invalid_argument("PanelDataset: no years");
    for (std::size_t i = 1; i < years.size(); ++i)
        if (years[i] <= years[i - 1]) throw std::invalid_argument("PanelDataset: years must be strictly increasing");
    if (data.rows() != n_years() || data.cols() != n_indicators())
        throw std::invalid_argument("PanelDataset: data shape does not match years x indicators");
    std::unordered_set<std::string> codes;
    for (const auto& key : indicators) {
        if (key.code.empty()) throw std::invalid_argument("PanelDataset: empty indicator code");
        if (!codes.insert(key.code).second)
            throw std::invalid_argument("PanelDataset: duplicate indicator code '" + key.code + "'");
    }
    if (target && target->size() != n_years())
        throw std::invalid_argument("PanelDataset: target length does not match years");
}

std::pair<PanelDataset, MissingnessAudit> drop_sparse(const PanelDataset& ds, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0))
        throw std::invalid_argument("drop_sparse: threshold must lie in (0, 1)");
    ds.validate();

    MissingnessAudit audit;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = 0; j < ds.n_indicators(); ++j) {
        const double frac = ds.data.column_missing_fraction(j);
        audit.fractions.emplace_back(ds.indicators[j], frac);
        if (frac > threshold) {
            audit.dropped.emplace_back(ds.indicators[j], frac);
        } else {
            audit.retained.push_back(ds.indicators[j]);
            keep.push_back(j);
        }
    }

    PanelDataset out;
    out.country = ds.country;
    out.years = ds.years;
    out.target = ds.target;
    out.indicators.reserve(keep.size());
    out.data = MaskedMatrix(ds.n_years(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
        const Eigen::Index j = keep[k];
        out.indicators.push_back(ds.indicators[j]);
        out.data.values.col(static_cast<Eigen::Index>(k)) = ds.data.values.col(j);
        out.data.present.col(static_cast<Eigen::Index>(k)) = ds.data.present.col(j);
    }
    return {std::move(out), std::move(audit)};
}

PanelDataset attach_target(PanelDataset ds, const std::map<int, double>& target) {
    ds.validate();
    MaskedVector t(ds.n_years());
    for (const auto& [year, value] : target) {
        const auto row = ds.find_year(year);
        if (!row) throw DataError("attach_target: year " + std::to_string(year) + " is outside the dataset years");
        t.set(*row, value);
    }
    ds.target = std::move(t);
    return ds;
}

}  // namespace pcast
