#pragma once

#include "pcast/masked.hpp"

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace pcast {

/// Identifier of one indicator column: machine code plus human-readable label.
struct IndicatorKey {
    std::string code;
    std::string name;

    friend bool operator==(const IndicatorKey& a, const IndicatorKey& b) {
        return a.code == b.code && a.name == b.name;
    }
};

/// One country's year-by-indicator panel with explicit missingness, plus an
/// optional target series aligned to the same years.
///
/// Shape invariants (checked by validate()): years strictly increasing, one
/// matrix row per year, one column per indicator, unique indicator codes,
/// target (when set) aligned to years.
struct PanelDataset {
    std::string country;
    std::vector<int> years;
    std::vector<IndicatorKey> indicators;
    MaskedMatrix data;
    std::optional<MaskedVector> target;

    Eigen::Index n_years() const { return static_cast<Eigen::Index>(years.size()); }
    Eigen::Index n_indicators() const { return static_cast<Eigen::Index>(indicators.size()); }

    std::optional<Eigen::Index> find_indicator(const std::string& code) const;
    std::optional<Eigen::Index> find_year(int year) const;

    /// Throws std::invalid_argument when a shape invariant is violated.
    void validate() const;

    friend bool operator==(const PanelDataset& a, const PanelDataset& b) {
        return a.country == b.country && a.years == b.years && a.indicators == b.indicators &&
               a.data == b.data && a.target == b.target;
    }
};

/// Outcome of the sparsity screen: per-column missing fractions and the
/// retained/dropped partition (retained + dropped covers every input column).
struct MissingnessAudit {
    std::vector<std::pair<IndicatorKey, double>> fractions;
    std::vector<IndicatorKey> retained;
    std::vector<std::pair<IndicatorKey, double>> dropped;
};

/// Removes indicator columns whose missing fraction strictly exceeds
/// `threshold`. The target series is never dropped.
std::pair<PanelDataset, MissingnessAudit> drop_sparse(const PanelDataset& ds, double threshold = 0.70);

/// Attaches a target series given as year -> value. Every supplied year must
/// be one of ds.years; years without a supplied value stay missing.
PanelDataset attach_target(PanelDataset ds, const std::map<int, double>& target);

}  // namespace pcast
