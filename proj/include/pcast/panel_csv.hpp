#pragma once

#include "pcast/panel.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <utility>

namespace pcast {

/// Loads one country's panel from a wide indicator CSV with header
/// `Country Name,Country Code,Indicator Name,Indicator Code,<year>...`.
/// Empty cells are missing; non-numeric non-empty cells are rejected. Years
/// outside [year_range.first, year_range.second] are ignored; years inside
/// the range absent from the file become all-missing columns, so the result
/// always covers the full requested range.
PanelDataset load_panel_csv(const std::filesystem::path& path, const std::string& country,
                            std::pair<int, int> year_range);

/// Writes the canonical wide CSV form of a panel; load_panel_csv on the
/// result restores the dataset exactly (full float precision).
void save_panel_csv(const PanelDataset& ds, const std::filesystem::path& path);

/// Sidecar target series `year,value`.
std::map<int, double> load_target_csv(const std::filesystem::path& path);
void save_target_csv(const std::map<int, double>& target, const std::filesystem::path& path);

}  // namespace pcast
