#pragma once

#include "pcast/arima.hpp"
#include "pcast/edr.hpp"
#include "pcast/gbtree.hpp"
#include "pcast/impute.hpp"
#include "pcast/tune.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace pcast {

/// Everything one per-country run needs. Loaded from a JSON config whose keys
/// mirror these field names; every field has a default except country and the
/// input locations.
struct RunConfig {
    std::string country;
    std::string panel_csv;     // either a panel CSV ...
    std::string api_base_url;  // ... or an indicators API
    std::vector<IndicatorKey> indicators;  // fetch mode: which indicators to pull
    std::string target_csv;

    int year_start = 2010;
    int year_end = 2023;
    double missing_threshold = 0.70;

    RfConfig impute;

    double edr_epsilon = 0.25;
    int edr_k = 8;
    bool two_stage_selection = false;
    int prescreen_k = 20;

    int arima_min_len = 10;
    double arima_min_accuracy = 80.0;

    Grid grid;
    int cv_folds = 3;
    SplitSpec split;
    gbt::GbtParams gbt;  // fixed boosting params (regularization etc.)

    std::vector<int> horizon_years = {2024, 2025, 2026, 2027};
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::string out_dir = "out";

    void validate() const;
};

RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json run_config_to_json(const RunConfig& cfg);
RunConfig load_run_config(const std::filesystem::path& path);

/// JSON form without execution-placement fields (out_dir, threads), which do
/// not affect any computed number. Reports echo and hash this form so that
/// identical experiments produce identical bytes wherever they run.
nlohmann::json canonical_config_json(const RunConfig& cfg);

/// FNV-1a hash of the canonical JSON form, as fixed-width hex.
std::string config_hash(const RunConfig& cfg);

}  // namespace pcast
