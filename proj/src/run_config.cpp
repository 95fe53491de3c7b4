#include "pcast/run_config.hpp"

#include "pcast/errors.hpp"

#include <fstream>
#include <sstream>

namespace pcast {

namespace {

using nlohmann::json;

template <typename T>
void read_field(const json& j, const char* key, T& out) {
    if (const auto it = j.find(key); it != j.end()) out = it->get<T>();
}

void check_known_keys(const json& j, std::initializer_list<const char*> known, const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* k : known)
            if (key == k) {
                ok = true;
                break;
            }
        if (!ok) throw std::invalid_argument("config: unknown key '" + key + "' in " + where);
    }
}

}  // namespace

void RunConfig::validate() const {
    if (country.empty()) throw std::invalid_argument("config: country is required");
    if (panel_csv.empty() == api_base_url.empty())
        throw std::invalid_argument("config: exactly one of panel_csv and api_base_url is required");
    if (!api_base_url.empty() && indicators.empty())
        throw std::invalid_argument("config: fetch mode requires an indicators list");
    if (target_csv.empty()) throw std::invalid_argument("config: target_csv is required");
    if (year_start > year_end) throw std::invalid_argument("config: year_start must not exceed year_end");
    if (!(missing_threshold > 0.0 && missing_threshold < 1.0))
        throw std::invalid_argument("config: missing_threshold must lie in (0, 1)");
    if (!(edr_epsilon >= 0.0)) throw std::invalid_argument("config: edr_epsilon must be nonnegative");
    if (edr_k < 1 || prescreen_k < 1) throw std::invalid_argument("config: selection sizes must be positive");
    if (arima_min_len < 1) throw std::invalid_argument("config: arima_min_len must be positive");
    if (cv_folds < 1) throw std::invalid_argument("config: cv_folds must be positive");
    if (split.n_test < 1) throw std::invalid_argument("config: split.n_test must be positive");
    if (grid.combination_count() == 0) throw std::invalid_argument("config: grid must be nonempty");
    for (std::size_t i = 0; i < horizon_years.size(); ++i) {
        if (horizon_years[i] <= year_end)
            throw std::invalid_argument("config: horizon years must lie strictly after the year window");
        if (i > 0 && horizon_years[i] <= horizon_years[i - 1])
            throw std::invalid_argument("config: horizon years must be strictly increasing");
    }
    gbt.validate();
}

RunConfig run_config_from_json(const json& j) {
    if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
    check_known_keys(j,
                     {"country", "panel_csv", "api_base_url", "indicators", "target_csv", "year_start",
                      "year_end", "missing_threshold", "impute", "edr", "arima", "grid", "cv_folds",
                      "split", "gbt", "horizon_years", "seed", "threads", "out_dir"},
                     "top level");

    RunConfig cfg;
    read_field(j, "country", cfg.country);
    read_field(j, "panel_csv", cfg.panel_csv);
    read_field(j, "api_base_url", cfg.api_base_url);
    read_field(j, "target_csv", cfg.target_csv);
    read_field(j, "year_start", cfg.year_start);
    read_field(j, "year_end", cfg.year_end);
    read_field(j, "missing_threshold", cfg.missing_threshold);
    read_field(j, "cv_folds", cfg.cv_folds);
    read_field(j, "horizon_years", cfg.horizon_years);
    read_field(j, "seed", cfg.seed);
    read_field(j, "threads", cfg.threads);
    read_field(j, "out_dir", cfg.out_dir);

    if (const auto it = j.find("indicators"); it != j.end())
        for (const auto& entry : *it) {
            IndicatorKey key;
            key.code = entry.at("code").get<std::string>();
            key.name = entry.value("name", key.code);
            cfg.indicators.push_back(std::move(key));
        }

    if (const auto it = j.find("impute"); it != j.end()) {
        check_known_keys(*it, {"n_trees", "m_try", "min_leaf", "max_iter", "tol"}, "impute");
        read_field(*it, "n_trees", cfg.impute.n_trees);
        read_field(*it, "m_try", cfg.impute.m_try);
        read_field(*it, "min_leaf", cfg.impute.min_leaf);
        read_field(*it, "max_iter", cfg.impute.max_iter);
        read_field(*it, "tol", cfg.impute.tol);
    }

    if (const auto it = j.find("edr"); it != j.end()) {
        check_known_keys(*it, {"epsilon", "k", "two_stage_selection", "prescreen_k"}, "edr");
        read_field(*it, "epsilon", cfg.edr_epsilon);
        read_field(*it, "k", cfg.edr_k);
        read_field(*it, "two_stage_selection", cfg.two_stage_selection);
        read_field(*it, "prescreen_k", cfg.prescreen_k);
    }

    if (const auto it = j.find("arima"); it != j.end()) {
        check_known_keys(*it, {"min_len", "min_accuracy"}, "arima");
        read_field(*it, "min_len", cfg.arima_min_len);
        read_field(*it, "min_accuracy", cfg.arima_min_accuracy);
    }

    if (const auto it = j.find("grid"); it != j.end()) {
        check_known_keys(*it, {"learning_rate", "max_depth", "n_estimators", "subsample"}, "grid");
        read_field(*it, "learning_rate", cfg.grid.learning_rate);
        read_field(*it, "max_depth", cfg.grid.max_depth);
        read_field(*it, "n_estimators", cfg.grid.n_estimators);
        read_field(*it, "subsample", cfg.grid.subsample);
    }

    if (const auto it = j.find("split"); it != j.end()) {
        check_known_keys(*it, {"n_test"}, "split");
        long long n_test = cfg.split.n_test;
        read_field(*it, "n_test", n_test);
        cfg.split.n_test = static_cast<Eigen::Index>(n_test);
    }

    if (const auto it = j.find("gbt"); it != j.end()) {
        check_known_keys(*it, {"reg_lambda", "reg_alpha", "gamma", "min_child_weight"}, "gbt");
        read_field(*it, "reg_lambda", cfg.gbt.reg_lambda);
        read_field(*it, "reg_alpha", cfg.gbt.reg_alpha);
        read_field(*it, "gamma", cfg.gbt.gamma);
        read_field(*it, "min_child_weight", cfg.gbt.min_child_weight);
    }

    cfg.validate();
    return cfg;
}

json run_config_to_json(const RunConfig& cfg) {
    json j;
    j["country"] = cfg.country;
    if (!cfg.panel_csv.empty()) j["panel_csv"] = cfg.panel_csv;
    if (!cfg.api_base_url.empty()) j["api_base_url"] = cfg.api_base_url;
    if (!cfg.indicators.empty()) {
        json list = json::array();
        for (const auto& key : cfg.indicators) list.push_back({{"code", key.code}, {"name", key.name}});
        j["indicators"] = list;
    }
    j["target_csv"] = cfg.target_csv;
    j["year_start"] = cfg.year_start;
    j["year_end"] = cfg.year_end;
    j["missing_threshold"] = cfg.missing_threshold;
    j["impute"] = {{"n_trees", cfg.impute.n_trees}, {"m_try", cfg.impute.m_try},
                   {"min_leaf", cfg.impute.min_leaf}, {"max_iter", cfg.impute.max_iter},
                   {"tol", cfg.impute.tol}};
    j["edr"] = {{"epsilon", cfg.edr_epsilon}, {"k", cfg.edr_k},
                {"two_stage_selection", cfg.two_stage_selection}, {"prescreen_k", cfg.prescreen_k}};
    j["arima"] = {{"min_len", cfg.arima_min_len}, {"min_accuracy", cfg.arima_min_accuracy}};
    j["grid"] = {{"learning_rate", cfg.grid.learning_rate}, {"max_depth", cfg.grid.max_depth},
                 {"n_estimators", cfg.grid.n_estimators}, {"subsample", cfg.grid.subsample}};
    j["cv_folds"] = cfg.cv_folds;
    j["split"] = {{"n_test", cfg.split.n_test}};
    j["gbt"] = {{"reg_lambda", cfg.gbt.reg_lambda}, {"reg_alpha", cfg.gbt.reg_alpha},
                {"gamma", cfg.gbt.gamma}, {"min_child_weight", cfg.gbt.min_child_weight}};
    j["horizon_years"] = cfg.horizon_years;
    j["seed"] = cfg.seed;
    j["threads"] = cfg.threads;
    j["out_dir"] = cfg.out_dir;
    return j;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config: " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw std::invalid_argument("config: invalid JSON in " + path.string());
    try {
        return run_config_from_json(j);
    } catch (const json::exception& ex) {
        throw std::invalid_argument("config: " + path.string() + ": " + ex.what());
    }
}

nlohmann::json canonical_config_json(const RunConfig& cfg) {
    nlohmann::json j = run_config_to_json(cfg);
    j.erase("out_dir");
    j.erase("threads");
    return j;
}

std::string config_hash(const RunConfig& cfg) {
    const std::string canonical = canonical_config_json(cfg).dump();
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (const unsigned char c : canonical) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    std::ostringstream out;
    out << std::hex;
    out.width(16);
    out.fill('0');
    out << hash;
    return out.str();
}

}  // namespace pcast
