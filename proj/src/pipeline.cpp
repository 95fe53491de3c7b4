#include "pcast/pipeline.hpp"

#include "pcast/csv.hpp"
#include "pcast/errors.hpp"
#include "pcast/metrics.hpp"
#include "pcast/panel_csv.hpp"
#include "pcast/rng.hpp"
#include "pcast/wdi_client.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <map>

namespace pcast {

namespace {

// Stage-seed stream ids; every stage draws from its own substream of the
// global seed so stages stay independent and reruns reproduce exactly.
enum SeedStream : std::uint64_t { kImputeStream = 1, kGridStream = 2, kFinalFitStream = 3 };

template <typename Fn>
auto run_stage(const char* name, Fn&& fn) {
    try {
        return fn();
    } catch (const AllFeaturesExcluded& ex) {
        throw AllFeaturesExcluded(std::string(name) + ": " + ex.what());
    } catch (const DataError& ex) {
        throw DataError(std::string(name) + ": " + ex.what());
    } catch (const ModelError& ex) {
        throw ModelError(std::string(name) + ": " + ex.what());
    } catch (const std::invalid_argument& ex) {
        throw std::invalid_argument(std::string(name) + ": " + ex.what());
    }
}

struct PipelineState {
    RunConfig cfg;
    PanelDataset panel;  // post drop_sparse, target attached
    MissingnessAudit audit;
    std::map<std::string, Eigen::Index> observed_counts;
    PanelDataset imputed;
    ImputationReport imputation;
    FeatureRanking ranking;
    arima::SimulationSet simulation;
    SupervisedFrame frame;  // target-observed rows x included features
    GridSearchResult search;
    EvalReport eval;
    std::vector<std::pair<int, double>> horizon;
};

PanelDataset ingest(const RunConfig& cfg) {
    PanelDataset ds;
    if (!cfg.panel_csv.empty()) {
        ds = load_panel_csv(cfg.panel_csv, cfg.country, {cfg.year_start, cfg.year_end});
    } else {
        FetchOptions opts;
        opts.threads = cfg.threads;
        ds = fetch_indicators(cfg.api_base_url, cfg.country, cfg.indicators,
                              {cfg.year_start, cfg.year_end}, opts);
    }
    // The sidecar target may cover a longer history; only window years attach.
    std::map<int, double> target;
    for (const auto& [year, value] : load_target_csv(cfg.target_csv))
        if (year >= cfg.year_start && year <= cfg.year_end) target[year] = value;
    return attach_target(std::move(ds), target);
}

// Rows restricted to the years with an observed target value; feature columns
// restricted to the simulation survivors, in simulation order.
SupervisedFrame build_frame(const PanelDataset& complete, const arima::SimulationSet& sim) {
    const MaskedVector& target = *complete.target;
    SupervisedFrame frame;
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < complete.n_years(); ++i)
        if (target.present[i]) {
            rows.push_back(i);
            frame.years.push_back(complete.years[static_cast<std::size_t>(i)]);
        }

    frame.X = MaskedMatrix(static_cast<Eigen::Index>(rows.size()),
                           static_cast<Eigen::Index>(sim.included.size()));
    frame.y = Eigen::VectorXd(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) frame.y[static_cast<Eigen::Index>(r)] = target.values[rows[r]];
    for (std::size_t j = 0; j < sim.included.size(); ++j) {
        frame.feature_codes.push_back(sim.included[j].key.code);
        const auto col = *complete.find_indicator(sim.included[j].key.code);
        for (std::size_t r = 0; r < rows.size(); ++r)
            frame.X.set(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j),
                        complete.data.values(rows[r], col));
    }
    return frame;
}

PipelineState run_until(const RunConfig& cfg, Stage last) {
    cfg.validate();
    PipelineState state;
    state.cfg = cfg;

    PanelDataset loaded = run_stage("ingest", [&] { return ingest(cfg); });
    auto dropped = run_stage("drop_sparse", [&] { return drop_sparse(loaded, cfg.missing_threshold); });
    state.panel = std::move(dropped.first);
    state.audit = std::move(dropped.second);
    for (Eigen::Index j = 0; j < state.panel.n_indicators(); ++j)
        state.observed_counts[state.panel.indicators[static_cast<std::size_t>(j)].code] =
            state.panel.data.present.col(j).count();
    if (last == Stage::Ingest) return state;

    RfConfig impute_cfg = cfg.impute;
    impute_cfg.seed = derive_seed(cfg.seed, kImputeStream);
    auto imputed = run_stage("impute", [&] { return impute(state.panel, impute_cfg, cfg.threads); });
    state.imputed = std::move(imputed.first);
    state.imputation = std::move(imputed.second);
    if (last == Stage::Impute) return state;

    const MaskedVector& target = *state.imputed.target;
    const Eigen::Index target_rows = target.observed_count();
    const Eigen::Index needed = cfg.split.n_test + cfg.cv_folds + 2;
    if (target_rows < needed)
        throw DataError("select: target observed for " + std::to_string(target_rows) +
                        " window years; need at least " + std::to_string(needed));

    state.ranking = run_stage("select", [&] {
        // Ranking runs over the target-observed rows only.
        PanelDataset window = state.imputed;
        std::vector<Eigen::Index> rows;
        for (Eigen::Index i = 0; i < state.imputed.n_years(); ++i)
            if (target.present[i]) rows.push_back(i);
        if (rows.size() != static_cast<std::size_t>(state.imputed.n_years())) {
            window.years.clear();
            window.data = MaskedMatrix(static_cast<Eigen::Index>(rows.size()), state.imputed.n_indicators());
            window.target = MaskedVector(static_cast<Eigen::Index>(rows.size()));
            for (std::size_t r = 0; r < rows.size(); ++r) {
                window.years.push_back(state.imputed.years[static_cast<std::size_t>(rows[r])]);
                for (Eigen::Index j = 0; j < state.imputed.n_indicators(); ++j)
                    window.data.set(static_cast<Eigen::Index>(r), j, state.imputed.data.values(rows[r], j));
                window.target->set(static_cast<Eigen::Index>(r), target.values[rows[r]]);
            }
        }
        const int k = cfg.two_stage_selection ? cfg.prescreen_k : cfg.edr_k;
        return rank_features(window, EdrParams{cfg.edr_epsilon}, k, cfg.threads);
    });
    if (last == Stage::Select) return state;

    state.simulation = run_stage("simulate", [&] {
        arima::SimOptions opts;
        opts.horizon_years = cfg.horizon_years;
        opts.min_len = cfg.arima_min_len;
        opts.min_accuracy = cfg.arima_min_accuracy;
        opts.observed_counts = state.observed_counts;
        opts.threads = cfg.threads;
        return arima::simulate_features(state.imputed, state.ranking.selected, opts);
    });
    state.frame = build_frame(state.imputed, state.simulation);
    if (last == Stage::Simulate) return state;

    auto split = run_stage("split", [&] { return split_train_test(state.frame, cfg.split); });
    state.search = run_stage("tune", [&] {
        GridSearchOptions opts;
        opts.folds = cfg.cv_folds;
        opts.seed = derive_seed(cfg.seed, kGridStream);
        opts.threads = cfg.threads;
        opts.base = cfg.gbt;
        return grid_search(split.first, cfg.grid, opts);
    });
    if (last == Stage::Tune) return state;

    state.eval = run_stage("evaluate", [&] { return evaluate(split.first, split.second, state.search.best); });
    state.eval.grid_table = state.search.table;
    if (last == Stage::Evaluate) return state;

    run_stage("forecast", [&] {
        // Refit on every target-observed row for the horizon predictions; the
        // simulated feature values are the only inputs past the window.
        gbt::GbtParams final_params = state.search.best;
        final_params.seed = derive_seed(cfg.seed, kFinalFitStream);
        const gbt::GbtModel model = gbt::fit(state.frame.X, state.frame.y, final_params, {}, cfg.threads);
        for (std::size_t k = 0; k < cfg.horizon_years.size(); ++k) {
            Eigen::VectorXd x(static_cast<Eigen::Index>(state.simulation.included.size()));
            for (std::size_t j = 0; j < state.simulation.included.size(); ++j)
                x[static_cast<Eigen::Index>(j)] = state.simulation.included[j].forecasts[static_cast<Eigen::Index>(k)];
            state.horizon.emplace_back(cfg.horizon_years[k], gbt::predict(model, x));
        }
        return 0;
    });
    return state;
}

std::string utc_now() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

ForecastResult package(PipelineState&& state) {
    ForecastResult result;
    result.cfg = state.cfg;
    result.hash = config_hash(state.cfg);
    result.generated_at = utc_now();
    result.horizon = std::move(state.horizon);
    result.eval = std::move(state.eval);
    result.ranking = std::move(state.ranking);
    result.simulation = std::move(state.simulation);
    result.audit = std::move(state.audit);
    result.imputation = std::move(state.imputation);
    return result;
}

void write_mape_csv(const EvalReport& eval, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path.string());
    out << "train_mape,test_mape\n"
        << csv::format_double(eval.train_mape) << ',' << csv::format_double(eval.test_mape) << '\n';
}

void write_forecast_csv(const std::vector<std::pair<int, double>>& horizon,
                        const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path.string());
    out << "year,spi_predicted\n";
    for (const auto& [year, value] : horizon) out << year << ',' << csv::format_double(value) << '\n';
}

// Long format for the actual-vs-predicted chart: in-sample actuals, in-sample
// predictions (train and test), then horizon forecasts.
void write_plot_csv(const ForecastResult& result, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path.string());
    out << "year,series,value\n";
    for (const auto& pair : result.eval.train_pairs)
        out << pair.year << ",actual," << csv::format_double(pair.actual) << '\n';
    for (const auto& pair : result.eval.test_pairs)
        out << pair.year << ",actual," << csv::format_double(pair.actual) << '\n';
    for (const auto& pair : result.eval.train_pairs)
        out << pair.year << ",predicted," << csv::format_double(pair.predicted) << '\n';
    for (const auto& pair : result.eval.test_pairs)
        out << pair.year << ",predicted," << csv::format_double(pair.predicted) << '\n';
    for (const auto& [year, value] : result.horizon)
        out << year << ",forecast," << csv::format_double(value) << '\n';
}

void write_run_json(const ForecastResult& result, const std::filesystem::path& path) {
    nlohmann::json j;
    j["tool"] = "panelcast";
    j["format"] = 1;
    j["country"] = result.cfg.country;
    j["config"] = canonical_config_json(result.cfg);
    j["config_hash"] = result.hash;
    j["seed"] = result.cfg.seed;

    Eigen::Index imputed_cells = 0;
    for (const auto& [code, count] : result.imputation.imputed_cells) imputed_cells += count;
    j["counts"] = {{"indicators_input", result.audit.fractions.size()},
                   {"indicators_retained", result.audit.retained.size()},
                   {"indicators_dropped", result.audit.dropped.size()},
                   {"imputed_cells", imputed_cells},
                   {"imputation_sweeps", result.imputation.iterations_run},
                   {"features_ranked", result.ranking.distances.size()},
                   {"features_selected", result.ranking.selected.size()},
                   {"features_included", result.simulation.included.size()},
                   {"features_excluded", result.simulation.excluded.size()}};
    j["metrics"] = {{"train_mape", result.eval.train_mape}, {"test_mape", result.eval.test_mape}};
    j["best_params"] = {{"learning_rate", result.eval.best_params.learning_rate},
                        {"max_depth", result.eval.best_params.max_depth},
                        {"n_estimators", result.eval.best_params.n_estimators},
                        {"subsample", result.eval.best_params.subsample}};
    nlohmann::json horizon = nlohmann::json::array();
    for (const auto& [year, value] : result.horizon)
        horizon.push_back({{"year", year}, {"spi_predicted", value}});
    j["horizon"] = horizon;

    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path.string());
    out << j.dump(2) << '\n';
}

}  // namespace

Stage stage_from_name(const std::string& name) {
    if (name == "ingest") return Stage::Ingest;
    if (name == "impute") return Stage::Impute;
    if (name == "select") return Stage::Select;
    if (name == "simulate") return Stage::Simulate;
    if (name == "tune") return Stage::Tune;
    if (name == "evaluate") return Stage::Evaluate;
    if (name == "forecast") return Stage::Forecast;
    throw std::invalid_argument("unknown stage '" + name + "'");
}

ForecastResult run_pipeline(const RunConfig& cfg) {
    return package(run_until(cfg, Stage::Forecast));
}

void emit_report(const ForecastResult& result, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_forecast_csv(result.horizon, dir / "forecast.csv");
    save_eval_csv(result.eval, dir / "eval.csv");
    write_mape_csv(result.eval, dir / "mape.csv");
    save_ranking_csv(result.ranking, dir / "features.csv");
    arima::save_exclusions_csv(result.simulation, dir / "arima_exclusions.csv");
    arima::save_simulation_csv(result.simulation, dir / "simulated_features.csv");
    save_grid_csv(result.eval.grid_table, dir / "grid_table.csv");
    write_plot_csv(result, dir / "plot_spi.csv");
    write_run_json(result, dir / "run.json");
}

std::vector<std::string> run_stage_command(const RunConfig& cfg, Stage last) {
    PipelineState state = run_until(cfg, last);
    const std::filesystem::path dir(cfg.out_dir);
    std::filesystem::create_directories(dir);
    std::vector<std::string> written;
    const auto add = [&](const std::filesystem::path& p) { written.push_back(p.string()); };

    save_panel_csv(state.panel, dir / "panel.csv");
    add(dir / "panel.csv");
    {
        std::map<int, double> target;
        const MaskedVector& t = *state.panel.target;
        for (Eigen::Index i = 0; i < state.panel.n_years(); ++i)
            if (t.present[i]) target[state.panel.years[static_cast<std::size_t>(i)]] = t.values[i];
        save_target_csv(target, dir / "target.csv");
        add(dir / "target.csv");
    }
    if (last == Stage::Ingest) return written;

    save_panel_csv(state.imputed, dir / "panel_imputed.csv");
    add(dir / "panel_imputed.csv");
    if (last == Stage::Impute) return written;

    save_ranking_csv(state.ranking, dir / "features.csv");
    add(dir / "features.csv");
    if (last == Stage::Select) return written;

    arima::save_simulation_csv(state.simulation, dir / "simulated_features.csv");
    arima::save_exclusions_csv(state.simulation, dir / "arima_exclusions.csv");
    add(dir / "simulated_features.csv");
    add(dir / "arima_exclusions.csv");
    if (last == Stage::Simulate) return written;

    save_grid_csv(state.search.table, dir / "grid_table.csv");
    add(dir / "grid_table.csv");
    if (last == Stage::Tune) return written;

    save_eval_csv(state.eval, dir / "eval.csv");
    write_mape_csv(state.eval, dir / "mape.csv");
    add(dir / "eval.csv");
    add(dir / "mape.csv");
    if (last == Stage::Evaluate) return written;

    ForecastResult result = package(std::move(state));
    emit_report(result, dir);
    for (const char* name : {"forecast.csv", "plot_spi.csv", "run.json"}) add(dir / name);
    return written;
}

}  // namespace pcast
