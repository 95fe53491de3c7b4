#pragma once

#include "pcast/arima.hpp"
#include "pcast/edr.hpp"
#include "pcast/impute.hpp"
#include "pcast/panel.hpp"
#include "pcast/run_config.hpp"
#include "pcast/tune.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace pcast {

/// Pipeline stages in execution order. Each stage consumes only the outputs
/// of the stages before it.
enum class Stage { Ingest, Impute, Select, Simulate, Tune, Evaluate, Forecast };

Stage stage_from_name(const std::string& name);

/// Everything a finished per-country run produced. generated_at is wall-clock
/// provenance for logs only; report files never include it, so reruns stay
/// byte-identical.
struct ForecastResult {
    RunConfig cfg;
    std::string hash;  // canonical-config hash
    std::string generated_at;
    std::vector<std::pair<int, double>> horizon;  // (year, predicted target)
    EvalReport eval;
    FeatureRanking ranking;
    arima::SimulationSet simulation;
    MissingnessAudit audit;
    ImputationReport imputation;
};

/// Runs ingest -> drop sparse -> impute -> rank -> simulate -> tune ->
/// evaluate -> forecast. Horizon rows are predicted from the simulated
/// feature values only; observed data outside the year window never enters.
ForecastResult run_pipeline(const RunConfig& cfg);

/// Writes the full report set into `dir`: forecast.csv, eval.csv, mape.csv,
/// features.csv, arima_exclusions.csv, simulated_features.csv,
/// grid_table.csv, plot_spi.csv and run.json. Output is deterministic for a
/// fixed config and seed.
void emit_report(const ForecastResult& result, const std::filesystem::path& dir);

/// Runs the pipeline through `last` and writes the artifacts of the completed
/// stages into cfg.out_dir. Returns the files written.
std::vector<std::string> run_stage_command(const RunConfig& cfg, Stage last);

}  // namespace pcast
