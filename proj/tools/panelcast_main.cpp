#include "pcast/errors.hpp"
#include "pcast/pipeline.hpp"
#include "pcast/run_config.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

namespace {

struct GlobalOpts {
    std::string config_path;
    std::string out_dir;
    bool has_seed = false;
    std::uint64_t seed = 0;
    bool has_threads = false;
    unsigned threads = 1;
    bool verbose = false;
};

pcast::RunConfig load_config(const GlobalOpts& opts) {
    pcast::RunConfig cfg = pcast::load_run_config(opts.config_path);
    if (opts.has_seed) cfg.seed = opts.seed;
    if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
    if (opts.has_threads) cfg.threads = opts.threads;
    return cfg;
}

void log_files(const std::vector<std::string>& files, bool verbose) {
    if (!verbose) return;
    for (const auto& file : files) std::cerr << "wrote " << file << '\n';
}

int run_one(const pcast::RunConfig& cfg, bool verbose) {
    const pcast::ForecastResult result = pcast::run_pipeline(cfg);
    pcast::emit_report(result, cfg.out_dir);
    if (verbose) {
        std::cerr << cfg.country << " [" << result.generated_at << ", config " << result.hash
                  << "]: train MAPE " << result.eval.train_mape << "%, test MAPE "
                  << result.eval.test_mape << "%\n";
        for (const auto& [year, value] : result.horizon)
            std::cerr << "  " << year << " -> " << value << '\n';
    }
    std::cout << cfg.out_dir << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"panelcast: indicator-panel forecasting pipeline"};
    app.require_subcommand(1);

    GlobalOpts opts;
    app.add_option("--config", opts.config_path, "Run configuration (JSON)");
    app.add_option("--out", opts.out_dir, "Output directory override");
    app.add_option("--seed", opts.seed, "Global seed override")->each([&](const std::string&) {
        opts.has_seed = true;
    });
    app.add_option("--threads", opts.threads, "Worker threads for intra-stage parallelism")
        ->each([&](const std::string&) { opts.has_threads = true; });
    app.add_flag("--verbose", opts.verbose, "Chatty progress on stderr");

    const std::vector<std::pair<std::string, std::string>> stages = {
        {"ingest", "Load the panel, attach the target, drop sparse columns"},
        {"impute", "Stages through random-forest imputation"},
        {"select", "Stages through EDR feature ranking"},
        {"simulate", "Stages through ARIMA filtering and simulation"},
        {"tune", "Stages through the hyperparameter grid search"},
        {"evaluate", "Stages through train/test evaluation"},
        {"forecast", "Full pipeline including horizon forecasts"},
    };
    for (const auto& [name, help] : stages) app.add_subcommand(name, help)->fallthrough();
    app.add_subcommand("report", "Full pipeline, then write the report file set")->fallthrough();
    app.add_subcommand("run", "Full pipeline, then write the report file set")->fallthrough();
    auto* run_all = app.add_subcommand("run-all", "Run several configs in sequence");
    run_all->fallthrough();
    std::vector<std::string> all_configs;
    run_all->add_option("configs", all_configs, "Config files, one per country run")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        const CLI::App* sub = app.get_subcommands().front();
        const std::string name = sub->get_name();

        if (name == "run-all") {
            int rc = 0;
            for (const auto& path : all_configs) {
                GlobalOpts one = opts;
                one.config_path = path;
                one.out_dir.clear();  // per-config out_dir; --out would collide across runs
                rc = std::max(rc, run_one(load_config(one), opts.verbose));
            }
            return rc;
        }

        if (opts.config_path.empty()) {
            std::cerr << "error: --config is required\n";
            return 1;
        }
        const pcast::RunConfig cfg = load_config(opts);

        if (name == "run" || name == "report" || name == "forecast") {
            if (name == "forecast") {
                log_files(pcast::run_stage_command(cfg, pcast::Stage::Forecast), opts.verbose);
                std::cout << cfg.out_dir << '\n';
                return 0;
            }
            return run_one(cfg, opts.verbose);
        }

        log_files(pcast::run_stage_command(cfg, pcast::stage_from_name(name)), opts.verbose);
        std::cout << cfg.out_dir << '\n';
        return 0;
    } catch (const pcast::ModelError& ex) {
        std::cerr << "modeling error: " << ex.what() << '\n';
        return 3;
    } catch (const pcast::DataError& ex) {
        std::cerr << "data error: " << ex.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& ex) {
        std::cerr << "usage error: " << ex.what() << '\n';
        return 1;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 3;
    }
}
