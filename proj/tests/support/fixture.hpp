#pragma once

// Synthetic per-country fixture shared by the pipeline tests and the
// acceptance suite: 14 annual rows, 30 candidate indicators of which 10 are
// smooth functions (linear / AR(1) / logistic trends) of a latent factor and
// 20 are noise, a monotone target with 1% relative noise, and 20% MCAR holes
// in the indicator cells.

#include "pcast/panel.hpp"
#include "pcast/panel_csv.hpp"
#include "pcast/run_config.hpp"

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <unistd.h>

namespace fixture {

constexpr int kFirstYear = 2010;
constexpr int kLastYear = 2023;
constexpr int kYears = kLastYear - kFirstYear + 1;
constexpr int kSignal = 10;
constexpr int kNoise = 20;

inline pcast::PanelDataset make_country(std::uint64_t seed, double missing_rate = 0.20) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    pcast::PanelDataset ds;
    ds.country = "SYN";
    for (int y = kFirstYear; y <= kLastYear; ++y) ds.years.push_back(y);

    Eigen::VectorXd latent(kYears);
    for (int t = 0; t < kYears; ++t) latent[t] = static_cast<double>(t) / (kYears - 1);

    const int total = kSignal + kNoise;
    ds.data = pcast::MaskedMatrix(kYears, total);
    for (int j = 0; j < total; ++j) {
        ds.indicators.push_back({"IND" + std::to_string(j), "synthetic indicator " + std::to_string(j)});
        Eigen::VectorXd column(kYears);
        if (j < kSignal) {
            const double offset = 10.0 + 90.0 * unif(rng);
            const double scale = (unif(rng) < 0.5 ? -1.0 : 1.0) * (10.0 + 30.0 * unif(rng));
            double smooth = 0.0;
            for (int t = 0; t < kYears; ++t) {
                double shape = 0.0;
                switch (j % 3) {
                    case 0: shape = latent[t]; break;
                    case 1:
                        smooth = 0.7 * smooth + 0.3 * latent[t];
                        shape = smooth;
                        break;
                    default: shape = 1.0 / (1.0 + std::exp(-8.0 * (latent[t] - 0.5))); break;
                }
                column[t] = offset + scale * shape + 0.02 * std::abs(scale) * gauss(rng);
            }
        } else {
            const double level = 20.0 + 200.0 * unif(rng);
            const double vol = 1.0 + 9.0 * unif(rng);
            double walk = 0.0;
            const bool walking = unif(rng) < 0.5;
            for (int t = 0; t < kYears; ++t) {
                walk += vol * gauss(rng);
                column[t] = level + (walking ? walk : vol * gauss(rng));
            }
        }
        for (int t = 0; t < kYears; ++t)
            if (unif(rng) >= missing_rate) ds.data.set(t, j, column[t]);
    }

    // Monotone target on the latent factor, 1% relative noise, complete.
    pcast::MaskedVector target(kYears);
    for (int t = 0; t < kYears; ++t) {
        const double clean = 55.0 + 25.0 * std::pow(latent[t], 1.2);
        target.set(t, clean * (1.0 + 0.01 * gauss(rng)));
    }
    ds.target = target;
    ds.validate();
    return ds;
}

struct FixtureFiles {
    std::filesystem::path panel_csv;
    std::filesystem::path target_csv;
};

inline FixtureFiles write_country(const pcast::PanelDataset& ds, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    FixtureFiles files{dir / "panel.csv", dir / "target.csv"};
    pcast::save_panel_csv(ds, files.panel_csv);
    std::map<int, double> target;
    for (Eigen::Index i = 0; i < ds.n_years(); ++i)
        if (ds.target->present[i]) target[ds.years[static_cast<std::size_t>(i)]] = ds.target->values[i];
    pcast::save_target_csv(target, files.target_csv);
    return files;
}

inline pcast::RunConfig run_config(const FixtureFiles& files, const std::filesystem::path& out_dir,
                                   std::uint64_t seed) {
    pcast::RunConfig cfg;
    cfg.country = "SYN";
    cfg.panel_csv = files.panel_csv.string();
    cfg.target_csv = files.target_csv.string();
    cfg.seed = seed;
    cfg.out_dir = out_dir.string();
    return cfg;
}

/// Unique scratch directory under the system temp dir, removed on destruction.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path = std::filesystem::temp_directory_path() /
               ("panelcast_" + tag + "_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter.fetch_add(1)));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
};

}  // namespace fixture
