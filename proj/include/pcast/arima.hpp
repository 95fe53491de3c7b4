#pragma once

#include "pcast/panel.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace pcast::arima {

struct ArimaOrder {
    int p = 0;
    int d = 0;
    int q = 0;

    friend bool operator==(const ArimaOrder& a, const ArimaOrder& b) {
        return a.p == b.p && a.d == b.d && a.q == b.q;
    }
};

/// Fitted ARIMA(p,d,q) model. phi/theta are the AR/MA coefficients on the
/// d-times differenced scale; last_values keeps the final d levels so
/// forecasts can be integrated back; diff_tail/resid_tail keep the lags the
/// forecast recursion needs.
struct ArimaModel {
    ArimaOrder order;
    double intercept = 0.0;
    Eigen::VectorXd phi;
    Eigen::VectorXd theta;
    double sigma2 = 0.0;
    double aic = 0.0;
    double in_sample_mape = 0.0;
    double css = 0.0;
    Eigen::VectorXd last_values;
    Eigen::VectorXd diff_tail;
    Eigen::VectorXd resid_tail;
};

/// d-fold first differences. Requires series length > d.
Eigen::VectorXd difference(const Eigen::VectorXd& series, int d);

/// Undoes d-fold differencing for a forecast continuation. The first d
/// entries of last_values must be the level values immediately preceding
/// diffs[0]; integrate(difference(s, d), s, d) restores s without its first
/// d entries exactly.
Eigen::VectorXd integrate(const Eigen::VectorXd& diffs, const Eigen::VectorXd& last_values, int d);

/// Conditional-sum-of-squares fit, initialized by Hannan-Rissanen and refined
/// with a deterministic Nelder-Mead simplex. Throws ModelError when the
/// optimizer yields non-finite parameters or a nonstationary AR polynomial.
ArimaModel fit(const Eigen::VectorXd& series, const ArimaOrder& order);

struct OrderAttempt {
    ArimaOrder order;
    bool ok = false;
    double aic = 0.0;
    std::string error;
};

struct OrderSelection {
    ArimaOrder order;
    double aic = 0.0;
    std::vector<OrderAttempt> attempts;
};

/// Fits every order with p,d,q in {0,1,2} that satisfies the length
/// precondition and returns the minimum-AIC success. Requires length >= 8.
OrderSelection select_order(const Eigen::VectorXd& series);

/// Recursive h-step forecast on the differenced scale (future innovations
/// zero, known residuals feeding the MA terms), integrated back to levels.
Eigen::VectorXd forecast(const ArimaModel& model, int h);

struct SimOptions {
    std::vector<int> horizon_years;
    int min_len = 10;
    double min_accuracy = 80.0;
    /// Observed-length override per indicator code (e.g. pre-imputation
    /// counts); columns not listed fall back to the dataset's own counts.
    std::map<std::string, Eigen::Index> observed_counts;
    unsigned threads = 1;
};

struct FeatureSim {
    IndicatorKey key;
    ArimaModel model;
    Eigen::VectorXd forecasts;  // one value per horizon year
};

struct Exclusion {
    IndicatorKey key;
    std::string reason;  // "too_short" or "low_accuracy"
    std::string detail;
};

struct SimulationSet {
    std::vector<int> horizon_years;
    std::vector<FeatureSim> included;
    std::vector<Exclusion> excluded;
};

/// Order-selects, fits, filters and forecasts every selected feature.
/// Features with fewer than min_len observed years are excluded as
/// too_short; fitted models with accuracy (100 - in-sample MAPE) below
/// min_accuracy are excluded as low_accuracy. Throws AllFeaturesExcluded
/// when nothing survives.
SimulationSet simulate_features(const PanelDataset& ds, const std::vector<IndicatorKey>& selected,
                                const SimOptions& opts);

/// `indicator_code,year,forecast_value` rows.
void save_simulation_csv(const SimulationSet& sim, const std::filesystem::path& path);
/// `indicator_code,reason,detail` rows.
void save_exclusions_csv(const SimulationSet& sim, const std::filesystem::path& path);

}  // namespace pcast::arima
