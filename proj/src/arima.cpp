#include "pcast/arima.hpp"

#include "pcast/csv.hpp"
#include "pcast/errors.hpp"
#include "pcast/parallel.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace pcast::arima {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPenalty = 1e100;
constexpr double kArRootMargin = 0.97;
// The MA margin is tighter: residual feedback near the invertibility
// boundary lets the zero-initialized recursion reach realized sums of
// squares far below their expectation, which order selection then chases.
constexpr double kMaRootMargin = 0.80;

// Largest companion-matrix eigenvalue modulus of the AR polynomial; the
// process is stationary iff this is < 1.
double max_ar_root_modulus(const Eigen::VectorXd& phi) {
    const Eigen::Index p = phi.size();
    if (p == 0) return 0.0;
    if (p == 1) return std::abs(phi[0]);
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
    companion.row(0) = phi.transpose();
    companion.block(1, 0, p - 1, p - 1).setIdentity();
    return companion.eigenvalues().cwiseAbs().maxCoeff();
}

struct CssProblem {
    const Eigen::VectorXd& w;
    int p;
    int q;
    double wbar;  // conditioning value for pre-sample AR lags

    CssProblem(const Eigen::VectorXd& w_, int p_, int q_) : w(w_), p(p_), q(q_), wbar(w_.mean()) {}

    // Residuals over the full window, conditioning pre-sample AR lags on the
    // series mean and pre-sample innovations on zero. A window that does not
    // depend on p keeps AIC comparisons across orders fair.
    Eigen::VectorXd residuals(double c, const Eigen::VectorXd& phi, const Eigen::VectorXd& theta) const {
        const Eigen::Index n = w.size();
        Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
        for (Eigen::Index t = 0; t < n; ++t) {
            double pred = c;
            for (int i = 1; i <= p; ++i) pred += phi[i - 1] * (t - i >= 0 ? w[t - i] : wbar);
            for (int j = 1; j <= q; ++j)
                if (t - j >= 0) pred += theta[j - 1] * e[t - j];
            e[t] = w[t] - pred;
        }
        return e;
    }

    double css(double c, const Eigen::VectorXd& phi, const Eigen::VectorXd& theta) const {
        return residuals(c, phi, theta).squaredNorm();
    }

    void unpack(const Eigen::VectorXd& x, double& c, Eigen::VectorXd& phi, Eigen::VectorXd& theta) const {
        c = x[0];
        phi = x.segment(1, p);
        theta = x.segment(1 + p, q);
    }

    // Objective for the simplex: CSS with barriers keeping the AR part
    // stationary and the MA part invertible, both with a margin. At the
    // boundary the zero-initialized CSS recursion reaches spuriously low
    // sums of squares, so the search stays strictly inside.
    double operator()(const Eigen::VectorXd& x) const {
        double c;
        Eigen::VectorXd phi, theta;
        unpack(x, c, phi, theta);
        if (!x.allFinite()) return kPenalty;
        const double ar_root = max_ar_root_modulus(phi);
        if (ar_root >= kArRootMargin) return kPenalty * (1.0 + ar_root);
        const double ma_root = max_ar_root_modulus(-theta);
        if (ma_root >= kMaRootMargin) return kPenalty * (1.0 + ma_root);
        const double value = css(c, phi, theta);
        return std::isfinite(value) ? value : kPenalty;
    }
};

// Deterministic Nelder-Mead: fixed initial simplex, stable ordering.
Eigen::VectorXd nelder_mead(const CssProblem& f, const Eigen::VectorXd& x0, int max_iter) {
    const Eigen::Index dim = x0.size();
    std::vector<Eigen::VectorXd> xs(static_cast<std::size_t>(dim) + 1, x0);
    std::vector<double> fs(xs.size());
    for (Eigen::Index i = 0; i < dim; ++i) xs[static_cast<std::size_t>(i) + 1][i] += std::max(0.1, 0.1 * std::abs(x0[i]));
    for (std::size_t i = 0; i < xs.size(); ++i) fs[i] = f(xs[i]);

    std::vector<std::size_t> idx(xs.size());
    const auto order = [&] {
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
    };

    for (int it = 0; it < max_iter; ++it) {
        order();
        const std::size_t best = idx.front(), worst = idx.back(), second_worst = idx[idx.size() - 2];
        if (fs[worst] - fs[best] <= 1e-12 * (std::abs(fs[best]) + 1e-12)) break;

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
        for (const std::size_t i : idx)
            if (i != worst) centroid += xs[i];
        centroid /= static_cast<double>(dim);

        const Eigen::VectorXd reflected = centroid + (centroid - xs[worst]);
        const double fr = f(reflected);
        if (fr < fs[best]) {
            const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - xs[worst]);
            const double fe = f(expanded);
            if (fe < fr) {
                xs[worst] = expanded;
                fs[worst] = fe;
            } else {
                xs[worst] = reflected;
                fs[worst] = fr;
            }
        } else if (fr < fs[second_worst]) {
            xs[worst] = reflected;
            fs[worst] = fr;
        } else {
            const Eigen::VectorXd contracted = centroid + 0.5 * (xs[worst] - centroid);
            const double fc = f(contracted);
            if (fc < fs[worst]) {
                xs[worst] = contracted;
                fs[worst] = fc;
            } else {
                for (const std::size_t i : idx) {
                    if (i == best) continue;
                    xs[i] = xs[best] + 0.5 * (xs[i] - xs[best]);
                    fs[i] = f(xs[i]);
                }
            }
        }
    }
    order();
    return xs[idx.front()];
}

Eigen::VectorXd ols(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
    return A.colPivHouseholderQr().solve(b);
}

// Hannan-Rissanen start: long-AR residuals stand in for the innovations,
// then one OLS pass over [1, w lags, residual lags].
Eigen::VectorXd hannan_rissanen(const Eigen::VectorXd& w, int p, int q) {
    const Eigen::Index n = w.size();
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(1 + p + q);
    x0[0] = w.mean();

    Eigen::VectorXd resid = Eigen::VectorXd::Zero(n);
    int L = 0;
    if (q > 0) {
        L = std::min<int>(std::max(p, q) + 2, static_cast<int>((n - 1) / 2));
        if (L >= 1 && n - L > L + 1) {
            Eigen::MatrixXd A(n - L, L + 1);
            Eigen::VectorXd b(n - L);
            for (Eigen::Index t = L; t < n; ++t) {
                A(t - L, 0) = 1.0;
                for (int i = 1; i <= L; ++i) A(t - L, i) = w[t - i];
                b[t - L] = w[t];
            }
            const Eigen::VectorXd beta = ols(A, b);
            for (Eigen::Index t = L; t < n; ++t) {
                double pred = beta[0];
                for (int i = 1; i <= L; ++i) pred += beta[i] * w[t - i];
                resid[t] = w[t] - pred;
            }
        } else {
            L = 0;
            resid = w.array() - w.mean();
        }
    }

    const Eigen::Index t0 = std::max<Eigen::Index>(p, L + q);
    const Eigen::Index rows = n - t0;
    if (rows >= 1 + p + q) {
        Eigen::MatrixXd A(rows, 1 + p + q);
        Eigen::VectorXd b(rows);
        for (Eigen::Index t = t0; t < n; ++t) {
            A(t - t0, 0) = 1.0;
            for (int i = 1; i <= p; ++i) A(t - t0, i) = w[t - i];
            for (int j = 1; j <= q; ++j) A(t - t0, p + j) = resid[t - j];
            b[t - t0] = w[t];
        }
        const Eigen::VectorXd beta = ols(A, b);
        if (beta.allFinite()) x0 = beta;
    }
    // Keep the start inside the feasible region: clamp, then shrink the
    // coefficient block until both root conditions hold with margin.
    for (int i = 1; i < 1 + p + q; ++i) x0[i] = std::clamp(x0[i], -0.95, 0.95);
    for (int tries = 0; tries < 20; ++tries) {
        const double ar_root = max_ar_root_modulus(x0.segment(1, p));
        const double ma_root = max_ar_root_modulus(-x0.segment(1 + p, q));
        if (ar_root < 0.95 && ma_root < 0.85) break;
        x0.segment(1, p + q) *= 0.5;
    }
    return x0;
}

double level_mape_from_residuals(const Eigen::VectorXd& series, const Eigen::VectorXd& e, int d) {
    // One-step level prediction at time t+d is y_{t+d} - e_t, so the level
    // APE term is |e_t| / |y_{t+d}|. Zero actuals are skipped.
    double sum = 0.0;
    Eigen::Index count = 0;
    double max_abs_e = 0.0;
    for (Eigen::Index t = 0; t < e.size(); ++t) {
        const double actual = series[t + d];
        max_abs_e = std::max(max_abs_e, std::abs(e[t]));
        if (actual == 0.0) continue;
        sum += std::abs(e[t]) / std::abs(actual);
        ++count;
    }
    if (count == 0) return max_abs_e == 0.0 ? 0.0 : kInf;
    return 100.0 * sum / static_cast<double>(count);
}

}  // namespace

Eigen::VectorXd difference(const Eigen::VectorXd& series, int d) {
    if (d < 0) throw std::invalid_argument("difference: d must be nonnegative");
    if (series.size() <= d) throw std::invalid_argument("difference: series must be longer than d");
    Eigen::VectorXd out = series;
    for (int k = 0; k < d; ++k) out = (out.tail(out.size() - 1) - out.head(out.size() - 1)).eval();
    return out;
}

Eigen::VectorXd integrate(const Eigen::VectorXd& diffs, const Eigen::VectorXd& last_values, int d) {
    if (d < 0) throw std::invalid_argument("integrate: d must be nonnegative");
    if (d == 0) return diffs;
    if (last_values.size() < d) throw std::invalid_argument("integrate: need at least d prior level values");

    // Anchor for level k = last element of the k-th difference of the d
    // preceding levels.
    Eigen::VectorXd row = last_values.head(d);
    Eigen::VectorXd anchors(d);
    anchors[0] = row[row.size() - 1];
    for (int k = 1; k < d; ++k) {
        row = (row.tail(row.size() - 1) - row.head(row.size() - 1)).eval();
        anchors[k] = row[row.size() - 1];
    }

    Eigen::VectorXd out = diffs;
    for (int k = d - 1; k >= 0; --k) {
        double prev = anchors[k];
        for (Eigen::Index i = 0; i < out.size(); ++i) {
            prev += out[i];
            out[i] = prev;
        }
    }
    return out;
}

ArimaModel fit(const Eigen::VectorXd& series, const ArimaOrder& order) {
    const int p = order.p, d = order.d, q = order.q;
    if (p < 0 || d < 0 || q < 0) throw std::invalid_argument("fit: negative ARIMA order");
    if (series.size() < p + q + d + 3)
        throw std::invalid_argument("fit: series too short for order (need >= p+q+d+3 observations)");
    if (!series.allFinite()) throw std::invalid_argument("fit: series must be finite");

    const Eigen::VectorXd w = difference(series, d);
    const Eigen::Index n = w.size();
    const CssProblem problem(w, p, q);

    Eigen::VectorXd x;
    if (p == 0 && q == 0) {
        x = Eigen::VectorXd::Constant(1, w.mean());
    } else {
        const Eigen::VectorXd x0 = hannan_rissanen(w, p, q);
        x = nelder_mead(problem, x0, 400 * static_cast<int>(x0.size()));
        // Guard candidate: the intercept-only model. This keeps the optimum
        // no worse than the trivial model even when the simplex stalls.
        Eigen::VectorXd zero = Eigen::VectorXd::Zero(1 + p + q);
        zero[0] = w.mean();
        if (problem(zero) < problem(x)) x = zero;
    }

    ArimaModel model;
    model.order = order;
    problem.unpack(x, model.intercept, model.phi, model.theta);
    if (!x.allFinite()) throw ModelError("fit: optimizer produced non-finite parameters");
    if (max_ar_root_modulus(model.phi) >= 1.0)
        throw ModelError("fit: nonstationary AR estimate for order (" + std::to_string(p) + "," +
                         std::to_string(d) + "," + std::to_string(q) + ")");

    const Eigen::VectorXd e = problem.residuals(model.intercept, model.phi, model.theta);
    model.css = e.squaredNorm();
    model.sigma2 = model.css / static_cast<double>(n);
    model.aic = static_cast<double>(n) * std::log(model.sigma2) + 2.0 * static_cast<double>(p + q + 1);
    model.in_sample_mape = level_mape_from_residuals(series, e, d);
    model.last_values = series.tail(d);
    model.diff_tail = w.tail(p);
    model.resid_tail = e.tail(q);
    return model;
}

OrderSelection select_order(const Eigen::VectorXd& series) {
    if (series.size() < 8) throw std::invalid_argument("select_order: need at least 8 observations");

    OrderSelection sel;
    bool found = false;
    for (int p = 0; p <= 2; ++p)
        for (int d = 0; d <= 2; ++d)
            for (int q = 0; q <= 2; ++q) {
                const ArimaOrder order{p, d, q};
                if (series.size() < p + q + d + 3) continue;
                OrderAttempt attempt;
                attempt.order = order;
                try {
                    const ArimaModel model = fit(series, order);
                    attempt.ok = true;
                    attempt.aic = model.aic;
                    if (!found || attempt.aic < sel.aic) {
                        sel.order = order;
                        sel.aic = attempt.aic;
                        found = true;
                    }
                } catch (const std::exception& ex) {
                    attempt.error = ex.what();
                }
                sel.attempts.push_back(std::move(attempt));
            }
    if (!found) throw ModelError("select_order: no ARIMA order produced a successful fit");
    return sel;
}

Eigen::VectorXd forecast(const ArimaModel& model, int h) {
    if (h < 1) throw std::invalid_argument("forecast: h must be >= 1");
    const int p = model.order.p, q = model.order.q;

    std::vector<double> w(model.diff_tail.data(), model.diff_tail.data() + model.diff_tail.size());
    std::vector<double> e(model.resid_tail.data(), model.resid_tail.data() + model.resid_tail.size());
    Eigen::VectorXd diff_fc(h);
    for (int k = 0; k < h; ++k) {
        double value = model.intercept;
        for (int i = 1; i <= p; ++i) value += model.phi[i - 1] * w[w.size() - static_cast<std::size_t>(i)];
        for (int j = 1; j <= q; ++j)
            if (e.size() >= static_cast<std::size_t>(j)) value += model.theta[j - 1] * e[e.size() - static_cast<std::size_t>(j)];
        diff_fc[k] = value;
        w.push_back(value);
        e.push_back(0.0);
    }

    const Eigen::VectorXd levels = integrate(diff_fc, model.last_values, model.order.d);
    if (!levels.allFinite()) throw ModelError("forecast: non-finite forecast values");
    return levels;
}

SimulationSet simulate_features(const PanelDataset& ds, const std::vector<IndicatorKey>& selected,
                                const SimOptions& opts) {
    ds.validate();
    if (selected.empty()) throw std::invalid_argument("simulate_features: no selected features");
    const int last_year = ds.years.back();
    for (std::size_t i = 0; i < opts.horizon_years.size(); ++i) {
        if (opts.horizon_years[i] <= last_year)
            throw std::invalid_argument("simulate_features: horizon year " +
                                        std::to_string(opts.horizon_years[i]) +
                                        " is not after the last dataset year");
        if (i > 0 && opts.horizon_years[i] <= opts.horizon_years[i - 1])
            throw std::invalid_argument("simulate_features: horizon years must be strictly increasing");
    }
    const int steps = opts.horizon_years.empty() ? 0 : opts.horizon_years.back() - last_year;

    struct Slot {
        bool included = false;
        FeatureSim sim;
        Exclusion exclusion;
    };
    std::vector<Slot> slots(selected.size());

    parallel_for(selected.size(), opts.threads, [&](std::size_t i) {
        Slot& slot = slots[i];
        const IndicatorKey& key = selected[i];
        slot.sim.key = key;
        slot.exclusion.key = key;

        const auto col = ds.find_indicator(key.code);
        if (!col) throw std::invalid_argument("simulate_features: unknown indicator '" + key.code + "'");
        const MaskedVector column = ds.data.col(*col);

        Eigen::Index observed = column.observed_count();
        if (const auto it = opts.observed_counts.find(key.code); it != opts.observed_counts.end())
            observed = it->second;
        if (observed < opts.min_len) {
            slot.exclusion.reason = "too_short";
            slot.exclusion.detail = "observed " + std::to_string(observed) + " < min_len " +
                                    std::to_string(opts.min_len);
            return;
        }

        const Eigen::VectorXd series = column.observed();
        try {
            const OrderSelection order = select_order(series);
            slot.sim.model = fit(series, order.order);
        } catch (const std::exception& ex) {
            // The exclusion vocabulary is fixed; a fit that fails outright is
            // reported as low_accuracy with the failure in the detail.
            slot.exclusion.reason = "low_accuracy";
            slot.exclusion.detail = std::string("fit failure: ") + ex.what();
            return;
        }

        const double accuracy = 100.0 - slot.sim.model.in_sample_mape;
        if (!(accuracy >= opts.min_accuracy)) {
            std::ostringstream detail;
            detail << "accuracy " << accuracy << " < " << opts.min_accuracy;
            slot.exclusion.reason = "low_accuracy";
            slot.exclusion.detail = detail.str();
            return;
        }

        slot.sim.forecasts = Eigen::VectorXd(static_cast<Eigen::Index>(opts.horizon_years.size()));
        if (steps > 0) {
            const Eigen::VectorXd path = forecast(slot.sim.model, steps);
            for (std::size_t k = 0; k < opts.horizon_years.size(); ++k)
                slot.sim.forecasts[static_cast<Eigen::Index>(k)] = path[opts.horizon_years[k] - last_year - 1];
        }
        slot.included = true;
    });

    SimulationSet out;
    out.horizon_years = opts.horizon_years;
    for (auto& slot : slots) {
        if (slot.included)
            out.included.push_back(std::move(slot.sim));
        else
            out.excluded.push_back(std::move(slot.exclusion));
    }
    if (out.included.empty())
        throw AllFeaturesExcluded("simulate_features: every selected feature was excluded (" +
                                  std::to_string(out.excluded.size()) + " exclusions)");
    return out;
}

void save_simulation_csv(const SimulationSet& sim, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path.string());
    out << "indicator_code,year,forecast_value\n";
    for (const auto& feature : sim.included)
        for (std::size_t k = 0; k < sim.horizon_years.size(); ++k)
            out << csv::join_record({feature.key.code, std::to_string(sim.horizon_years[k]),
                                     csv::format_double(feature.forecasts[static_cast<Eigen::Index>(k)])})
                << '\n';
    if (!out) throw DataError("write failed: " + path.string());
}

void save_exclusions_csv(const SimulationSet& sim, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path.string());
    out << "indicator_code,reason,detail\n";
    for (const auto& ex : sim.excluded)
        out << csv::join_record({ex.key.code, ex.reason, ex.detail}) << '\n';
    if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace pcast::arima
