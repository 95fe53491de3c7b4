#pragma once

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>

namespace pcast {

/// z-scored copy of a series plus the moments it was centered with.
/// sigma is the population standard deviation; a constant series (sigma = 0)
/// normalizes to all zeros.
struct NormalizedSeries {
    Eigen::VectorXd values;
    double mu = 0.0;
    double sigma = 0.0;
};

template <typename Derived>
NormalizedSeries zscore(const Eigen::MatrixBase<Derived>& series) {
    if (series.size() < 1) throw std::invalid_argument("zscore: empty series");
    NormalizedSeries out;
    const Eigen::VectorXd x = series.template cast<double>();
    out.mu = x.mean();
    out.sigma = std::sqrt((x.array() - out.mu).square().sum() / static_cast<double>(x.size()));
    if (out.sigma > 0.0)
        out.values = ((x.array() - out.mu) / out.sigma).matrix();
    else
        out.values = Eigen::VectorXd::Zero(x.size());
    return out;
}

}  // namespace pcast
