#pragma once

#include "pcast/errors.hpp"

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>

namespace pcast {

/// Mean absolute percentage error: (1/n) * sum |A_i - F_i| / |A_i| * 100.
/// Rejects empty/mismatched inputs and any zero actual value.
template <typename DerivedA, typename DerivedF>
double mape(const Eigen::MatrixBase<DerivedA>& actual, const Eigen::MatrixBase<DerivedF>& forecast) {
    if (actual.size() != forecast.size()) throw std::invalid_argument("mape: length mismatch");
    if (actual.size() < 1) throw std::invalid_argument("mape: empty input");
    double sum = 0.0;
    for (Eigen::Index i = 0; i < actual.size(); ++i) {
        const double a = static_cast<double>(actual[i]);
        if (a == 0.0) throw DataError("mape: actual value at index " + std::to_string(i) + " is zero");
        sum += std::abs(a - static_cast<double>(forecast[i])) / std::abs(a);
    }
    return 100.0 * sum / static_cast<double>(actual.size());
}

}  // namespace pcast
