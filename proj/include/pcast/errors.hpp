#pragma once

#include <stdexcept>
#include <string>

namespace pcast {

/// Problem with input data: unreadable file, malformed CSV, bad cell value.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical or model-level failure: nonstationary fit, no usable order, etc.
struct ModelError : std::runtime_error {
    explicit ModelError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Every selected feature was excluded by the simulation filters; downstream
/// stages have no regressors to work with.
struct AllFeaturesExcluded : ModelError {
    explicit AllFeaturesExcluded(const std::string& msg) : ModelError(msg) {}
};

}  // namespace pcast
