#pragma once

#include "pcast/panel.hpp"

#include <string>
#include <utility>
#include <vector>

namespace pcast {

struct FetchOptions {
    int max_retries = 3;        // additional attempts after a transient failure
    int retry_backoff_ms = 100; // doubles with each retry
    int timeout_sec = 10;
    int max_pages = 10000;
    unsigned threads = 1;
};

/// Assembles a panel from an indicators API. One GET per indicator and page:
///   {base_url}/country/{country}/indicator/{code}?page=N     (N = 1, 2, ...)
/// until an empty page. Responses are JSON arrays of records
/// {"country": ..., "indicator": ..., "date": year, "value": number|null};
/// null values and absent years stay missing. Transient failures (transport
/// errors, 5xx) are retried with exponential backoff; 4xx statuses are
/// permanent errors (404 = unknown indicator code).
PanelDataset fetch_indicators(const std::string& base_url, const std::string& country,
                              const std::vector<IndicatorKey>& indicators, std::pair<int, int> year_range,
                              const FetchOptions& opts = {});

}  // namespace pcast
