#include "pcast/wdi_client.hpp"

#include "pcast/errors.hpp"
#include "pcast/parallel.hpp"

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <thread>

namespace pcast {

namespace {

using nlohmann::json;

struct BaseUrl {
    std::string host;  // scheme://host:port
    std::string prefix;
};

BaseUrl split_base_url(const std::string& base_url) {
    const auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos)
        throw std::invalid_argument("fetch_indicators: base_url must include a scheme: " + base_url);
    const auto path_start = base_url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {base_url, ""};
    std::string prefix = base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {base_url.substr(0, path_start), prefix};
}

int parse_year(const json& date) {
    if (date.is_number_integer()) return date.get<int>();
    if (date.is_string()) {
        try {
            return std::stoi(date.get<std::string>());
        } catch (const std::exception&) {
        }
    }
    throw DataError("fetch_indicators: unparseable date field: " + date.dump());
}

// One page with retries; only transport failures and 5xx are retried.
json get_page(httplib::Client& client, const std::string& path, const FetchOptions& opts,
              const std::string& context) {
    int backoff_ms = opts.retry_backoff_ms;
    for (int attempt = 0;; ++attempt) {
        auto res = client.Get(path);
        const bool transient = !res || res->status >= 500;
        if (res && res->status == 200) {
            json body = json::parse(res->body, nullptr, false);
            if (body.is_discarded() || !body.is_array())
                throw DataError("fetch_indicators: " + context + ": response is not a JSON array");
            return body;
        }
        if (!transient) {
            if (res->status == 404)
                throw DataError("fetch_indicators: " + context + ": unknown indicator code (HTTP 404)");
            throw DataError("fetch_indicators: " + context + ": HTTP status " + std::to_string(res->status));
        }
        if (attempt >= opts.max_retries) {
            if (!res)
                throw DataError("fetch_indicators: " + context + ": transport failure (" +
                                httplib::to_string(res.error()) + ")");
            throw DataError("fetch_indicators: " + context + ": HTTP status " + std::to_string(res->status) +
                            " after retries");
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
        backoff_ms *= 2;
    }
}

}  // namespace

PanelDataset fetch_indicators(const std::string& base_url, const std::string& country,
                              const std::vector<IndicatorKey>& indicators, std::pair<int, int> year_range,
                              const FetchOptions& opts) {
    if (year_range.first > year_range.second)
        throw std::invalid_argument("fetch_indicators: empty year range");
    const BaseUrl url = split_base_url(base_url);

    PanelDataset ds;
    ds.country = country;
    for (int y = year_range.first; y <= year_range.second; ++y) ds.years.push_back(y);
    ds.indicators = indicators;
    ds.data = MaskedMatrix(ds.n_years(), ds.n_indicators());

    parallel_for(indicators.size(), opts.threads, [&](std::size_t j) {
        httplib::Client client(url.host);
        client.set_connection_timeout(opts.timeout_sec);
        client.set_read_timeout(opts.timeout_sec);

        const std::string& code = indicators[j].code;
        for (int page = 1;; ++page) {
            const std::string path =
                url.prefix + "/country/" + country + "/indicator/" + code + "?page=" + std::to_string(page);
            const std::string context = "indicator " + code + " page " + std::to_string(page);
            const json body = get_page(client, path, opts, context);
            if (body.empty()) break;
            if (page > opts.max_pages)
                throw DataError("fetch_indicators: pagination for indicator " + code + " exceeded " +
                                std::to_string(opts.max_pages) + " pages");
            for (const auto& record : body) {
                if (!record.is_object() || !record.contains("date") || !record.contains("value"))
                    throw DataError("fetch_indicators: " + context + ": malformed record " + record.dump());
                const int year = parse_year(record["date"]);
                const auto row = ds.find_year(year);
                if (!row) continue;
                const auto& value = record["value"];
                if (value.is_null()) continue;
                if (!value.is_number())
                    throw DataError("fetch_indicators: " + context + ": non-numeric value " + value.dump());
                ds.data.set(*row, static_cast<Eigen::Index>(j), value.get<double>());
            }
        }
    });

    ds.validate();
    return ds;
}

}  // namespace pcast
