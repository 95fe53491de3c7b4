#include "pcast/errors.hpp"
#include "pcast/panel_csv.hpp"
#include "pcast/pipeline.hpp"
#include "pcast/wdi_client.hpp"

#include "support/fixture.hpp"

#include <doctest.h>
#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <thread>

using namespace pcast;
using nlohmann::json;

namespace {

// Serves a fixed panel in the paged record format the client expects.
struct StubServer {
    PanelDataset panel;
    int page_size = 100;
    std::atomic<int> fail_first{0};  // next N requests answer 500

    httplib::Server server;
    std::thread worker;
    int port = 0;

    explicit StubServer(PanelDataset ds) : panel(std::move(ds)) {
        server.Get(R"(/country/([A-Z]+)/indicator/([^?]+))", [this](const httplib::Request& req,
                                                                    httplib::Response& res) {
            if (fail_first.fetch_sub(1) > 0) {
                res.status = 500;
                return;
            }
            fail_first.store(0);
            const std::string country = req.matches[1];
            const std::string code = req.matches[2];
            const int page = req.has_param("page") ? std::stoi(req.get_param_value("page")) : 1;
            const auto col = panel.find_indicator(code);
            if (country != panel.country || !col) {
                res.status = 404;
                return;
            }
            json records = json::array();
            for (Eigen::Index i = 0; i < panel.n_years(); ++i) {
                json record = {{"country", panel.country},
                               {"indicator", code},
                               {"date", panel.years[static_cast<std::size_t>(i)]}};
                if (panel.data.present(i, *col)) record["value"] = panel.data.values(i, *col);
                else record["value"] = nullptr;
                records.push_back(record);
            }
            json body = json::array();
            const int begin = (page - 1) * page_size;
            for (int i = begin; i < begin + page_size && i < static_cast<int>(records.size()); ++i)
                body.push_back(records[static_cast<std::size_t>(i)]);
            res.set_content(body.dump(), "application/json");
        });
        port = server.bind_to_any_port("127.0.0.1");
        worker = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }

    ~StubServer() {
        server.stop();
        worker.join();
    }

    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port); }
};

PanelDataset stub_panel() {
    PanelDataset ds;
    ds.country = "BHR";
    for (int y = 2010; y <= 2023; ++y) ds.years.push_back(y);
    ds.indicators = {{"GDP.X", "gdp thing"}, {"EDU.Y", "education thing"}};
    ds.data = MaskedMatrix(14, 2);
    for (Eigen::Index i = 0; i < 14; ++i) {
        ds.data.set(i, 0, 1.0 + 0.1 * static_cast<double>(i));
        if (ds.years[static_cast<std::size_t>(i)] != 2020) ds.data.set(i, 1, 80.0 - static_cast<double>(i));
    }
    return ds;
}

FetchOptions fast_opts() {
    FetchOptions opts;
    opts.retry_backoff_ms = 1;
    return opts;
}

}  // namespace

TEST_CASE("fetch_indicators maps records onto the panel") {
    StubServer stub(stub_panel());
    const PanelDataset ds =
        fetch_indicators(stub.base_url(), "BHR", stub.panel.indicators, {2010, 2023}, fast_opts());
    CHECK(ds == stub.panel);
    CHECK_FALSE(ds.data.present(10, 1));  // the null 2020 cell stays missing
}

TEST_CASE("fetch_indicators consumes every page") {
    StubServer stub(stub_panel());
    stub.page_size = 5;  // 14 records -> 3 pages
    const PanelDataset ds =
        fetch_indicators(stub.base_url(), "BHR", stub.panel.indicators, {2010, 2023}, fast_opts());
    CHECK(ds == stub.panel);
}

TEST_CASE("fetch_indicators equals load_panel_csv on equivalent data") {
    StubServer stub(stub_panel());
    fixture::TempDir tmp("fetcheq");
    save_panel_csv(stub.panel, tmp.path / "panel.csv");
    const PanelDataset from_file = load_panel_csv(tmp.path / "panel.csv", "BHR", {2010, 2023});
    const PanelDataset from_api =
        fetch_indicators(stub.base_url(), "BHR", stub.panel.indicators, {2010, 2023}, fast_opts());
    CHECK(from_api == from_file);
}

TEST_CASE("fetch_indicators with no indicators yields zero columns") {
    StubServer stub(stub_panel());
    const PanelDataset ds = fetch_indicators(stub.base_url(), "BHR", {}, {2010, 2023}, fast_opts());
    CHECK(ds.n_indicators() == 0);
    CHECK(ds.n_years() == 14);
}

TEST_CASE("fetch_indicators retries transient failures") {
    StubServer stub(stub_panel());
    stub.fail_first.store(2);
    const PanelDataset ds =
        fetch_indicators(stub.base_url(), "BHR", stub.panel.indicators, {2010, 2023}, fast_opts());
    CHECK(ds == stub.panel);
}

TEST_CASE("fetch_indicators surfaces permanent failures") {
    StubServer stub(stub_panel());
    SUBCASE("unknown indicator code") {
        CHECK_THROWS_WITH_AS(
            fetch_indicators(stub.base_url(), "BHR", {{"NOPE", "missing"}}, {2010, 2023}, fast_opts()),
            doctest::Contains("unknown indicator"), DataError);
    }
    SUBCASE("unknown country") {
        CHECK_THROWS_AS(
            fetch_indicators(stub.base_url(), "OMN", stub.panel.indicators, {2010, 2023}, fast_opts()),
            DataError);
    }
    SUBCASE("exhausted retries") {
        stub.fail_first.store(1000);
        FetchOptions opts = fast_opts();
        opts.max_retries = 1;
        CHECK_THROWS_AS(
            fetch_indicators(stub.base_url(), "BHR", stub.panel.indicators, {2010, 2023}, opts),
            DataError);
    }
    SUBCASE("unreachable host") {
        FetchOptions opts = fast_opts();
        opts.max_retries = 0;
        opts.timeout_sec = 1;
        CHECK_THROWS_AS(fetch_indicators("http://127.0.0.1:1/api", "BHR", stub.panel.indicators,
                                         {2010, 2023}, opts),
                        DataError);
    }
}

TEST_CASE("fetch_indicators concurrent fetching equals sequential") {
    StubServer stub(stub_panel());
    FetchOptions seq = fast_opts();
    seq.threads = 1;
    FetchOptions par = fast_opts();
    par.threads = 4;
    const PanelDataset a = fetch_indicators(stub.base_url(), "BHR", stub.panel.indicators, {2010, 2023}, seq);
    const PanelDataset b = fetch_indicators(stub.base_url(), "BHR", stub.panel.indicators, {2010, 2023}, par);
    CHECK(a == b);
}

TEST_CASE("fetch_indicators honors year ranges and path prefixes") {
    StubServer stub(stub_panel());
    const PanelDataset ds =
        fetch_indicators(stub.base_url() + "/", "BHR", stub.panel.indicators, {2015, 2030}, fast_opts());
    CHECK(ds.n_years() == 16);
    CHECK(ds.find_year(2015).has_value());
    CHECK(ds.data.present(0, 0));        // 2015 served
    CHECK_FALSE(ds.data.present(15, 0)); // 2030 never served
}

TEST_CASE("the pipeline can ingest from the API instead of a CSV") {
    StubServer stub(stub_panel());
    fixture::TempDir tmp("apipipe");
    std::map<int, double> target;
    for (int y = 2010; y <= 2023; ++y) target[y] = 60.0 + 1.5 * (y - 2010);
    save_target_csv(target, tmp.path / "target.csv");

    RunConfig cfg;
    cfg.country = "BHR";
    cfg.api_base_url = stub.base_url();
    cfg.indicators = stub.panel.indicators;
    cfg.target_csv = (tmp.path / "target.csv").string();
    cfg.out_dir = (tmp.path / "out").string();
    cfg.edr_k = 2;
    cfg.seed = 77;
    // a light grid keeps this network-backed test quick
    cfg.grid.learning_rate = {0.2};
    cfg.grid.max_depth = {3};
    cfg.grid.n_estimators = {50};
    cfg.grid.subsample = {1.0};

    const ForecastResult result = run_pipeline(cfg);
    CHECK(result.horizon.size() == 4);
    CHECK(result.eval.test_mape >= 0.0);
    CHECK_FALSE(result.simulation.included.empty());
}
