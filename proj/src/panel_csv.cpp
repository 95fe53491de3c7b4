#include "pcast/panel_csv.hpp"

#include "pcast/csv.hpp"
#include "pcast/errors.hpp"

#include <fstream>
#include <string>
#include <vector>

namespace pcast {

namespace {

const std::vector<std::string> kPanelHeader = {"Country Name", "Country Code", "Indicator Name",
                                               "Indicator Code"};

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path.string());
    return in;
}

}  // namespace

PanelDataset load_panel_csv(const std::filesystem::path& path, const std::string& country,
                            std::pair<int, int> year_range) {
    if (year_range.first > year_range.second)
        throw std::invalid_argument("load_panel_csv: empty year range");
    std::ifstream in = open_input(path);

    std::string line;
    if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
    const auto header = csv::split_record(line);
    if (header.size() < kPanelHeader.size())
        throw DataError(path.string() + ": malformed header, expected at least 4 columns");
    for (std::size_t i = 0; i < kPanelHeader.size(); ++i)
        if (header[i] != kPanelHeader[i])
            throw DataError(path.string() + ": malformed header, column " + std::to_string(i + 1) +
                            " must be '" + kPanelHeader[i] + "'");

    // Year columns: position in the file -> year. Columns outside the range
    // are ignored; range years absent from the file stay all-missing.
    std::vector<std::pair<std::size_t, int>> year_cols;
    for (std::size_t i = kPanelHeader.size(); i < header.size(); ++i) {
        const auto year = csv::parse_int(header[i]);
        if (!year) throw DataError(path.string() + ": malformed header, year column '" + header[i] + "'");
        if (*year >= year_range.first && *year <= year_range.second)
            year_cols.emplace_back(i, static_cast<int>(*year));
    }

    PanelDataset ds;
    ds.country = country;
    for (int y = year_range.first; y <= year_range.second; ++y) ds.years.push_back(y);

    std::vector<std::vector<std::string>> rows;
    std::size_t line_no = 1;
    bool country_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto fields = csv::split_record(line);
        if (fields.size() < kPanelHeader.size())
            throw DataError(path.string() + ": row " + std::to_string(line_no) + " has too few columns");
        if (fields[1] != country) continue;
        country_seen = true;
        rows.push_back(std::move(fields));
    }
    if (!country_seen) throw DataError(path.string() + ": country '" + country + "' not found");

    ds.data = MaskedMatrix(ds.n_years(), static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& fields = rows[r];
        IndicatorKey key{fields[3], fields[2]};
        if (key.code.empty())
            throw DataError(path.string() + ": empty indicator code for country " + country);
        if (ds.find_indicator(key.code))
            throw DataError(path.string() + ": duplicate indicator code '" + key.code + "' for country " +
                            country);
        ds.indicators.push_back(key);
        for (const auto& [col, year] : year_cols) {
            if (col >= fields.size() || fields[col].empty()) continue;
            const auto value = csv::parse_double(fields[col]);
            if (!value)
                throw DataError(path.string() + ": non-numeric value '" + fields[col] + "' for indicator '" +
                                key.code + "' in year column " + std::to_string(year));
            ds.data.set(*ds.find_year(year), static_cast<Eigen::Index>(r), *value);
        }
    }
    ds.validate();
    return ds;
}

void save_panel_csv(const PanelDataset& ds, const std::filesystem::path& path) {
    ds.validate();
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path.string());

    std::vector<std::string> header = kPanelHeader;
    for (const int y : ds.years) header.push_back(std::to_string(y));
    out << csv::join_record(header) << '\n';

    for (Eigen::Index j = 0; j < ds.n_indicators(); ++j) {
        std::vector<std::string> fields = {ds.country, ds.country, ds.indicators[j].name,
                                           ds.indicators[j].code};
        for (Eigen::Index i = 0; i < ds.n_years(); ++i)
            fields.push_back(ds.data.present(i, j) ? csv::format_double(ds.data.values(i, j)) : std::string());
        out << csv::join_record(fields) << '\n';
    }
    if (!out) throw DataError("write failed: " + path.string());
}

std::map<int, double> load_target_csv(const std::filesystem::path& path) {
    std::ifstream in = open_input(path);
    std::string line;
    if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
    const auto header = csv::split_record(line);
    if (header.size() < 2 || header[0] != "year" || header[1] != "value")
        throw DataError(path.string() + ": malformed header, expected 'year,value'");

    std::map<int, double> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = csv::split_record(line);
        if (fields.size() < 2)
            throw DataError(path.string() + ": row " + std::to_string(line_no) + " has too few columns");
        const auto year = csv::parse_int(fields[0]);
        if (!year) throw DataError(path.string() + ": bad year '" + fields[0] + "' at row " + std::to_string(line_no));
        if (fields[1].empty()) continue;
        const auto value = csv::parse_double(fields[1]);
        if (!value)
            throw DataError(path.string() + ": non-numeric value '" + fields[1] + "' at row " +
                            std::to_string(line_no));
        out[static_cast<int>(*year)] = *value;
    }
    return out;
}

void save_target_csv(const std::map<int, double>& target, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path.string());
    out << "year,value\n";
    for (const auto& [year, value] : target) out << year << ',' << csv::format_double(value) << '\n';
    if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace pcast
