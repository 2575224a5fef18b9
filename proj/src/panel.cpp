#include "tempanel/panel.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <set>
#include <sstream>

#include "nlohmann/json.hpp"
#include "tempanel/csv.hpp"
#include "tempanel/errors.hpp"

namespace tempanel {

std::string ownership_code(Ownership o) {
    switch (o) {
        case Ownership::Private: return "private";
        case Ownership::StateOwned: return "state";
        case Ownership::Collective: return "collective";
        case Ownership::Mixed: return "mixed";
        case Ownership::Foreign: return "foreign";
    }
    return "?";
}

std::string ownership_label(Ownership o) {
    switch (o) {
        case Ownership::Private: return "Private Enterprises";
        case Ownership::StateOwned: return "State-owned Enterprises";
        case Ownership::Collective: return "Collective Enterprises";
        case Ownership::Mixed: return "Mixed Enterprises";
        case Ownership::Foreign: return "Foreign-owned Enterprises";
    }
    return "?";
}

std::optional<Ownership> parse_ownership(const std::string& code) {
    if (code == "private") return Ownership::Private;
    if (code == "state") return Ownership::StateOwned;
    if (code == "collective") return Ownership::Collective;
    if (code == "mixed") return Ownership::Mixed;
    if (code == "foreign") return Ownership::Foreign;
    return std::nullopt;
}

FirmParseResult parse_firm_csv(std::istream& source) {
    std::string line;
    if (!std::getline(source, line)) {
        if (source.bad()) throw ValidationError("firm csv: unreadable stream");
        throw ValidationError("firm csv: empty input, no header");
    }
    const auto header = csv::split(line);
    const std::vector<std::string> expected = {"firm_id", "year",          "city_code",
                                               "ownership", "industry_code", "cvalue"};
    std::vector<std::size_t> idx(expected.size());
    for (std::size_t c = 0; c < expected.size(); ++c) {
        auto it = std::find(header.begin(), header.end(), expected[c]);
        if (it == header.end())
            throw ValidationError("firm csv: missing mandatory column '" + expected[c] +
                                  "' in header");
        idx[c] = static_cast<std::size_t>(it - header.begin());
    }

    FirmParseResult result;
    std::size_t line_no = 1;
    while (std::getline(source, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = csv::split(line);
        if (fields.size() != header.size()) {
            result.line_errors.push_back(
                {line_no, "expected " + std::to_string(header.size()) + " fields, got " +
                              std::to_string(fields.size())});
            continue;
        }
        FirmYearRecord rec;
        rec.firm_id = fields[idx[0]];
        if (rec.firm_id.empty()) {
            result.line_errors.push_back({line_no, "empty firm_id"});
            continue;
        }
        const auto year = csv::parse_int(fields[idx[1]]);
        if (!year) {
            result.line_errors.push_back({line_no, "unparseable year '" + fields[idx[1]] + "'"});
            continue;
        }
        rec.year = static_cast<int>(*year);
        rec.city_code = fields[idx[2]];
        if (rec.city_code.empty()) {
            result.line_errors.push_back({line_no, "empty city_code"});
            continue;
        }
        const auto ownership = parse_ownership(fields[idx[3]]);
        if (!ownership) {
            result.line_errors.push_back(
                {line_no, "unknown ownership '" + fields[idx[3]] + "'"});
            continue;
        }
        rec.ownership = *ownership;
        rec.industry_code = fields[idx[4]];
        if (!fields[idx[5]].empty()) {
            const auto cvalue = csv::parse_double(fields[idx[5]]);
            if (!cvalue) {
                result.line_errors.push_back(
                    {line_no, "unparseable cvalue '" + fields[idx[5]] + "'"});
                continue;
            }
            if (*cvalue < 0.0 || *cvalue > 1.0) {
                result.line_errors.push_back({line_no, "cvalue out of range [0, 1]"});
                continue;
            }
            rec.cvalue = *cvalue;
        }
        result.records.push_back(std::move(rec));
    }
    if (source.bad()) throw ValidationError("firm csv: unreadable stream");
    return result;
}

std::string JoinReport::to_text() const {
    std::ostringstream os;
    os << "rows_in: " << rows_in << '\n'
       << "rows_joined: " << rows_joined << '\n'
       << "dropped_no_station: " << dropped_no_station << '\n'
       << "dropped_low_coverage: " << dropped_low_coverage << '\n'
       << "dropped_missing_outcome: " << dropped_missing_outcome << '\n';
    return os.str();
}

std::string JoinReport::to_json() const {
    nlohmann::ordered_json j;
    j["rows_in"] = rows_in;
    j["rows_joined"] = rows_joined;
    j["dropped_no_station"] = dropped_no_station;
    j["dropped_low_coverage"] = dropped_low_coverage;
    j["dropped_missing_outcome"] = dropped_missing_outcome;
    return j.dump(2) + "\n";
}

namespace {

// Per (county, year) aggregate of the daily records feeding one panel row.
struct CountyYear {
    std::vector<double> temps;
    double wind_sum = 0.0;
    int wind_days = 0;
    double sea_sum = 0.0;
    int sea_days = 0;
    double visb_sum = 0.0;
    int visb_days = 0;
};

}  // namespace

PanelDataset join_firm_weather(const std::vector<FirmYearRecord>& firms,
                               const std::vector<DailyWeatherRecord>& weather,
                               int min_coverage_days, const BinSpec& spec) {
    if (min_coverage_days < 1 || min_coverage_days > 366)
        throw ValidationError("join: min_coverage_days must be in [1, 366]");

    {
        std::set<std::pair<std::string, int>> seen;
        for (const auto& f : firms) {
            if (!seen.insert({f.firm_id, f.year}).second)
                throw ValidationError("join: duplicate (firm_id, year) key (" + f.firm_id +
                                      ", " + std::to_string(f.year) + ")");
        }
    }

    std::set<std::string> counties_with_data;
    std::map<std::pair<std::string, int>, CountyYear> by_county_year;
    for (const auto& w : weather) {
        counties_with_data.insert(w.county_code);
        auto& agg = by_county_year[{w.county_code, w.date.year}];
        if (w.mean_temp_c) agg.temps.push_back(*w.mean_temp_c);
        if (w.wind) {
            agg.wind_sum += *w.wind;
            ++agg.wind_days;
        }
        if (w.sea_pressure) {
            agg.sea_sum += *w.sea_pressure;
            ++agg.sea_days;
        }
        if (w.visibility) {
            agg.visb_sum += *w.visibility;
            ++agg.visb_days;
        }
    }

    PanelDataset out;
    out.join_report.rows_in = firms.size();
    for (const auto& f : firms) {
        if (!counties_with_data.count(f.city_code)) {
            ++out.join_report.dropped_no_station;
            continue;
        }
        if (!f.cvalue) {
            ++out.join_report.dropped_missing_outcome;
            continue;
        }
        auto it = by_county_year.find({f.city_code, f.year});
        if (it == by_county_year.end()) {
            ++out.join_report.dropped_low_coverage;  // county known, year not covered
            continue;
        }
        const CountyYear& agg = it->second;
        if (static_cast<int>(agg.temps.size()) < min_coverage_days || agg.wind_days == 0 ||
            agg.sea_days == 0 || agg.visb_days == 0) {
            ++out.join_report.dropped_low_coverage;
            continue;
        }
        PanelRow row;
        row.firm_id = f.firm_id;
        row.year = f.year;
        row.city_code = f.city_code;
        row.ownership = f.ownership;
        row.industry_code = f.industry_code;
        row.cvalue = *f.cvalue;
        row.wind = agg.wind_sum / agg.wind_days;
        row.sea = agg.sea_sum / agg.sea_days;
        row.visb = agg.visb_sum / agg.visb_days;
        row.bins = count_bins(agg.temps, spec);
        out.rows.push_back(std::move(row));
    }
    out.join_report.rows_joined = out.rows.size();

    std::sort(out.rows.begin(), out.rows.end(), [](const PanelRow& a, const PanelRow& b) {
        if (a.firm_id != b.firm_id) return a.firm_id < b.firm_id;
        return a.year < b.year;
    });
    return out;
}

}  // namespace tempanel
