#ifndef TEMPANEL_PANEL_HPP
#define TEMPANEL_PANEL_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tempanel/bins.hpp"
#include "tempanel/weather.hpp"

namespace tempanel {

enum class Ownership { Private, StateOwned, Collective, Mixed, Foreign };

constexpr int kOwnershipCount = 5;

/// CSV token ("private", "state", "collective", "mixed", "foreign") and the
/// table column head ("Private Enterprises", ...).
std::string ownership_code(Ownership o);
std::string ownership_label(Ownership o);
std::optional<Ownership> parse_ownership(const std::string& code);

/// One firm-year survey row. cvalue (net fixed assets / total assets) may be
/// absent in the raw file; such rows are dropped at join time.
struct FirmYearRecord {
    std::string firm_id;
    int year = 0;
    std::string city_code;
    Ownership ownership = Ownership::Private;
    std::string industry_code;
    std::optional<double> cvalue;  // in [0,1] when present
};

struct FirmParseResult {
    std::vector<FirmYearRecord> records;
    std::vector<ParseIssue> line_errors;
};

/// Columns: firm_id,year,city_code,ownership,industry_code,cvalue.
/// Same error policy as parse_weather_csv.
FirmParseResult parse_firm_csv(std::istream& source);

/// One joined row: outcome, annual-mean controls over that firm-year's valid
/// days, and bin day-counts.
struct PanelRow {
    std::string firm_id;
    int year = 0;
    std::string city_code;
    Ownership ownership = Ownership::Private;
    std::string industry_code;
    double cvalue = 0.0;
    double wind = 0.0;
    double sea = 0.0;
    double visb = 0.0;
    BinCounts bins;
};

/// Accounts for every input firm row: rows_in == rows_joined + sum(dropped_*).
struct JoinReport {
    std::size_t rows_in = 0;
    std::size_t rows_joined = 0;
    std::size_t dropped_no_station = 0;      // county absent from the weather data
    std::size_t dropped_low_coverage = 0;    // too few valid days (temp or controls)
    std::size_t dropped_missing_outcome = 0; // empty cvalue field

    std::string to_text() const;  // key: value block
    std::string to_json() const;
};

/// Canonical joined panel, rows sorted by (firm_id, year).
struct PanelDataset {
    std::vector<PanelRow> rows;
    JoinReport join_report;
};

/// Joins firms to their county's weather by (city_code, year). Bin counts
/// use days with a valid temperature; each control is averaged over the days
/// it was reported. Rows are dropped when the county has no weather data at
/// all (no_station), cvalue is missing (missing_outcome), or valid
/// temperature days < min_coverage_days or some control was never reported
/// that year (low_coverage). Duplicate (firm_id, year) keys throw
/// ValidationError naming the key.
PanelDataset join_firm_weather(const std::vector<FirmYearRecord>& firms,
                               const std::vector<DailyWeatherRecord>& weather,
                               int min_coverage_days, const BinSpec& spec);

}  // namespace tempanel

#endif
