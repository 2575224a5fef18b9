#ifndef TEMPANEL_WEATHER_HPP
#define TEMPANEL_WEATHER_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace tempanel {

/// Calendar date. Validity (month/day ranges, leap years) is checked through
/// std::chrono's proleptic Gregorian calendar.
struct Date {
    int year = 0;
    int month = 0;
    int day = 0;

    bool valid() const;
    std::string to_string() const;  // ISO-8601 YYYY-MM-DD
    static std::optional<Date> parse(const std::string& iso);

    auto operator<=>(const Date&) const = default;
};

/// One station-day. Units after ingestion are metric: degrees Celsius, m/s,
/// hPa, km. Absent optionals mean the station did not report that value.
struct DailyWeatherRecord {
    std::string county_code;
    Date date;
    std::optional<double> mean_temp_c;
    std::optional<double> wind;
    std::optional<double> sea_pressure;
    std::optional<double> visibility;
};

enum class WeatherUnits { Metric, GsodImperial };

/// Column mapping for the weather CSV. All six columns must be present in
/// the header (by these names); field order in the file is free.
struct WeatherSchema {
    std::string county_code = "county_code";
    std::string date = "date";
    std::string temp = "temp_c";
    std::string wind = "wind";
    std::string sea = "sea_hpa";
    std::string visb = "visb";
    WeatherUnits units = WeatherUnits::Metric;
};

struct ParseIssue {
    std::size_t line_no = 0;  // 1-based, counting the header as line 1
    std::string message;
};

struct WeatherParseResult {
    std::vector<DailyWeatherRecord> records;
    std::vector<ParseIssue> line_errors;
    std::size_t missing_values = 0;  // empty measurement fields
};

/// Parses header-prefixed delimited text. Malformed lines (bad date, bad
/// number, out-of-range value, wrong field count) are reported with their
/// line number and skipped; they never abort the parse. An unreadable stream
/// or a header missing a mapped column throws ValidationError.
/// With units == GsodImperial every record is converted to metric before the
/// range checks run.
WeatherParseResult parse_weather_csv(std::istream& source, const WeatherSchema& schema);

/// GSOD-unit record to metric: temp degF -> degC, wind knots -> m/s,
/// visibility miles -> km. Sea-level pressure is already hPa. Missing stays
/// missing.
DailyWeatherRecord convert_gsod_units(const DailyWeatherRecord& raw);

}  // namespace tempanel

#endif
