#include "tempanel/weather.hpp"

#include <chrono>
#include <cstdio>
#include <istream>
#include <map>

#include "tempanel/csv.hpp"
#include "tempanel/errors.hpp"

namespace tempanel {

bool Date::valid() const {
    const std::chrono::year_month_day ymd{std::chrono::year{year},
                                          std::chrono::month{static_cast<unsigned>(month)},
                                          std::chrono::day{static_cast<unsigned>(day)}};
    return ymd.ok();
}

std::string Date::to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
    return buf;
}

std::optional<Date> Date::parse(const std::string& iso) {
    int y = 0, m = 0, d = 0;
    char tail = 0;
    if (std::sscanf(iso.c_str(), "%d-%d-%d%c", &y, &m, &d, &tail) != 3) return std::nullopt;
    const Date date{y, m, d};
    if (!date.valid()) return std::nullopt;
    return date;
}

namespace {

struct ColumnIndex {
    std::size_t county, date, temp, wind, sea, visb;
};

std::size_t require_column(const std::vector<std::string>& header, const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw ValidationError("weather csv: missing mandatory column '" + name + "' in header");
}

// Empty field -> missing; anything else must parse as a number.
std::optional<double> read_field(const std::vector<std::string>& fields, std::size_t idx,
                                 const char* what, std::size_t line_no,
                                 std::vector<ParseIssue>& errors, bool& line_ok,
                                 std::size_t& missing) {
    const std::string& raw = fields[idx];
    if (raw.empty()) {
        ++missing;
        return std::nullopt;
    }
    auto value = csv::parse_double(raw);
    if (!value) {
        errors.push_back({line_no, std::string("unparseable ") + what + " '" + raw + "'"});
        line_ok = false;
        return std::nullopt;
    }
    return value;
}

}  // namespace

WeatherParseResult parse_weather_csv(std::istream& source, const WeatherSchema& schema) {
    std::string line;
    if (!std::getline(source, line)) {
        if (source.bad()) throw ValidationError("weather csv: unreadable stream");
        throw ValidationError("weather csv: empty input, no header");
    }
    const auto header = csv::split(line);
    const ColumnIndex cols{require_column(header, schema.county_code),
                           require_column(header, schema.date),
                           require_column(header, schema.temp),
                           require_column(header, schema.wind),
                           require_column(header, schema.sea),
                           require_column(header, schema.visb)};

    WeatherParseResult result;
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

        DailyWeatherRecord rec;
        rec.county_code = fields[cols.county];
        if (rec.county_code.empty()) {
            result.line_errors.push_back({line_no, "empty county code"});
            continue;
        }
        const auto date = Date::parse(fields[cols.date]);
        if (!date) {
            result.line_errors.push_back({line_no, "invalid date '" + fields[cols.date] + "'"});
            continue;
        }
        rec.date = *date;

        bool line_ok = true;
        rec.mean_temp_c = read_field(fields, cols.temp, "temperature", line_no,
                                     result.line_errors, line_ok, result.missing_values);
        rec.wind = read_field(fields, cols.wind, "wind", line_no, result.line_errors, line_ok,
                              result.missing_values);
        rec.sea_pressure = read_field(fields, cols.sea, "sea pressure", line_no,
                                      result.line_errors, line_ok, result.missing_values);
        rec.visibility = read_field(fields, cols.visb, "visibility", line_no,
                                    result.line_errors, line_ok, result.missing_values);
        if (!line_ok) continue;

        if (schema.units == WeatherUnits::GsodImperial) rec = convert_gsod_units(rec);

        if (rec.mean_temp_c && (*rec.mean_temp_c < -90.0 || *rec.mean_temp_c > 60.0)) {
            result.line_errors.push_back(
                {line_no, "temperature out of range [-90, 60] degC"});
            continue;
        }
        if (rec.sea_pressure && (*rec.sea_pressure < 850.0 || *rec.sea_pressure > 1100.0)) {
            result.line_errors.push_back({line_no, "sea pressure out of range [850, 1100] hPa"});
            continue;
        }
        result.records.push_back(std::move(rec));
    }
    if (source.bad()) throw ValidationError("weather csv: unreadable stream");
    return result;
}

DailyWeatherRecord convert_gsod_units(const DailyWeatherRecord& raw) {
    DailyWeatherRecord out = raw;
    if (raw.mean_temp_c) out.mean_temp_c = (*raw.mean_temp_c - 32.0) * 5.0 / 9.0;
    if (raw.wind) out.wind = *raw.wind * 0.514444;
    if (raw.visibility) out.visibility = *raw.visibility * 1.609344;
    return out;
}

}  // namespace tempanel
