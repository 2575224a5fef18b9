#include "tempanel/panel.hpp"

#include <sstream>

#include "doctest.h"
#include "tempanel/errors.hpp"

using namespace tempanel;

namespace {

std::vector<DailyWeatherRecord> county_year(const std::string& county, int year, int days,
                                            double temp, double wind = 5.0,
                                            double sea = 1013.0, double visb = 9.0) {
    std::vector<DailyWeatherRecord> out;
    Date date{year, 1, 1};
    for (int d = 0; d < days; ++d) {
        DailyWeatherRecord rec;
        rec.county_code = county;
        rec.date = date;
        rec.mean_temp_c = temp;
        rec.wind = wind;
        rec.sea_pressure = sea;
        rec.visibility = visb;
        out.push_back(rec);
        ++date.day;
        if (!date.valid()) {
            date.day = 1;
            ++date.month;
        }
    }
    return out;
}

FirmYearRecord firm(const std::string& id, int year, const std::string& city,
                    double cvalue = 0.4) {
    FirmYearRecord f;
    f.firm_id = id;
    f.year = year;
    f.city_code = city;
    f.ownership = Ownership::Private;
    f.industry_code = "I01";
    f.cvalue = cvalue;
    return f;
}

}  // namespace

TEST_CASE("join keeps a covered firm-year and aggregates controls") {
    const auto weather = county_year("C001", 2005, 365, 12.0, 6.0, 1015.0, 8.0);
    const PanelDataset panel =
        join_firm_weather({firm("F1", 2005, "C001")}, weather, 300, BinSpec::standard());
    REQUIRE(panel.rows.size() == 1);
    const PanelRow& row = panel.rows[0];
    CHECK(row.bins.total_days == 365);
    CHECK(row.bins.reference_days == 365);  // 12 degC is the reference bin
    CHECK(row.wind == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(row.sea == doctest::Approx(1015.0).epsilon(1e-12));
    CHECK(row.visb == doctest::Approx(8.0).epsilon(1e-12));
    CHECK(panel.join_report.rows_joined == 1);
}

TEST_CASE("annual control means equal brute-force means over valid days") {
    std::vector<DailyWeatherRecord> weather;
    double wind_sum = 0.0;
    int wind_days = 0;
    Date date{2005, 1, 1};
    for (int d = 0; d < 320; ++d) {
        DailyWeatherRecord rec;
        rec.county_code = "C001";
        rec.date = date;
        rec.mean_temp_c = 10.0 + 0.01 * d;
        if (d % 3 != 0) {  // wind reported on two days out of three
            rec.wind = 4.0 + 0.02 * d;
            wind_sum += *rec.wind;
            ++wind_days;
        }
        rec.sea_pressure = 1010.0 + 0.001 * d;
        rec.visibility = 7.0;
        weather.push_back(rec);
        ++date.day;
        if (!date.valid()) {
            date.day = 1;
            ++date.month;
        }
    }
    const PanelDataset panel =
        join_firm_weather({firm("F1", 2005, "C001")}, weather, 300, BinSpec::standard());
    REQUIRE(panel.rows.size() == 1);
    CHECK(panel.rows[0].wind ==
          doctest::Approx(wind_sum / wind_days).epsilon(1e-12));
}

TEST_CASE("drop accounting partitions the input exactly") {
    std::vector<DailyWeatherRecord> weather = county_year("C001", 2005, 365, 12.0);
    const auto w2006 = county_year("C001", 2006, 200, 12.0);
    weather.insert(weather.end(), w2006.begin(), w2006.end());

    std::vector<FirmYearRecord> firms = {
        firm("F1", 2005, "C001"),          // joined
        firm("F2", 2005, "C999"),          // no station
        firm("F3", 2006, "C001"),          // 200 days < 300
        firm("F4", 2005, "C001"),          // missing outcome
    };
    firms[3].cvalue.reset();

    const PanelDataset panel = join_firm_weather(firms, weather, 300, BinSpec::standard());
    const JoinReport& report = panel.join_report;
    CHECK(report.rows_in == 4);
    CHECK(report.rows_joined == 1);
    CHECK(report.dropped_no_station == 1);
    CHECK(report.dropped_low_coverage == 1);
    CHECK(report.dropped_missing_outcome == 1);
    CHECK(report.rows_in == report.rows_joined + report.dropped_no_station +
                                report.dropped_low_coverage +
                                report.dropped_missing_outcome);
}

TEST_CASE("duplicate (firm_id, year) is fatal and names the key") {
    const auto weather = county_year("C001", 2005, 365, 12.0);
    const std::vector<FirmYearRecord> firms = {firm("F1", 2005, "C001"),
                                               firm("F1", 2005, "C001")};
    CHECK_THROWS_WITH_AS(join_firm_weather(firms, weather, 300, BinSpec::standard()),
                         doctest::Contains("F1"), ValidationError);
}

TEST_CASE("rows come out sorted by firm then year") {
    std::vector<DailyWeatherRecord> weather = county_year("C001", 2005, 365, 12.0);
    const auto w2006 = county_year("C001", 2006, 365, 12.0);
    weather.insert(weather.end(), w2006.begin(), w2006.end());
    const std::vector<FirmYearRecord> firms = {firm("F2", 2005, "C001"),
                                               firm("F1", 2006, "C001"),
                                               firm("F1", 2005, "C001")};
    const PanelDataset panel = join_firm_weather(firms, weather, 300, BinSpec::standard());
    REQUIRE(panel.rows.size() == 3);
    CHECK(panel.rows[0].firm_id == "F1");
    CHECK(panel.rows[0].year == 2005);
    CHECK(panel.rows[1].firm_id == "F1");
    CHECK(panel.rows[1].year == 2006);
    CHECK(panel.rows[2].firm_id == "F2");
}

TEST_CASE("firm csv parses and validates") {
    std::istringstream is(
        "firm_id,year,city_code,ownership,industry_code,cvalue\n"
        "F1,2005,C001,private,I01,0.35\n"
        "F2,2005,C001,state,I02,\n"
        "F3,2005,C001,unknown,I01,0.2\n"
        "F4,2005,C001,mixed,I01,1.5\n");
    const FirmParseResult result = parse_firm_csv(is);
    REQUIRE(result.records.size() == 2);
    CHECK(result.records[0].cvalue == 0.35);
    CHECK(!result.records[1].cvalue.has_value());  // empty = missing, not an error
    REQUIRE(result.line_errors.size() == 2);       // bad ownership, out-of-range cvalue
    CHECK(result.line_errors[0].line_no == 4);
    CHECK(result.line_errors[1].line_no == 5);
}

TEST_CASE("join report serializes as text block and json") {
    JoinReport report;
    report.rows_in = 8;
    report.rows_joined = 5;
    report.dropped_no_station = 1;
    report.dropped_low_coverage = 1;
    report.dropped_missing_outcome = 1;
    const std::string text = report.to_text();
    CHECK(text.find("rows_in: 8") != std::string::npos);
    CHECK(text.find("dropped_low_coverage: 1") != std::string::npos);
    CHECK(report.to_json().find("\"rows_joined\": 5") != std::string::npos);
}

TEST_CASE("coverage bounds are validated") {
    CHECK_THROWS_AS(join_firm_weather({}, {}, 0, BinSpec::standard()), ValidationError);
    CHECK_THROWS_AS(join_firm_weather({}, {}, 367, BinSpec::standard()), ValidationError);
}
