#include "tempanel/study.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "tempanel/errors.hpp"
#include "tempanel/rng.hpp"
#include "tempanel/synth.hpp"

using namespace tempanel;
namespace fs = std::filesystem;

namespace {

SynthScenario study_scenario(std::uint64_t seed = 1) {
    SynthScenario s;
    s.n_firms = 40;
    s.n_years = 5;
    s.n_cities = 8;
    s.n_industries = 3;
    s.seed = seed;
    return s;
}

PanelDataset tiny_panel(const std::vector<double>& wind_values) {
    PanelDataset panel;
    int year = 2005;
    for (double w : wind_values) {
        PanelRow row;
        row.firm_id = "F1";
        row.year = year++;
        row.city_code = "C1";
        row.industry_code = "I1";
        row.cvalue = 0.5;
        row.wind = w;
        row.sea = 1013.0;
        row.visb = 9.0;
        row.bins.reference_days = 365;
        row.bins.total_days = 365;
        panel.rows.push_back(row);
    }
    return panel;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

TEST_CASE("descriptives match hand values") {
    const DescriptivesTable t = run_descriptives(tiny_panel({1, 2, 3}), {"wind"});
    REQUIRE(t.rows.size() == 1);
    CHECK(t.rows[0].mean == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(t.rows[0].sd == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(t.rows[0].min == 1.0);
    CHECK(t.rows[0].max == 3.0);
    CHECK(t.rows[0].n == 3);
}

TEST_CASE("a constant column has zero sd") {
    const DescriptivesTable t = run_descriptives(tiny_panel({5, 5}), {"wind"});
    CHECK(t.rows[0].sd == 0.0);
}

TEST_CASE("descriptives match the direct-formula oracle on random data") {
    Rng rng(71);
    std::vector<double> values;
    for (int i = 0; i < 500; ++i) values.push_back(rng.normal(10.0, 7.0));
    const DescriptivesTable t = run_descriptives(tiny_panel(values), {"wind"});

    double sum = 0;
    for (double v : values) sum += v;
    const double mean = sum / static_cast<double>(values.size());
    double ss = 0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    CHECK(std::abs(t.rows[0].mean - mean) <= 1e-12 * std::max(1.0, std::abs(mean)));
    CHECK(std::abs(t.rows[0].sd - sd) <= 1e-12 * std::max(1.0, sd));
}

TEST_CASE("unknown descriptive variable names the offender") {
    CHECK_THROWS_WITH_AS(run_descriptives(tiny_panel({1}), {"nope"}),
                         doctest::Contains("nope"), ValidationError);
}

TEST_CASE("descriptives survive a json round trip losslessly") {
    Rng rng(73);
    std::vector<double> values;
    for (int i = 0; i < 100; ++i) values.push_back(rng.uniform(-1e6, 1e6));
    const DescriptivesTable t =
        run_descriptives(tiny_panel(values), {"wind", "cvalue", "gt30"});
    const DescriptivesTable back = DescriptivesTable::from_json(t.to_json());
    CHECK(t == back);
}

TEST_CASE("baseline table: shared points, reference bin excluded, oracle agreement") {
    const SynthDataset data = generate_dataset(study_scenario(11));
    StudyConfig cfg;
    cfg.fe_tolerance = 1e-11;
    const RegressionTable table = run_baseline(data.panel, cfg);
    REQUIRE(table.columns.size() == 4);

    // (3) repeats (1) and (4) repeats (2) exactly; only the errors move.
    for (int pair = 0; pair < 2; ++pair) {
        const FitResult& point = table.columns[static_cast<std::size_t>(pair)].fit;
        const FitResult& clustered = table.columns[static_cast<std::size_t>(pair + 2)].fit;
        REQUIRE(point.coefficients.size() == clustered.coefficients.size());
        bool any_se_differs = false;
        for (std::size_t j = 0; j < point.coefficients.size(); ++j) {
            CHECK(std::abs(point.coefficients[j].beta - clustered.coefficients[j].beta) <=
                  1e-12 * std::max(1.0, std::abs(point.coefficients[j].beta)));
            any_se_differs =
                any_se_differs ||
                point.coefficients[j].se != clustered.coefficients[j].se;
        }
        CHECK(any_se_differs);
    }

    // The reference bin label never shows up.
    for (const auto& col : table.columns)
        for (const auto& c : col.fit.coefficients) {
            CHECK(c.label != "10_15");
            CHECK(display_label(c.label) != "10~15°C");
        }

    // Column (1) bins-only fit equals the dummy-variable oracle.
    std::vector<FactorGroup> groups = {factor_from_panel(data.panel, "firm"),
                                       factor_from_panel(data.panel, "year")};
    const SingletonDropResult sdrop = drop_singletons(groups);
    PanelDataset kept;
    for (std::size_t i = 0; i < data.panel.rows.size(); ++i)
        if (sdrop.keep[i]) kept.rows.push_back(data.panel.rows[i]);
    const FeatureMatrix features = build_features(kept, BinSpec::standard(), false);
    const OracleFit oracle =
        oracle_ols_dummies(outcome_vector(kept), features.values, sdrop.groups);
    const FitResult& col1 = table.columns[0].fit;
    REQUIRE(static_cast<int>(col1.coefficients.size()) == oracle.beta.size());
    for (std::size_t j = 0; j < col1.coefficients.size(); ++j)
        CHECK(col1.coefficients[j].beta ==
              doctest::Approx(oracle.beta(static_cast<Eigen::Index>(j))).epsilon(1e-8));

    // Footer bookkeeping.
    CHECK(table.columns[0].controls == false);
    CHECK(table.columns[1].controls == true);
    CHECK(table.columns[2].clustered == true);
    CHECK(col1.n_obs == static_cast<long long>(kept.rows.size()));
}

TEST_CASE("baseline text table lays out like the benchmark table") {
    const SynthDataset data = generate_dataset(study_scenario(13));
    StudyConfig cfg;
    const RegressionTable table = run_baseline(data.panel, cfg);
    const std::string text = table.to_text();
    CHECK(text.find("cvalue (1)") != std::string::npos);
    CHECK(text.find("<=-10°C") != std::string::npos);
    CHECK(text.find(">30°C") != std::string::npos);
    CHECK(text.find("10~15") == std::string::npos);  // reference bin stays out
    CHECK(text.find("Constant") != std::string::npos);
    CHECK(text.find("Year FE") != std::string::npos);
    CHECK(text.find("Firm FE") != std::string::npos);
    CHECK(text.find("Observations") != std::string::npos);
    CHECK(text.find("R-squared") != std::string::npos);
    CHECK(text.find("*** p<0.01, ** p<0.05, * p<0.1") != std::string::npos);
    // Cold rows precede hot rows, controls come after the bins.
    CHECK(text.find("<=-10°C") < text.find(">30°C"));
    CHECK(text.find(">30°C") < text.find("wind"));
    CHECK(text.find("wind") < text.find("Constant"));
}

TEST_CASE("robustness runs on the trimmed sample with L-prefixed rows") {
    const SynthDataset data = generate_dataset(study_scenario(17));
    StudyConfig cfg;
    cfg.lag = 1;
    const RegressionTable table = run_robustness(data.panel, cfg);
    REQUIRE(table.columns.size() == 4);
    CHECK(table.row_codes.front() == "Lle_m10");
    CHECK(table.row_codes.back() == "Lvisb");
    CHECK(table.display("Lgt30") == "L>30°C");
    // 40 firms x 5 years loses the first year.
    CHECK(table.columns[0].fit.n_obs <= 40 * 4);
    const std::string text = table.to_text();
    CHECK(text.find("L>30°C") != std::string::npos);

    StudyConfig bad = cfg;
    bad.lag = 10;  // beyond the span
    CHECK_THROWS_AS(run_robustness(data.panel, bad), EstimationError);
}

TEST_CASE("robustness with a lagged planted effect recovers it") {
    // Outcome depends on last year's hottest-bin count only.
    SynthScenario s = study_scenario(19);
    s.noise_sd = 0.002;
    SynthDataset data = generate_dataset(s);
    const FeatureMatrix features = build_features(data.panel, BinSpec::standard(), true);
    const LaggedPanel lagged = build_lagged(data.panel, features, 1);
    const double planted = -0.004;
    PanelDataset rewired = lagged.panel;
    for (std::size_t i = 0; i < rewired.rows.size(); ++i) {
        const double lag_gt30 = lagged.features.values(static_cast<Eigen::Index>(i), 8);
        rewired.rows[i].cvalue = std::clamp(
            0.5 + planted * lag_gt30 + data.truth.noise[i] * 0.1, 0.0, 1.0);
    }
    StudyConfig cfg;
    cfg.fe_tolerance = 1e-11;
    const PreparedSample prep =
        prepare_sample(rewired, lagged.features, {"firm", "year"}, "city", cfg);
    const FitResult fit = fit_prepared(prep, VcovKind::Classical);
    for (const auto& c : fit.coefficients) {
        if (c.label == "Lgt30") {
            CHECK(c.beta == doctest::Approx(planted).epsilon(0.2));
            CHECK(c.ci_lo <= planted);
            CHECK(c.ci_hi >= planted);
        }
    }
}

TEST_CASE("ownership heterogeneity: all-private panel estimates one column") {
    SynthDataset data = generate_dataset(study_scenario(23));
    for (auto& row : data.panel.rows) row.ownership = Ownership::Private;
    StudyConfig cfg;
    const RegressionTable table = run_ownership_het(data.panel, cfg);
    REQUIRE(table.columns.size() == 5);
    CHECK(table.columns[0].ok);
    for (std::size_t c = 1; c < 5; ++c) {
        CHECK(!table.columns[c].ok);
        CHECK(table.columns[c].note.find("insufficient sample") != std::string::npos);
    }
    const std::string text = table.to_text();
    CHECK(text.find("Private Enterprises") != std::string::npos);
    CHECK(text.find("insufficient sample") != std::string::npos);
}

TEST_CASE("ownership heterogeneity columns partition the panel and refit cleanly") {
    const SynthDataset data = generate_dataset(study_scenario(29));
    StudyConfig cfg;
    cfg.fe_tolerance = 1e-11;
    const RegressionTable table = run_ownership_het(data.panel, cfg);
    long long total_n = 0;
    for (const auto& col : table.columns)
        if (col.ok) total_n += col.fit.n_obs;
    CHECK(total_n <= static_cast<long long>(data.panel.rows.size()));

    // Each estimated column equals a standalone fit on the filtered panel.
    const Ownership kinds[] = {Ownership::Private, Ownership::StateOwned,
                               Ownership::Collective, Ownership::Mixed,
                               Ownership::Foreign};
    for (std::size_t k = 0; k < 5; ++k) {
        if (!table.columns[k].ok) continue;
        PanelDataset sub;
        for (const auto& row : data.panel.rows)
            if (row.ownership == kinds[k]) sub.rows.push_back(row);
        const FeatureMatrix features = build_features(sub, BinSpec::standard(), true);
        const PreparedSample prep =
            prepare_sample(sub, features, {"firm", "year"}, "city", cfg);
        const FitResult refit = fit_prepared(prep, VcovKind::Classical);
        REQUIRE(refit.coefficients.size() == table.columns[k].fit.coefficients.size());
        for (std::size_t j = 0; j < refit.coefficients.size(); ++j)
            CHECK(refit.coefficients[j].beta ==
                  table.columns[k].fit.coefficients[j].beta);
    }
}

TEST_CASE("industry screen keeps only industries above the threshold") {
    // Industry A: 4 firms x 2 years in two cities; industry B: 3 rows.
    PanelDataset panel;
    Rng rng(31);
    for (int f = 0; f < 4; ++f) {
        for (int y = 0; y < 2; ++y) {
            PanelRow row;
            row.firm_id = "F" + std::to_string(f);
            row.year = 2005 + y;
            row.city_code = f < 2 ? "C1" : "C2";
            row.industry_code = "A";
            row.cvalue = rng.uniform(0.2, 0.8);
            row.wind = rng.uniform(3.0, 8.0);
            row.sea = rng.uniform(1008.0, 1020.0);
            row.visb = rng.uniform(5.0, 12.0);
            row.bins.counts[8] = static_cast<int>(rng.below(20));
            row.bins.reference_days = 365 - row.bins.counts[8];
            row.bins.total_days = 365;
            panel.rows.push_back(row);
        }
    }
    for (int i = 0; i < 3; ++i) {
        PanelRow row = panel.rows[static_cast<std::size_t>(i)];
        row.firm_id = "G" + std::to_string(i);
        row.industry_code = "B";
        panel.rows.push_back(row);
    }

    StudyConfig cfg;
    cfg.industry_min_obs = 5;
    const IndustryHetResult result = run_industry_het(panel, cfg);
    REQUIRE(result.table.columns.size() == 1);
    CHECK(result.table.columns[0].header == "A");
    CHECK(result.table.columns[0].ok);
    CHECK(result.plot.points.size() == 1);
    CHECK(result.plot.points[0].code == "A");

    StudyConfig too_high = cfg;
    too_high.industry_min_obs = 100;
    CHECK_THROWS_AS(run_industry_het(panel, too_high), EstimationError);
}

TEST_CASE("industry survivors are ordered by descending observation count") {
    SynthDataset data = generate_dataset(study_scenario(37));
    // Rewrite industries so counts are controlled: A > C > B.
    for (std::size_t i = 0; i < data.panel.rows.size(); ++i) {
        if (i < 100) data.panel.rows[i].industry_code = "A";
        else if (i < 160) data.panel.rows[i].industry_code = "C";
        else data.panel.rows[i].industry_code = "B";
    }
    StudyConfig cfg;
    cfg.industry_min_obs = 10;
    const IndustryHetResult result = run_industry_het(data.panel, cfg);
    REQUIRE(result.table.columns.size() == 3);
    CHECK(result.table.columns[0].header == "A");
    CHECK(result.table.columns[1].header == "C");
    CHECK(result.table.columns[2].header == "B");

    // Survivor fits are standalone refits on the filtered panel.
    PanelDataset sub;
    for (const auto& row : data.panel.rows)
        if (row.industry_code == "A") sub.rows.push_back(row);
    const FeatureMatrix all = build_features(sub, BinSpec::standard(), true);
    FeatureMatrix features;
    features.labels = {"gt30", "wind", "sea", "visb"};
    features.values.resize(all.values.rows(), 4);
    features.values.col(0) = all.values.col(8);
    features.values.col(1) = all.values.col(9);
    features.values.col(2) = all.values.col(10);
    features.values.col(3) = all.values.col(11);
    const PreparedSample prep = prepare_sample(sub, features, {"year", "city"}, "city", cfg);
    const FitResult refit = fit_prepared(prep, VcovKind::Classical);
    for (std::size_t j = 0; j < refit.coefficients.size(); ++j)
        CHECK(refit.coefficients[j].beta ==
              result.table.columns[0].fit.coefficients[j].beta);
}

TEST_CASE("coefplot arithmetic, ordering, and determinism") {
    FitResult fit;
    Coefficient c;
    c.label = "gt30";
    c.beta = 0.001;
    c.se = 0.0005;
    c.ci_lo = c.beta - 1.96 * c.se;
    c.ci_hi = c.beta + 1.96 * c.se;
    fit.coefficients.push_back(c);
    Coefficient zero;
    zero.label = "le_m10";
    zero.beta = 0.0;
    zero.se = 0.001;
    zero.ci_lo = -1.96e-3;
    zero.ci_hi = 1.96e-3;
    fit.coefficients.push_back(zero);

    const CoefPlotArtifact plot = emit_coefplot(fit, {"gt30", "le_m10"}, "test");
    REQUIRE(plot.points.size() == 2);
    CHECK(plot.points[0].lo == doctest::Approx(0.00002).epsilon(1e-9));
    CHECK(plot.points[0].hi == doctest::Approx(0.00198).epsilon(1e-9));
    // A zero estimate sits symmetric about the zero line.
    CHECK(plot.points[1].lo == doctest::Approx(-plot.points[1].hi).epsilon(1e-12));
    CHECK(plot.zero_line);

    const CoefPlotArtifact again = emit_coefplot(fit, {"gt30", "le_m10"}, "test");
    CHECK(plot.to_svg() == again.to_svg());
    CHECK(plot.to_csv() == again.to_csv());
    CHECK(plot.to_svg().find("dasharray") != std::string::npos);  // zero line drawn
    CHECK(plot.to_csv().rfind("label,beta,ci_lo,ci_hi\n", 0) == 0);
    // Labels with < and > must be escaped so the SVG stays well-formed XML.
    CHECK(plot.to_svg().find("&lt;=-10") != std::string::npos);
    CHECK(plot.to_svg().find("&gt;30") != std::string::npos);
    CHECK(plot.to_svg().find("><=") == std::string::npos);

    CHECK_THROWS_WITH_AS(emit_coefplot(fit, {"missing"}), doctest::Contains("missing"),
                         ValidationError);
}

TEST_CASE("benchmark coefplot order runs hot to cold") {
    const auto order = coefplot_bin_order();
    REQUIRE(order.size() == 9);
    CHECK(order.front() == "gt30");
    CHECK(order[1] == "25_30");
    CHECK(order.back() == "le_m10");
}

TEST_CASE("fit json round trip preserves what the plot needs") {
    const SynthDataset data = generate_dataset(study_scenario(41));
    StudyConfig cfg;
    const RegressionTable table = run_baseline(data.panel, cfg);
    const std::string json = fit_to_json(table.columns[1].fit);
    const FitResult back = fit_from_json_coefficients(json);
    REQUIRE(back.coefficients.size() == table.columns[1].fit.coefficients.size());
    for (std::size_t j = 0; j < back.coefficients.size(); ++j) {
        CHECK(back.coefficients[j].beta == table.columns[1].fit.coefficients[j].beta);
        CHECK(back.coefficients[j].ci_lo == table.columns[1].fit.coefficients[j].ci_lo);
    }
    const CoefPlotArtifact a = emit_coefplot(table.columns[1].fit, coefplot_bin_order());
    const CoefPlotArtifact b = emit_coefplot(back, coefplot_bin_order());
    CHECK(a.to_csv() == b.to_csv());
}

TEST_CASE("pipeline artifacts are byte-stable across runs and thread counts") {
    const SynthDataset data = generate_dataset(study_scenario(43));
    StudyConfig cfg;
    cfg.industry_min_obs = 20;
    const fs::path base = fs::temp_directory_path() / "tempanel_test_pipeline";
    fs::remove_all(base);

    const auto run_into = [&](const std::string& name, int threads) {
        StudyConfig local = cfg;
        local.threads = threads;
        local.out_dir = (base / name).string();
        run_pipeline(data.panel, local);
        return base / name;
    };
    const fs::path a = run_into("a", 1);
    const fs::path b = run_into("b", 1);
    const fs::path c = run_into("c", 4);

    std::size_t compared = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
        const std::string name = entry.path().filename().string();
        CHECK(slurp(entry.path()) == slurp(b / name));
        CHECK(slurp(entry.path()) == slurp(c / name));
        ++compared;
    }
    CHECK(compared >= 14);
    fs::remove_all(base);
}

TEST_CASE("panel csv export carries the bin columns in table order") {
    const SynthDataset data = generate_dataset(study_scenario(47));
    const std::string csv = panel_to_csv(data.panel, BinSpec::standard());
    CHECK(csv.rfind("firm_id,year,city_code,ownership,industry_code,cvalue,"
                    "wind,sea,visb,le_m10,m10_m5,m5_0,0_5,5_10,15_20,20_25,25_30,gt30,"
                    "ref_days,total_days\n",
                    0) == 0);
}
