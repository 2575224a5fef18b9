// Temperature-bin panel regression CLI: synthesize, ingest, estimate, plot.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "nlohmann/json.hpp"
#include "tempanel/errors.hpp"
#include "tempanel/study.hpp"
#include "tempanel/synth.hpp"

namespace fs = std::filesystem;
using namespace tempanel;

namespace {

void write_file(const fs::path& path, const std::string& bytes) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << bytes;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void add_data_options(CLI::App* cmd, StudyConfig& cfg) {
    cmd->add_option("--firms", cfg.firms_path, "Firm-year CSV")->required();
    cmd->add_option("--weather", cfg.weather_path, "Daily weather CSV")->required();
    cmd->add_option("--out", cfg.out_dir, "Output directory")->required();
    cmd->add_option("--coverage", cfg.coverage,
                    "Minimum valid temperature days per firm-year");
    cmd->add_option("--cluster", cfg.cluster, "Cluster factor: city or firm")
        ->check(CLI::IsMember({"city", "firm"}));
    cmd->add_option("--threads", cfg.threads, "Worker threads for absorption");
    cmd->add_option("--tol", cfg.fe_tolerance, "Fixed-effect absorption tolerance");
    cmd->add_option("--max-iters", cfg.fe_max_iters, "Absorption iteration cap");
    cmd->add_option("--units", cfg.units, "Weather units in the input file")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, WeatherUnits>{{"metric", WeatherUnits::Metric},
                                                {"gsod", WeatherUnits::GsodImperial}}));
    cmd->add_option("--bin-edges", cfg.bin_edges,
                    "Nine Celsius breakpoints overriding the standard bins")
        ->delimiter(',');
    cmd->add_option("--bin-reference", cfg.bin_reference,
                    "Interval index of the omitted reference bin");
    cmd->set_config("--config", "", "key=value config file");
}

PanelDataset load_with_log(const StudyConfig& cfg, bool quiet = false) {
    std::string log;
    PanelDataset panel = load_panel(cfg, &log);
    if (!quiet) std::cout << log;
    return panel;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tempanel: temperature-bin panel regression engine"};
    app.require_subcommand(1);

    StudyConfig cfg;
    SynthScenario scenario;
    std::string synth_out;
    std::string vars_csv;
    std::string coefplot_table;
    std::string coefplot_out;
    int coefplot_column = 2;

    CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic panel");
    synth->add_option("--out", synth_out, "Output directory")->required();
    synth->add_option("--seed", scenario.seed, "Random seed");
    synth->add_option("--n-firms", scenario.n_firms, "Number of firms");
    synth->add_option("--n-years", scenario.n_years, "Number of years");
    synth->add_option("--first-year", scenario.first_year, "First panel year");
    synth->add_option("--n-cities", scenario.n_cities, "Number of cities");
    synth->add_option("--n-industries", scenario.n_industries, "Number of industries");
    synth->add_option("--alpha", scenario.alpha, "Planted intercept");
    synth->add_option("--noise-sd", scenario.noise_sd, "Idiosyncratic noise sd");
    synth->add_option("--firm-fe-sd", scenario.firm_fe_sd, "Firm effect sd");
    synth->add_option("--year-fe-sd", scenario.year_fe_sd, "Year effect sd");

    CLI::App* ingest = app.add_subcommand("ingest", "Parse, join, and export the panel");
    add_data_options(ingest, cfg);

    CLI::App* describe = app.add_subcommand("describe", "Descriptive statistics");
    add_data_options(describe, cfg);
    describe->add_option("--vars", vars_csv,
                         "Comma-separated variable codes (default: table-1 set)");

    CLI::App* baseline = app.add_subcommand("baseline", "Benchmark regressions");
    add_data_options(baseline, cfg);

    CLI::App* robustness = app.add_subcommand("robustness", "Lagged-regressor regressions");
    add_data_options(robustness, cfg);
    robustness->add_option("--lag", cfg.lag, "Lag depth (>= 1)");

    CLI::App* het_own = app.add_subcommand("het-ownership", "Ownership heterogeneity");
    add_data_options(het_own, cfg);

    CLI::App* het_ind = app.add_subcommand("het-industry", "Industry heterogeneity");
    add_data_options(het_ind, cfg);
    het_ind->add_option("--industry-min-obs", cfg.industry_min_obs,
                        "Minimum observations per industry");
    het_ind->add_flag("--all-bins", cfg.industry_all_bins,
                      "Use all nine bins instead of the hottest only");

    CLI::App* coefplot = app.add_subcommand("coefplot", "Coefficient plot from a table JSON");
    coefplot->add_option("--table", coefplot_table, "baseline/robustness JSON artifact")
        ->required();
    coefplot->add_option("--column", coefplot_column, "Table column (1-based)");
    coefplot->add_option("--out", coefplot_out, "Output directory")->required();

    CLI::App* pipeline = app.add_subcommand("pipeline", "Run every analysis");
    add_data_options(pipeline, cfg);
    pipeline->add_option("--lag", cfg.lag, "Lag depth (>= 1)");
    pipeline->add_option("--industry-min-obs", cfg.industry_min_obs,
                         "Minimum observations per industry");
    pipeline->add_flag("--all-bins", cfg.industry_all_bins,
                       "Use all nine bins in the industry analysis");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (synth->parsed()) {
            const fs::path dir(synth_out);
            fs::create_directories(dir);
            std::ofstream weather(dir / "weather.csv", std::ios::binary);
            std::ofstream firms(dir / "firms.csv", std::ios::binary);
            if (!weather || !firms) throw ValidationError("cannot write into " + synth_out);
            write_csv_files(scenario, weather, firms);
            const SynthDataset data = generate_dataset(scenario);
            write_file(dir / "truth.json", data.truth.to_json(scenario));
            std::cout << "wrote " << (dir / "weather.csv").string() << ", "
                      << (dir / "firms.csv").string() << ", "
                      << (dir / "truth.json").string() << " (" << data.panel.rows.size()
                      << " firm-years)\n";
        } else if (ingest->parsed()) {
            const PanelDataset panel = load_with_log(cfg);
            const fs::path dir(cfg.out_dir);
            fs::create_directories(dir);
            write_file(dir / "join_report.txt", panel.join_report.to_text());
            write_file(dir / "join_report.json", panel.join_report.to_json());
            write_file(dir / "panel.csv", panel_to_csv(panel, study_bin_spec(cfg)));
            std::cout << panel.join_report.to_text();
        } else if (describe->parsed()) {
            const PanelDataset panel = load_with_log(cfg, true);
            std::vector<std::string> vars = default_descriptive_variables();
            if (!vars_csv.empty()) {
                vars.clear();
                std::istringstream is(vars_csv);
                std::string item;
                while (std::getline(is, item, ','))
                    if (!item.empty()) vars.push_back(item);
            }
            const DescriptivesTable table =
                run_descriptives(panel, vars, study_bin_spec(cfg));
            const fs::path dir(cfg.out_dir);
            fs::create_directories(dir);
            write_file(dir / "descriptives.txt", table.to_text());
            write_file(dir / "descriptives.json", table.to_json());
            std::cout << table.to_text();
        } else if (baseline->parsed()) {
            const PanelDataset panel = load_with_log(cfg, true);
            const RegressionTable table = run_baseline(panel, cfg);
            const fs::path dir(cfg.out_dir);
            fs::create_directories(dir);
            write_file(dir / "baseline.txt", table.to_text());
            write_file(dir / "baseline.json", table.to_json());
            const CoefPlotArtifact plot =
                emit_coefplot(table.columns[1].fit, coefplot_bin_order(),
                              "Benchmark regression coefficients");
            write_file(dir / "baseline_coefplot.svg", plot.to_svg());
            write_file(dir / "baseline_coefplot.csv", plot.to_csv());
            std::cout << table.to_text();
        } else if (robustness->parsed()) {
            const PanelDataset panel = load_with_log(cfg, true);
            const RegressionTable table = run_robustness(panel, cfg);
            const fs::path dir(cfg.out_dir);
            fs::create_directories(dir);
            write_file(dir / "robustness.txt", table.to_text());
            write_file(dir / "robustness.json", table.to_json());
            std::cout << table.to_text();
        } else if (het_own->parsed()) {
            const PanelDataset panel = load_with_log(cfg, true);
            const RegressionTable table = run_ownership_het(panel, cfg);
            const fs::path dir(cfg.out_dir);
            fs::create_directories(dir);
            write_file(dir / "het_ownership.txt", table.to_text());
            write_file(dir / "het_ownership.json", table.to_json());
            std::cout << table.to_text();
        } else if (het_ind->parsed()) {
            const PanelDataset panel = load_with_log(cfg, true);
            const IndustryHetResult result = run_industry_het(panel, cfg);
            const fs::path dir(cfg.out_dir);
            fs::create_directories(dir);
            write_file(dir / "het_industry.txt", result.table.to_text());
            write_file(dir / "het_industry.json", result.table.to_json());
            write_file(dir / "het_industry_coefplot.svg", result.plot.to_svg());
            write_file(dir / "het_industry_coefplot.csv", result.plot.to_csv());
            std::cout << result.table.to_text();
        } else if (coefplot->parsed()) {
            const auto j = nlohmann::ordered_json::parse(read_file(coefplot_table));
            const auto& columns = j.at("columns");
            if (coefplot_column < 1 ||
                coefplot_column > static_cast<int>(columns.size()))
                throw ValidationError("coefplot: column out of range");
            const auto& col = columns.at(static_cast<std::size_t>(coefplot_column - 1));
            if (!col.at("ok").get<bool>())
                throw ValidationError("coefplot: selected column was not estimated");
            const FitResult fit = fit_from_json_coefficients(col.at("fit").dump());
            // Lagged tables carry L-prefixed labels; plot those when present.
            std::vector<std::string> order = coefplot_bin_order();
            for (auto& code : order) {
                bool found = false;
                for (const auto& c : fit.coefficients) found = found || c.label == code;
                if (!found)
                    for (const auto& c : fit.coefficients)
                        if (c.label == "L" + code) code = "L" + code;
            }
            const CoefPlotArtifact plot =
                emit_coefplot(fit, order, "Regression coefficients");
            const fs::path dir(coefplot_out);
            fs::create_directories(dir);
            write_file(dir / "coefplot.svg", plot.to_svg());
            write_file(dir / "coefplot.csv", plot.to_csv());
            std::cout << "wrote " << (dir / "coefplot.svg").string() << "\n";
        } else if (pipeline->parsed()) {
            const PanelDataset panel = load_with_log(cfg);
            run_pipeline(panel, cfg);
            std::cout << "artifacts written to " << cfg.out_dir << "\n";
        }
    } catch (const EstimationError& e) {
        std::cerr << "estimation error: " << e.what() << "\n";
        return 3;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {  // malformed JSON, filesystem failures
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
