#ifndef TEMPANEL_STUDY_HPP
#define TEMPANEL_STUDY_HPP

#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tempanel/estimator.hpp"
#include "tempanel/features.hpp"
#include "tempanel/hdfe.hpp"
#include "tempanel/panel.hpp"

namespace tempanel {

struct StudyConfig {
    std::string firms_path;
    std::string weather_path;
    std::string out_dir;
    int coverage = 300;          // min valid temperature days per firm-year
    int lag = 1;                 // robustness lag depth
    std::string cluster = "city";
    int industry_min_obs = 10000;
    bool industry_all_bins = false;
    double fe_tolerance = 1e-8;
    int fe_max_iters = 10000;
    int threads = 1;
    WeatherUnits units = WeatherUnits::Metric;
    std::vector<double> bin_edges;  // empty = standard breakpoints
    int bin_reference = 5;          // interval index of the reference group
};

/// The active bin spec for a config (standard unless overridden).
BinSpec study_bin_spec(const StudyConfig& cfg);

/// Factor keyed by a panel column: "firm", "year", "city", "industry" or the
/// materialized interaction "year_city".
FactorGroup factor_from_panel(const PanelDataset& panel, const std::string& name);

/// Display form of a regressor code: bin codes map to their interval labels
/// ("le_m10" -> "<=-10°C"), lag prefixes are preserved, anything else is
/// returned unchanged.
std::string display_label(const std::string& code);

/// One estimation sample, ready for any covariance flavor: singletons
/// dropped, fixed effects absorbed, least squares solved. Point estimates
/// are shared by construction between covariance variants.
struct PreparedSample {
    std::vector<std::string> labels;     // regressor codes, pre-drop
    Eigen::VectorXd y_raw;
    Eigen::MatrixXd x_raw;
    Eigen::VectorXd y_dem;
    Eigen::MatrixXd x_dem;
    OlsFit ols_fit;
    std::vector<int> cluster_of_row;
    int n_clusters = 0;
    int m_absorbed = 0;
    bool m_exact = true;
    int absorb_iterations = 0;
    std::size_t singletons_dropped = 0;
    long long n_rows = 0;
};

PreparedSample prepare_sample(const PanelDataset& panel, const FeatureMatrix& features,
                              const std::vector<std::string>& fe_factors,
                              const std::string& cluster_factor, const StudyConfig& cfg);

FitResult fit_prepared(const PreparedSample& prep, VcovKind kind);

// ---- Table artifacts ----

struct DescriptiveRow {
    std::string code;
    std::string label;
    double mean = 0, sd = 0, min = 0, max = 0;
    long long n = 0;

    bool operator==(const DescriptiveRow&) const = default;
};

struct DescriptivesTable {
    std::vector<DescriptiveRow> rows;

    std::string to_text() const;
    std::string to_json() const;
    static DescriptivesTable from_json(const std::string& text);
    bool operator==(const DescriptivesTable&) const = default;
};

enum class TableKind { Baseline, Robustness, OwnershipHet, IndustryHet };

struct RegressionColumn {
    std::string header;
    bool ok = true;
    std::string note;  // why the column is missing when !ok
    bool controls = false;
    bool clustered = false;
    FitResult fit;
};

struct RegressionTable {
    TableKind kind = TableKind::Baseline;
    std::string title;
    std::vector<std::string> row_codes;  // regressor rows, emission order
    std::vector<RegressionColumn> columns;
    std::vector<std::string> footnotes;
    std::vector<std::string> fe_names;  // footer rows, "Y" in every estimated column

    /// Display label for a row code via the table's label map; lag prefixes
    /// are resolved against the unprefixed code.
    std::map<std::string, std::string> label_map;
    std::string display(const std::string& code) const;

    std::string to_text() const;
    std::string to_json() const;
};

struct CoefPlotArtifact {
    struct Point {
        std::string code;
        std::string label;
        double beta = 0, lo = 0, hi = 0;
    };
    std::vector<Point> points;
    bool zero_line = true;
    std::string title;

    std::string to_csv() const;  // label,beta,lo,hi
    std::string to_svg() const;
};

// ---- Study operations ----

/// Sample mean, sd (n-1), min, max, N per variable. Variables are column
/// codes: cvalue, wind, sea, visb, or any bin code of the given spec.
/// Unknown codes throw ValidationError naming the code.
DescriptivesTable run_descriptives(const PanelDataset& panel,
                                   const std::vector<std::string>& variables,
                                   const BinSpec& spec = BinSpec::standard());

/// Table-1 default variable set.
std::vector<std::string> default_descriptive_variables();

/// Four columns: (1) bins only, (2) bins + controls, both with firm and year
/// effects and classical errors; (3) and (4) re-estimate (1) and (2) with
/// cluster-robust errors. Point estimates of (3)/(4) equal (1)/(2) exactly.
RegressionTable run_baseline(const PanelDataset& panel, const StudyConfig& cfg);

/// Same four-column structure with every regressor replaced by its lagged
/// value; rows lacking a lag source are dropped.
RegressionTable run_robustness(const PanelDataset& panel, const StudyConfig& cfg);

/// Column (2) re-run per ownership subsample. An empty or too-small
/// subsample yields an "insufficient sample" column, not a failure.
RegressionTable run_ownership_het(const PanelDataset& panel, const StudyConfig& cfg);

struct IndustryHetResult {
    RegressionTable table;
    CoefPlotArtifact plot;
};

/// Per-industry screening regressions: industries with fewer than
/// industry_min_obs rows are excluded, survivors are ordered by descending
/// observation count, and each is regressed on the hottest-bin count plus
/// controls with year and city effects.
IndustryHetResult run_industry_het(const PanelDataset& panel, const StudyConfig& cfg);

/// Coefficient series in the given label order with 1.96 bands and a zero
/// reference line. A label absent from the fit throws ValidationError
/// naming it.
CoefPlotArtifact emit_coefplot(const FitResult& fit, const std::vector<std::string>& order,
                               const std::string& title = "");

/// Hot-to-cold bin order used for the benchmark coefficient plot.
std::vector<std::string> coefplot_bin_order();

/// FitResult <-> JSON (vcov included; the reverse reads what emit_coefplot
/// needs).
std::string fit_to_json(const FitResult& fit);
FitResult fit_from_json_coefficients(const std::string& text);

/// Writes the panel (identifiers, outcome, controls and bin columns with
/// ASCII headers) as CSV.
std::string panel_to_csv(const PanelDataset& panel, const BinSpec& spec);

// ---- Pipeline ----

/// Reads and joins the two CSVs per the config. Parse line errors are
/// collected into `log`.
PanelDataset load_panel(const StudyConfig& cfg, std::string* log = nullptr);

/// Runs ingest + descriptives + baseline + robustness + both heterogeneity
/// analyses and writes every artifact under cfg.out_dir. Artifact bytes are
/// a pure function of the inputs and config.
void run_pipeline(const PanelDataset& panel, const StudyConfig& cfg);

}  // namespace tempanel

#endif
