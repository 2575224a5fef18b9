#ifndef TEMPANEL_SYNTH_HPP
#define TEMPANEL_SYNTH_HPP

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tempanel/hdfe.hpp"
#include "tempanel/panel.hpp"

namespace tempanel {

/// Per-city sinusoidal climate: annual mean, seasonal amplitude and daily
/// noise are drawn once per city from these ranges; a per-(city, year) shift
/// adds year-to-year variation so bin counts move within firm.
struct ClimateProfile {
    double mean_lo = 2.0, mean_hi = 18.0;
    double amplitude_lo = 8.0, amplitude_hi = 16.0;
    double daily_noise_lo = 2.0, daily_noise_hi = 4.0;
    double year_shift_sd = 0.8;
};

/// Everything that pins down a synthetic panel. Identical scenarios give
/// byte-identical output. Planted bin/control effects default to the
/// benchmark-table scale so desk runs resemble real output magnitudes.
struct SynthScenario {
    int n_firms = 200;
    int n_years = 10;
    int first_year = 2005;
    int n_cities = 20;
    int n_industries = 8;
    // Cold-to-hot, same order as the regressor columns.
    std::array<double, 9> beta_bins = {-0.000319, -6.22e-05, 0.000135,
                                       7.74e-05,  0.000175,  7.79e-05,
                                       5.88e-05,  -0.000163, -0.000506};
    std::array<double, 3> beta_controls = {-0.0129, -0.00148, 0.00187};  // wind, sea, visb
    double alpha = 1.904;
    double firm_fe_sd = 0.05;
    double year_fe_sd = 0.01;
    double noise_sd = 0.05;
    std::uint64_t seed = 1;
    ClimateProfile climate;
};

/// The planted data-generating process, recorded so any outcome can be
/// re-assembled:
///   cvalue = alpha + bins.beta_bins + [wind sea visb].beta_controls
///            + firm_fe[firm] + year_fe[year - first_year] + noise[row],
/// clamped to [0, 1] (never binding with the default dispersions).
struct SynthTruth {
    double alpha = 0.0;
    std::array<double, 9> beta_bins{};
    std::array<double, 3> beta_controls{};
    std::vector<double> firm_fe;  // by firm index
    std::vector<double> year_fe;  // by year offset
    std::vector<double> noise;    // by panel row, (firm, year) order

    std::string to_json(const SynthScenario& scenario) const;
};

struct SynthDataset {
    PanelDataset panel;  // as join_firm_weather would produce it
    SynthTruth truth;
};

/// In-memory generation: daily series are summarized per (city, year) and
/// discarded, so this scales to millions of firm-years.
SynthDataset generate_dataset(const SynthScenario& scenario);

/// Streams the same scenario as the two ingestion CSVs (plus truth JSON via
/// SynthTruth::to_json). Numbers use shortest round-trip formatting, so
/// parsing the files back reproduces generate_dataset exactly.
void write_csv_files(const SynthScenario& scenario, std::ostream& weather_csv,
                     std::ostream& firm_csv);

/// Independent verifier: explicit fixed-effect dummy columns, normal
/// equations solved with an explicit pseudo-inverse, and its own
/// classical/CR1 formulas. Shares no code path with absorb()/ols().
struct OracleFit {
    Eigen::VectorXd beta;            // regressor block of the pseudo-inverse solve
    Eigen::VectorXd beta_fwl;        // second route: explicit projection solve
    Eigen::VectorXd residuals;
    Eigen::MatrixXd vcov_classical;
    Eigen::MatrixXd vcov_cluster;    // empty unless clusters given
    int m_rank_dummies = 0;          // brute-force rank of the dummy block
};

OracleFit oracle_ols_dummies(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                             const std::vector<FactorGroup>& groups,
                             const std::vector<int>* cluster_of_row = nullptr);

/// Brute-force rank of the stacked dummy matrix of the given groups.
int dummy_matrix_rank(const std::vector<FactorGroup>& groups);

/// Textbook HC1: (N/(N-K)) (X'X)^-1 [sum_i e_i^2 x_i x_i'] (X'X)^-1 with
/// K = k + m_absorbed, assembled element by element.
Eigen::MatrixXd oracle_hc1(const Eigen::MatrixXd& x, const Eigen::VectorXd& residuals,
                           int m_absorbed);

}  // namespace tempanel

#endif
