#include "tempanel/synth.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>

#include <Eigen/Dense>

#include "nlohmann/json.hpp"
#include "tempanel/errors.hpp"
#include "tempanel/format.hpp"
#include "tempanel/rng.hpp"

namespace tempanel {

namespace {

constexpr double kTau = 2.0 * 3.14159265358979323846;

// Substream tags; each consumer gets an independent deterministic stream.
enum StreamTag : std::uint64_t {
    kYearEffects = 1,
    kFirmEffects = 2,
    kFirmAttrs = 3,
    kNoise = 4,
    kCityBase = 0x10000,
};

std::string padded_id(char prefix, int value, int width) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%c%0*d", prefix, width, value);
    return buf;
}

struct CityParams {
    double mean, amplitude, daily_noise, wind_base, sea_base, visb_base;
};

CityParams city_params(const SynthScenario& s, int city) {
    Rng rng = Rng::fork(s.seed, kCityBase + static_cast<std::uint64_t>(city));
    CityParams p;
    p.mean = rng.uniform(s.climate.mean_lo, s.climate.mean_hi);
    p.amplitude = rng.uniform(s.climate.amplitude_lo, s.climate.amplitude_hi);
    p.daily_noise = rng.uniform(s.climate.daily_noise_lo, s.climate.daily_noise_hi);
    p.wind_base = rng.uniform(4.5, 7.0);
    p.sea_base = rng.uniform(1010.0, 1021.0);
    p.visb_base = rng.uniform(6.0, 11.0);
    return p;
}

int days_in_year(int year) {
    const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
    return leap ? 366 : 365;
}

struct DailySeries {
    std::vector<double> temp, wind, sea, visb;
};

// One (city, year) of daily weather. The stream is forked per (city, year)
// so generation is seed-partitioned by city and merge order never matters.
DailySeries make_daily(const SynthScenario& s, const CityParams& p, int city, int year) {
    Rng rng = Rng::fork(s.seed, kCityBase + 1000003ULL * static_cast<std::uint64_t>(city) +
                                    static_cast<std::uint64_t>(year));
    const double year_shift = rng.normal(0.0, s.climate.year_shift_sd);
    const int days = days_in_year(year);
    DailySeries d;
    d.temp.reserve(days);
    d.wind.reserve(days);
    d.sea.reserve(days);
    d.visb.reserve(days);
    for (int doy = 0; doy < days; ++doy) {
        // Seasonal peak around mid-July.
        const double seasonal =
            p.amplitude * std::sin(kTau * (doy - 105.0) / static_cast<double>(days));
        d.temp.push_back(p.mean + year_shift + seasonal + rng.normal(0.0, p.daily_noise));
        d.wind.push_back(std::max(0.0, p.wind_base + rng.normal(0.0, 1.0)));
        d.sea.push_back(p.sea_base + rng.normal(0.0, 3.0));
        d.visb.push_back(std::max(0.5, p.visb_base + rng.normal(0.0, 1.5)));
    }
    return d;
}

struct CityYearSummary {
    BinCounts bins;
    double wind = 0, sea = 0, visb = 0;
};

CityYearSummary summarize(const DailySeries& d, const BinSpec& spec) {
    CityYearSummary s;
    s.bins = count_bins(d.temp, spec);
    const auto mean = [](const std::vector<double>& v) {
        double sum = 0;
        for (double x : v) sum += x;
        return sum / static_cast<double>(v.size());
    };
    s.wind = mean(d.wind);
    s.sea = mean(d.sea);
    s.visb = mean(d.visb);
    return s;
}

struct FirmAttrs {
    int city;
    Ownership ownership;
    int industry;
};

// Ownership mix roughly matching a large industrial survey:
// private 39%, mixed 24%, state 15%, collective 14%, foreign 8%.
Ownership draw_ownership(Rng& rng) {
    const double u = rng.uniform();
    if (u < 0.39) return Ownership::Private;
    if (u < 0.54) return Ownership::StateOwned;
    if (u < 0.68) return Ownership::Collective;
    if (u < 0.92) return Ownership::Mixed;
    return Ownership::Foreign;
}

std::vector<FirmAttrs> firm_attributes(const SynthScenario& s) {
    Rng rng = Rng::fork(s.seed, kFirmAttrs);
    std::vector<FirmAttrs> out;
    out.reserve(static_cast<std::size_t>(s.n_firms));
    for (int f = 0; f < s.n_firms; ++f) {
        FirmAttrs a;
        a.city = static_cast<int>(rng.below(static_cast<std::uint64_t>(s.n_cities)));
        a.ownership = draw_ownership(rng);
        a.industry = static_cast<int>(rng.below(static_cast<std::uint64_t>(s.n_industries)));
        out.push_back(a);
    }
    return out;
}

void validate(const SynthScenario& s) {
    if (s.n_firms < 2 || s.n_years < 2 || s.n_cities < 2 || s.n_industries < 2)
        throw ValidationError("synth: all counts must be >= 2");
    if (s.firm_fe_sd < 0 || s.year_fe_sd < 0 || s.noise_sd < 0)
        throw ValidationError("synth: dispersions must be >= 0");
}

}  // namespace

SynthDataset generate_dataset(const SynthScenario& s) {
    validate(s);
    const BinSpec& spec = BinSpec::standard();

    std::vector<CityYearSummary> summaries(
        static_cast<std::size_t>(s.n_cities) * static_cast<std::size_t>(s.n_years));
    for (int city = 0; city < s.n_cities; ++city) {
        const CityParams p = city_params(s, city);
        for (int t = 0; t < s.n_years; ++t) {
            const DailySeries d = make_daily(s, p, city, s.first_year + t);
            summaries[static_cast<std::size_t>(city) * s.n_years + t] = summarize(d, spec);
        }
    }

    SynthDataset out;
    out.truth.alpha = s.alpha;
    out.truth.beta_bins = s.beta_bins;
    out.truth.beta_controls = s.beta_controls;
    {
        Rng rng = Rng::fork(s.seed, kYearEffects);
        for (int t = 0; t < s.n_years; ++t)
            out.truth.year_fe.push_back(rng.normal(0.0, s.year_fe_sd));
    }
    {
        Rng rng = Rng::fork(s.seed, kFirmEffects);
        for (int f = 0; f < s.n_firms; ++f)
            out.truth.firm_fe.push_back(rng.normal(0.0, s.firm_fe_sd));
    }
    const std::vector<FirmAttrs> attrs = firm_attributes(s);

    Rng noise_rng = Rng::fork(s.seed, kNoise);
    const int firm_width = s.n_firms >= 1000000 ? 7 : 6;
    out.panel.rows.reserve(static_cast<std::size_t>(s.n_firms) *
                           static_cast<std::size_t>(s.n_years));
    for (int f = 0; f < s.n_firms; ++f) {
        for (int t = 0; t < s.n_years; ++t) {
            const CityYearSummary& cy =
                summaries[static_cast<std::size_t>(attrs[f].city) * s.n_years + t];
            PanelRow row;
            row.firm_id = padded_id('F', f + 1, firm_width);
            row.year = s.first_year + t;
            row.city_code = padded_id('C', attrs[f].city + 1, 4);
            row.ownership = attrs[f].ownership;
            row.industry_code = padded_id('I', attrs[f].industry + 1, 2);
            row.wind = cy.wind;
            row.sea = cy.sea;
            row.visb = cy.visb;
            row.bins = cy.bins;

            const double eps = noise_rng.normal(0.0, s.noise_sd);
            out.truth.noise.push_back(eps);
            double value = s.alpha + eps + out.truth.firm_fe[f] + out.truth.year_fe[t];
            for (int b = 0; b < BinSpec::kRegressors; ++b)
                value += s.beta_bins[static_cast<std::size_t>(b)] *
                         cy.bins.counts[static_cast<std::size_t>(b)];
            value += s.beta_controls[0] * cy.wind + s.beta_controls[1] * cy.sea +
                     s.beta_controls[2] * cy.visb;
            row.cvalue = std::clamp(value, 0.0, 1.0);
            out.panel.rows.push_back(std::move(row));
        }
    }
    out.panel.join_report.rows_in = out.panel.rows.size();
    out.panel.join_report.rows_joined = out.panel.rows.size();
    return out;
}

void write_csv_files(const SynthScenario& s, std::ostream& weather_csv,
                     std::ostream& firm_csv) {
    validate(s);
    weather_csv << "county_code,date,temp_c,wind,sea_hpa,visb\n";
    for (int city = 0; city < s.n_cities; ++city) {
        const CityParams p = city_params(s, city);
        const std::string code = padded_id('C', city + 1, 4);
        for (int t = 0; t < s.n_years; ++t) {
            const int year = s.first_year + t;
            const DailySeries d = make_daily(s, p, city, year);
            Date date{year, 1, 1};
            for (std::size_t i = 0; i < d.temp.size(); ++i) {
                weather_csv << code << ',' << date.to_string() << ',' << shortest(d.temp[i])
                            << ',' << shortest(d.wind[i]) << ',' << shortest(d.sea[i]) << ','
                            << shortest(d.visb[i]) << '\n';
                ++date.day;
                if (!date.valid()) {
                    date.day = 1;
                    ++date.month;
                }
            }
        }
    }

    // Row order, ids and outcome values must match generate_dataset exactly.
    const SynthDataset data = generate_dataset(s);
    firm_csv << "firm_id,year,city_code,ownership,industry_code,cvalue\n";
    for (const PanelRow& row : data.panel.rows) {
        firm_csv << row.firm_id << ',' << row.year << ',' << row.city_code << ','
                 << ownership_code(row.ownership) << ',' << row.industry_code << ','
                 << shortest(row.cvalue) << '\n';
    }
}

std::string SynthTruth::to_json(const SynthScenario& s) const {
    nlohmann::ordered_json j;
    j["scenario"] = {{"n_firms", s.n_firms},
                     {"n_years", s.n_years},
                     {"first_year", s.first_year},
                     {"n_cities", s.n_cities},
                     {"n_industries", s.n_industries},
                     {"seed", s.seed},
                     {"firm_fe_sd", s.firm_fe_sd},
                     {"year_fe_sd", s.year_fe_sd},
                     {"noise_sd", s.noise_sd}};
    j["alpha"] = alpha;
    j["beta_bins"] = beta_bins;
    j["beta_controls"] = beta_controls;
    j["firm_fe"] = firm_fe;
    j["year_fe"] = year_fe;
    j["noise"] = noise;
    return j.dump(2) + "\n";
}

namespace {

Eigen::MatrixXd dummy_matrix(const std::vector<FactorGroup>& groups, Eigen::Index n) {
    Eigen::Index total_levels = 0;
    for (const auto& g : groups) total_levels += g.n_levels;
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, total_levels);
    Eigen::Index offset = 0;
    for (const auto& g : groups) {
        for (Eigen::Index r = 0; r < n; ++r)
            d(r, offset + g.level_of_row[static_cast<std::size_t>(r)]) = 1.0;
        offset += g.n_levels;
    }
    return d;
}

Eigen::MatrixXd pinv(const Eigen::MatrixXd& m) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(m);
    return cod.pseudoInverse();
}

}  // namespace

int dummy_matrix_rank(const std::vector<FactorGroup>& groups) {
    if (groups.empty()) throw ValidationError("dummy_matrix_rank: no groups");
    const auto n = static_cast<Eigen::Index>(groups.front().level_of_row.size());
    const Eigen::MatrixXd d = dummy_matrix(groups, n);
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(d);
    return static_cast<int>(cod.rank());
}

OracleFit oracle_ols_dummies(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                             const std::vector<FactorGroup>& groups,
                             const std::vector<int>* cluster_of_row) {
    const Eigen::Index n = y.size();
    const Eigen::Index k = x.cols();
    if (n > 2000)
        throw ValidationError("oracle_ols_dummies: instance too large to materialize dummies");
    const Eigen::MatrixXd d = dummy_matrix(groups, n);
    if (d.cols() == 0) throw ValidationError("oracle_ols_dummies: no dummy columns");

    Eigen::MatrixXd z(n, k + d.cols());
    z << x, d;

    OracleFit fit;
    {
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(d);
        fit.m_rank_dummies = static_cast<int>(cod.rank());
        if (fit.m_rank_dummies == 0)
            throw ValidationError("oracle_ols_dummies: dummy matrix has rank 0");
    }

    // Route 1: normal equations with an explicit pseudo-inverse. The dummy
    // block is rank deficient but the regressor block of the solution is
    // still unique.
    const Eigen::VectorXd coef_full = pinv(z.transpose() * z) * (z.transpose() * y);
    fit.beta = coef_full.head(k);
    fit.residuals = y - z * coef_full;

    // Route 2: project the dummies out explicitly and solve the projected
    // normal equations.
    const Eigen::MatrixXd dtd_pinv = pinv(d.transpose() * d);
    const Eigen::MatrixXd x_proj = x - d * (dtd_pinv * (d.transpose() * x));
    const Eigen::VectorXd y_proj = y - d * (dtd_pinv * (d.transpose() * y));
    const Eigen::MatrixXd xtx_inv = pinv(x_proj.transpose() * x_proj);
    fit.beta_fwl = xtx_inv * (x_proj.transpose() * y_proj);

    const double rss = fit.residuals.squaredNorm();
    const long long dof = static_cast<long long>(n) - k - fit.m_rank_dummies;
    if (dof < 1) throw ValidationError("oracle_ols_dummies: dof exhausted");
    const double sigma2 = rss / static_cast<double>(dof);
    fit.vcov_classical = sigma2 * xtx_inv;

    if (cluster_of_row) {
        int max_id = 0;
        for (int c : *cluster_of_row) max_id = std::max(max_id, c);
        std::vector<char> seen(static_cast<std::size_t>(max_id + 1), 0);
        int n_clusters = 0;
        for (int c : *cluster_of_row)
            if (!seen[static_cast<std::size_t>(c)]) {
                seen[static_cast<std::size_t>(c)] = 1;
                ++n_clusters;
            }
        Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(max_id + 1, k);
        for (Eigen::Index r = 0; r < n; ++r)
            scores.row((*cluster_of_row)[static_cast<std::size_t>(r)]) +=
                fit.residuals(r) * x_proj.row(r);
        const Eigen::MatrixXd meat = scores.transpose() * scores;
        const double g = static_cast<double>(n_clusters);
        const double c1 = (g / (g - 1.0)) *
                          (static_cast<double>(n - 1) /
                           static_cast<double>(n - k - fit.m_rank_dummies));
        fit.vcov_cluster = c1 * xtx_inv * meat * xtx_inv;
    }
    return fit;
}

Eigen::MatrixXd oracle_hc1(const Eigen::MatrixXd& x, const Eigen::VectorXd& residuals,
                           int m_absorbed) {
    const Eigen::Index n = x.rows();
    const Eigen::Index k = x.cols();
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(k, k);
    for (Eigen::Index r = 0; r < n; ++r) {
        const double e2 = residuals(r) * residuals(r);
        for (Eigen::Index a = 0; a < k; ++a)
            for (Eigen::Index b = 0; b < k; ++b) meat(a, b) += e2 * x(r, a) * x(r, b);
    }
    const Eigen::MatrixXd xtx_inv = (x.transpose() * x).inverse();
    const double scale = static_cast<double>(n) /
                         static_cast<double>(n - k - m_absorbed);
    return scale * xtx_inv * meat * xtx_inv;
}

}  // namespace tempanel
