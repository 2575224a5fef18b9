#include "tempanel/study.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <Eigen/Dense>

#include "nlohmann/json.hpp"
#include "tempanel/errors.hpp"
#include "tempanel/format.hpp"

namespace tempanel {

using nlohmann::ordered_json;

BinSpec study_bin_spec(const StudyConfig& cfg) {
    if (cfg.bin_edges.empty()) return BinSpec::standard();
    return BinSpec(cfg.bin_edges, cfg.bin_reference);
}

FactorGroup factor_from_panel(const PanelDataset& panel, const std::string& name) {
    std::vector<std::string> keys;
    keys.reserve(panel.rows.size());
    for (const auto& row : panel.rows) {
        if (name == "firm") {
            keys.push_back(row.firm_id);
        } else if (name == "year") {
            keys.push_back(std::to_string(row.year));
        } else if (name == "city") {
            keys.push_back(row.city_code);
        } else if (name == "industry") {
            keys.push_back(row.industry_code);
        } else if (name == "year_city") {
            keys.push_back(std::to_string(row.year) + '\x1f' + row.city_code);
        } else {
            throw ValidationError("unknown factor '" + name + "'");
        }
    }
    return make_group(name, keys);
}

namespace {

std::map<std::string, std::string> bin_label_map(const BinSpec& spec) {
    std::map<std::string, std::string> m;
    for (int i = 0; i < spec.n_intervals(); ++i)
        if (i != spec.reference_interval()) m[spec.interval_code(i)] = spec.interval_label(i);
    for (const auto& c : control_labels()) m[c] = c;
    m["cvalue"] = "cvalue";
    return m;
}

std::string display_with_map(const std::map<std::string, std::string>& m,
                             const std::string& code) {
    auto it = m.find(code);
    if (it != m.end()) return it->second;
    if (!code.empty() && code[0] == 'L') {
        std::size_t k = 1;
        while (k < code.size() && std::isdigit(static_cast<unsigned char>(code[k]))) ++k;
        auto base = m.find(code.substr(k));
        if (base != m.end()) return code.substr(0, k) + base->second;
    }
    return code;
}

}  // namespace

std::string display_label(const std::string& code) {
    static const std::map<std::string, std::string> m = bin_label_map(BinSpec::standard());
    return display_with_map(m, code);
}

std::string RegressionTable::display(const std::string& code) const {
    if (label_map.empty()) return display_label(code);
    return display_with_map(label_map, code);
}

// ---- estimation plumbing ----

PreparedSample prepare_sample(const PanelDataset& panel, const FeatureMatrix& features,
                              const std::vector<std::string>& fe_factors,
                              const std::string& cluster_factor, const StudyConfig& cfg) {
    if (features.values.rows() != static_cast<Eigen::Index>(panel.rows.size()))
        throw ValidationError("prepare_sample: features not aligned with panel");
    if (panel.rows.empty()) throw EstimationError("prepare_sample: empty sample");

    std::vector<FactorGroup> groups;
    groups.reserve(fe_factors.size());
    for (const auto& name : fe_factors) groups.push_back(factor_from_panel(panel, name));

    SingletonDropResult sdrop = drop_singletons(groups);

    PreparedSample prep;
    prep.labels = features.labels;
    prep.singletons_dropped = sdrop.dropped;
    std::vector<std::size_t> kept_rows;
    for (std::size_t i = 0; i < sdrop.keep.size(); ++i)
        if (sdrop.keep[i]) kept_rows.push_back(i);
    prep.n_rows = static_cast<long long>(kept_rows.size());
    if (kept_rows.empty())
        throw EstimationError("prepare_sample: no rows survive singleton dropping");

    const auto n = static_cast<Eigen::Index>(kept_rows.size());
    const Eigen::Index k = features.values.cols();
    prep.y_raw.resize(n);
    prep.x_raw.resize(n, k);
    for (Eigen::Index i = 0; i < n; ++i) {
        prep.y_raw(i) = panel.rows[kept_rows[static_cast<std::size_t>(i)]].cvalue;
        prep.x_raw.row(i) = features.values.row(
            static_cast<Eigen::Index>(kept_rows[static_cast<std::size_t>(i)]));
    }

    Eigen::MatrixXd stacked(n, k + 1);
    stacked.col(0) = prep.y_raw;
    stacked.rightCols(k) = prep.x_raw;

    FESpec fe;
    fe.groups = std::move(sdrop.groups);
    fe.tolerance = cfg.fe_tolerance;
    fe.max_iters = cfg.fe_max_iters;
    AbsorptionResult absorbed = absorb(stacked, fe, cfg.threads);
    prep.absorb_iterations = absorbed.iterations_used;
    prep.y_dem = absorbed.columns.col(0);
    prep.x_dem = absorbed.columns.rightCols(k);

    const AbsorbedDof dof = count_absorbed_dof(fe.groups);
    prep.m_absorbed = dof.m;
    prep.m_exact = dof.exact;

    {
        FactorGroup cluster_full = factor_from_panel(panel, cluster_factor);
        FactorGroup cluster = restrict_group(cluster_full, sdrop.keep);
        prep.cluster_of_row = std::move(cluster.level_of_row);
        prep.n_clusters = cluster.n_levels;
    }

    prep.ols_fit = ols(prep.y_dem, prep.x_dem, prep.labels);
    return prep;
}

FitResult fit_prepared(const PreparedSample& prep, VcovKind kind) {
    const auto kept = static_cast<Eigen::Index>(prep.ols_fit.kept.size());
    Eigen::MatrixXd xk(prep.x_dem.rows(), kept);
    for (Eigen::Index c = 0; c < kept; ++c)
        xk.col(c) = prep.x_dem.col(prep.ols_fit.kept[static_cast<std::size_t>(c)]);

    Eigen::MatrixXd vcov;
    int n_clusters = 0;
    if (kind == VcovKind::Classical) {
        vcov = classical_vcov(xk, prep.ols_fit.residuals, prep.m_absorbed);
    } else {
        vcov = cluster_vcov(xk, prep.ols_fit.residuals, prep.cluster_of_row, prep.m_absorbed);
        n_clusters = prep.n_clusters;
    }
    return summarize_fit(prep.ols_fit, vcov, prep.labels, kind, n_clusters, prep.m_absorbed,
                         RawSample{prep.y_raw, prep.x_raw}, prep.y_dem);
}

// ---- descriptives ----

namespace {

std::vector<double> panel_variable(const PanelDataset& panel, const std::string& code,
                                   const BinSpec& spec) {
    int slot = -1;
    const auto codes = spec.regressor_codes();
    for (std::size_t i = 0; i < codes.size(); ++i)
        if (codes[i] == code) slot = static_cast<int>(i);
    const bool scalar = code == "cvalue" || code == "wind" || code == "sea" || code == "visb";
    if (!scalar && slot < 0)
        throw ValidationError("descriptives: unknown variable '" + code + "'");

    std::vector<double> out;
    out.reserve(panel.rows.size());
    for (const auto& row : panel.rows) {
        if (code == "cvalue") {
            out.push_back(row.cvalue);
        } else if (code == "wind") {
            out.push_back(row.wind);
        } else if (code == "sea") {
            out.push_back(row.sea);
        } else if (code == "visb") {
            out.push_back(row.visb);
        } else {
            out.push_back(row.bins.counts[static_cast<std::size_t>(slot)]);
        }
    }
    return out;
}

}  // namespace

std::vector<std::string> default_descriptive_variables() {
    return {"cvalue", "wind", "sea", "visb", "25_30", "gt30"};
}

DescriptivesTable run_descriptives(const PanelDataset& panel,
                                   const std::vector<std::string>& variables,
                                   const BinSpec& spec) {
    if (panel.rows.empty()) throw ValidationError("descriptives: empty panel");
    const auto label_map = bin_label_map(spec);
    DescriptivesTable table;
    for (const auto& code : variables) {
        const std::vector<double> values = panel_variable(panel, code, spec);
        DescriptiveRow row;
        row.code = code;
        row.label = display_with_map(label_map, code);
        row.n = static_cast<long long>(values.size());
        // Welford's online moments.
        double mean = 0.0, m2 = 0.0;
        double lo = values.front(), hi = values.front();
        long long count = 0;
        for (double v : values) {
            ++count;
            const double delta = v - mean;
            mean += delta / static_cast<double>(count);
            m2 += delta * (v - mean);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        row.mean = mean;
        row.sd = count > 1 ? std::sqrt(m2 / static_cast<double>(count - 1)) : 0.0;
        row.min = lo;
        row.max = hi;
        table.rows.push_back(std::move(row));
    }
    return table;
}

namespace {

std::string pad_to(const std::string& s, std::size_t width, bool right_align) {
    const std::size_t len = utf8_len(s);
    if (len >= width) return s;
    const std::string pad(width - len, ' ');
    return right_align ? pad + s : s + pad;
}

std::string thousands(long long v) {
    std::string digits = std::to_string(v);
    std::string out;
    int counter = 0;
    for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
        if (counter && counter % 3 == 0 && *it != '-') out.push_back(',');
        out.push_back(*it);
        ++counter;
    }
    std::reverse(out.begin(), out.end());
    return out;
}

std::string render_grid(const std::vector<std::vector<std::string>>& cells) {
    if (cells.empty()) return "";
    const std::size_t ncols = cells.front().size();
    std::vector<std::size_t> width(ncols, 0);
    for (const auto& row : cells)
        for (std::size_t c = 0; c < ncols; ++c)
            width[c] = std::max(width[c], utf8_len(row[c]));
    std::ostringstream os;
    for (const auto& row : cells) {
        for (std::size_t c = 0; c < ncols; ++c) {
            os << pad_to(row[c], width[c], c != 0);
            if (c + 1 < ncols) os << "  ";
        }
        os << '\n';
    }
    return os.str();
}

}  // namespace

std::string DescriptivesTable::to_text() const {
    std::vector<std::vector<std::string>> grid;
    grid.push_back({"VARIABLES", "mean", "sd", "min", "max", "N"});
    for (const auto& r : rows)
        grid.push_back({r.label, fmt6(r.mean), fmt6(r.sd), fmt6(r.min), fmt6(r.max),
                        thousands(r.n)});
    return "Descriptive Statistics\n\n" + render_grid(grid);
}

std::string DescriptivesTable::to_json() const {
    ordered_json j;
    j["kind"] = "descriptives";
    j["rows"] = ordered_json::array();
    for (const auto& r : rows) {
        j["rows"].push_back({{"code", r.code},
                             {"label", r.label},
                             {"mean", r.mean},
                             {"sd", r.sd},
                             {"min", r.min},
                             {"max", r.max},
                             {"n", r.n}});
    }
    return j.dump(2) + "\n";
}

DescriptivesTable DescriptivesTable::from_json(const std::string& text) {
    const auto j = ordered_json::parse(text);
    DescriptivesTable table;
    for (const auto& r : j.at("rows")) {
        DescriptiveRow row;
        row.code = r.at("code").get<std::string>();
        row.label = r.at("label").get<std::string>();
        row.mean = r.at("mean").get<double>();
        row.sd = r.at("sd").get<double>();
        row.min = r.at("min").get<double>();
        row.max = r.at("max").get<double>();
        row.n = r.at("n").get<long long>();
        table.rows.push_back(std::move(row));
    }
    return table;
}

// ---- regression tables ----

std::string RegressionTable::to_text() const {
    std::vector<std::vector<std::string>> grid;
    std::vector<std::string> header = {"VARIABLES"};
    for (const auto& col : columns) header.push_back(col.header);
    grid.push_back(header);

    const auto coeff_of = [](const RegressionColumn& col,
                             const std::string& code) -> const Coefficient* {
        if (!col.ok) return nullptr;
        for (const auto& c : col.fit.coefficients)
            if (c.label == code) return &c;
        return nullptr;
    };
    const auto in_column = [](const RegressionColumn& col, const std::string& code) {
        if (!col.ok) return false;
        for (const auto& c : col.fit.coefficients)
            if (c.label == code) return true;
        for (const auto& d : col.fit.dropped_collinear)
            if (d == code) return true;
        return false;
    };

    for (const auto& code : row_codes) {
        std::vector<std::string> beta_row = {display(code)};
        std::vector<std::string> se_row = {""};
        for (const auto& col : columns) {
            if (const Coefficient* c = coeff_of(col, code)) {
                beta_row.push_back(fmt6(c->beta) + c->stars);
                se_row.push_back("(" + fmt6(c->se) + ")");
            } else if (in_column(col, code)) {
                beta_row.push_back(".");  // dropped as collinear
                se_row.push_back("(.)");
            } else {
                beta_row.push_back("");
                se_row.push_back("");
            }
        }
        grid.push_back(beta_row);
        grid.push_back(se_row);
    }

    std::vector<std::string> constant_row = {"Constant"};
    std::vector<std::string> constant_se = {""};
    for (const auto& col : columns) {
        constant_row.push_back(col.ok ? fmt6(col.fit.reported_constant) : "");
        constant_se.push_back(col.ok ? "(.)" : "");
    }
    grid.push_back(constant_row);
    grid.push_back(constant_se);

    const auto flag_row = [&](const std::string& label, auto getter) {
        std::vector<std::string> row = {label};
        for (const auto& col : columns) row.push_back(getter(col));
        grid.push_back(row);
    };
    flag_row("Controls", [](const RegressionColumn& c) -> std::string {
        return c.controls ? "Y" : "N";
    });
    for (const auto& fe : fe_names)
        flag_row(fe, [](const RegressionColumn& c) -> std::string { return c.ok ? "Y" : ""; });
    bool any_cluster = false;
    for (const auto& col : columns) any_cluster = any_cluster || col.clustered;
    if (any_cluster)
        flag_row("Clustered SE", [](const RegressionColumn& c) -> std::string {
            return c.clustered ? "Y" : "N";
        });
    flag_row("Observations", [](const RegressionColumn& c) -> std::string {
        return c.ok ? thousands(c.fit.n_obs) : "n/a";
    });
    flag_row("R-squared", [](const RegressionColumn& c) -> std::string {
        return c.ok ? fmt6(c.fit.r2_full) : "";
    });
    flag_row("Within R-squared", [](const RegressionColumn& c) -> std::string {
        return c.ok ? fmt6(c.fit.r2_within) : "";
    });

    std::ostringstream os;
    os << title << "\n\n" << render_grid(grid);
    os << "\nStandard errors in parentheses. *** p<0.01, ** p<0.05, * p<0.1\n";
    os << "Constant is ybar - xbar'beta over the estimation sample; "
          "its standard error is not reported.\n";
    for (const auto& col : columns)
        if (!col.ok) os << "Column " << col.header << ": " << col.note << "\n";
    for (const auto& note : footnotes) os << note << "\n";
    return os.str();
}

namespace {

ordered_json fit_json_obj(const FitResult& fit) {
    ordered_json j;
    j["vcov_kind"] = fit.vcov_kind == VcovKind::Classical ? "classical" : "cluster";
    j["n_clusters"] = fit.n_clusters;
    j["n_obs"] = fit.n_obs;
    j["k_regressors"] = fit.k_regressors;
    j["m_absorbed"] = fit.m_absorbed;
    j["r2_full"] = fit.r2_full;
    j["r2_within"] = fit.r2_within;
    j["sigma2"] = fit.sigma2;
    j["constant"] = fit.reported_constant;
    j["constant_se_available"] = fit.constant_se_available;
    j["dropped_collinear"] = fit.dropped_collinear;
    j["coefficients"] = ordered_json::array();
    for (const auto& c : fit.coefficients) {
        j["coefficients"].push_back({{"code", c.label},
                                     {"label", display_label(c.label)},
                                     {"beta", c.beta},
                                     {"se", c.se},
                                     {"t", c.t_stat},
                                     {"p", c.p_value},
                                     {"stars", c.stars},
                                     {"ci_lo", c.ci_lo},
                                     {"ci_hi", c.ci_hi}});
    }
    auto vcov = ordered_json::array();
    for (Eigen::Index r = 0; r < fit.vcov.rows(); ++r) {
        auto row = ordered_json::array();
        for (Eigen::Index c = 0; c < fit.vcov.cols(); ++c) row.push_back(fit.vcov(r, c));
        vcov.push_back(row);
    }
    j["vcov"] = vcov;
    return j;
}

}  // namespace

std::string fit_to_json(const FitResult& fit) { return fit_json_obj(fit).dump(2) + "\n"; }

FitResult fit_from_json_coefficients(const std::string& text) {
    const auto j = ordered_json::parse(text);
    FitResult fit;
    for (const auto& c : j.at("coefficients")) {
        Coefficient coef;
        coef.label = c.at("code").get<std::string>();
        coef.beta = c.at("beta").get<double>();
        coef.se = c.at("se").get<double>();
        coef.t_stat = c.value("t", 0.0);
        coef.p_value = c.value("p", 1.0);
        coef.stars = c.value("stars", std::string());
        coef.ci_lo = c.at("ci_lo").get<double>();
        coef.ci_hi = c.at("ci_hi").get<double>();
        fit.coefficients.push_back(std::move(coef));
    }
    return fit;
}

std::string RegressionTable::to_json() const {
    ordered_json j;
    switch (kind) {
        case TableKind::Baseline: j["kind"] = "baseline"; break;
        case TableKind::Robustness: j["kind"] = "robustness"; break;
        case TableKind::OwnershipHet: j["kind"] = "ownership_heterogeneity"; break;
        case TableKind::IndustryHet: j["kind"] = "industry_heterogeneity"; break;
    }
    j["title"] = title;
    j["row_codes"] = row_codes;
    j["fe"] = fe_names;
    j["columns"] = ordered_json::array();
    for (const auto& col : columns) {
        ordered_json jc;
        jc["header"] = col.header;
        jc["ok"] = col.ok;
        if (!col.ok) {
            jc["note"] = col.note;
        } else {
            jc["controls"] = col.controls;
            jc["clustered"] = col.clustered;
            jc["fit"] = fit_json_obj(col.fit);
        }
        j["columns"].push_back(jc);
    }
    j["footnotes"] = footnotes;
    return j.dump(2) + "\n";
}

// ---- study operations ----

namespace {

RegressionColumn make_column(const std::string& header, const PreparedSample& prep,
                             VcovKind kind, bool controls) {
    RegressionColumn col;
    col.header = header;
    col.controls = controls;
    col.clustered = kind == VcovKind::ClusterRobust;
    col.fit = fit_prepared(prep, kind);
    return col;
}

}  // namespace

RegressionTable run_baseline(const PanelDataset& panel, const StudyConfig& cfg) {
    const BinSpec spec = study_bin_spec(cfg);
    const FeatureMatrix bins_only = build_features(panel, spec, false);
    const FeatureMatrix with_controls = build_features(panel, spec, true);
    const std::vector<std::string> fe = {"firm", "year"};

    RegressionTable table;
    table.kind = TableKind::Baseline;
    table.title = "Benchmark Regression Results";
    table.row_codes = with_controls.labels;
    table.fe_names = {"Year FE", "Firm FE"};
    table.label_map = bin_label_map(spec);

    const auto annotated = [&](const char* which, auto&& fn) {
        try {
            return fn();
        } catch (const EstimationError& e) {
            throw EstimationError(std::string("baseline spec ") + which + ": " + e.what());
        }
    };
    const PreparedSample prep_nc = annotated(
        "(1)/(3)", [&] { return prepare_sample(panel, bins_only, fe, cfg.cluster, cfg); });
    const PreparedSample prep_c = annotated(
        "(2)/(4)", [&] { return prepare_sample(panel, with_controls, fe, cfg.cluster, cfg); });

    table.columns.push_back(annotated("(1)", [&] {
        return make_column("cvalue (1)", prep_nc, VcovKind::Classical, false);
    }));
    table.columns.push_back(annotated("(2)", [&] {
        return make_column("cvalue (2)", prep_c, VcovKind::Classical, true);
    }));
    table.columns.push_back(annotated("(3)", [&] {
        return make_column("cvalue (3)", prep_nc, VcovKind::ClusterRobust, false);
    }));
    table.columns.push_back(annotated("(4)", [&] {
        return make_column("cvalue (4)", prep_c, VcovKind::ClusterRobust, true);
    }));
    table.footnotes.push_back("Columns (3)-(4) repeat (1)-(2) with " + cfg.cluster +
                              "-level clustered standard errors.");
    return table;
}

RegressionTable run_robustness(const PanelDataset& panel, const StudyConfig& cfg) {
    if (cfg.lag < 1) throw ValidationError("robustness: lag depth must be >= 1");
    const BinSpec spec = study_bin_spec(cfg);
    const FeatureMatrix bins_only = build_features(panel, spec, false);
    const FeatureMatrix with_controls = build_features(panel, spec, true);

    LaggedPanel lag_nc = build_lagged(panel, bins_only, cfg.lag);
    LaggedPanel lag_c = build_lagged(panel, with_controls, cfg.lag);
    if (lag_c.panel.rows.empty())
        throw EstimationError("robustness: " + (lag_c.warning.empty()
                                                    ? std::string("empty post-trim sample")
                                                    : lag_c.warning));

    const std::vector<std::string> fe = {"firm", "year"};
    RegressionTable table;
    table.kind = TableKind::Robustness;
    table.title = "Robustness Test (lag " + std::to_string(cfg.lag) + ")";
    table.row_codes = lag_c.features.labels;
    table.fe_names = {"Year FE", "Firm FE"};
    table.label_map = bin_label_map(spec);

    const auto annotated = [&](const char* which, auto&& fn) {
        try {
            return fn();
        } catch (const EstimationError& e) {
            throw EstimationError(std::string("robustness spec ") + which + ": " + e.what());
        }
    };
    const PreparedSample prep_nc = annotated("(1)/(3)", [&] {
        return prepare_sample(lag_nc.panel, lag_nc.features, fe, cfg.cluster, cfg);
    });
    const PreparedSample prep_c = annotated("(2)/(4)", [&] {
        return prepare_sample(lag_c.panel, lag_c.features, fe, cfg.cluster, cfg);
    });

    table.columns.push_back(annotated("(1)", [&] {
        return make_column("cvalue (1)", prep_nc, VcovKind::Classical, false);
    }));
    table.columns.push_back(annotated("(2)", [&] {
        return make_column("cvalue (2)", prep_c, VcovKind::Classical, true);
    }));
    table.columns.push_back(annotated("(3)", [&] {
        return make_column("cvalue (3)", prep_nc, VcovKind::ClusterRobust, false);
    }));
    table.columns.push_back(annotated("(4)", [&] {
        return make_column("cvalue (4)", prep_c, VcovKind::ClusterRobust, true);
    }));
    table.footnotes.push_back("All regressors are lagged by " + std::to_string(cfg.lag) +
                              " year(s); the L prefix marks every row, including the "
                              "hottest bin.");
    return table;
}

RegressionTable run_ownership_het(const PanelDataset& panel, const StudyConfig& cfg) {
    const BinSpec spec = study_bin_spec(cfg);
    RegressionTable table;
    table.kind = TableKind::OwnershipHet;
    table.title = "Ownership Heterogeneity Analysis";
    table.fe_names = {"Year FE", "Firm FE"};
    table.label_map = bin_label_map(spec);

    const Ownership kinds[] = {Ownership::Private, Ownership::StateOwned,
                               Ownership::Collective, Ownership::Mixed, Ownership::Foreign};
    for (Ownership kind : kinds) {
        PanelDataset sub;
        for (const auto& row : panel.rows)
            if (row.ownership == kind) sub.rows.push_back(row);

        RegressionColumn col;
        col.header = ownership_label(kind);
        col.controls = true;
        try {
            const FeatureMatrix features = build_features(sub, spec, true);
            if (table.row_codes.empty()) table.row_codes = features.labels;
            const PreparedSample prep =
                prepare_sample(sub, features, {"firm", "year"}, cfg.cluster, cfg);
            col.fit = fit_prepared(prep, VcovKind::Classical);
        } catch (const EstimationError& e) {
            col.ok = false;
            col.note = std::string("insufficient sample (") + e.what() + ")";
        }
        table.columns.push_back(std::move(col));
    }
    if (table.row_codes.empty())
        table.row_codes = build_features(panel, spec, true).labels;
    return table;
}

IndustryHetResult run_industry_het(const PanelDataset& panel, const StudyConfig& cfg) {
    if (cfg.industry_min_obs < 1)
        throw ValidationError("industry heterogeneity: industry_min_obs must be >= 1");
    const BinSpec spec = study_bin_spec(cfg);

    std::map<std::string, std::size_t> obs_count;
    for (const auto& row : panel.rows) ++obs_count[row.industry_code];

    // Survivors ordered by descending observation count, industry code
    // descending as the tie break.
    std::vector<std::pair<std::string, std::size_t>> survivors;
    for (const auto& [code, count] : obs_count)
        if (count >= static_cast<std::size_t>(cfg.industry_min_obs))
            survivors.emplace_back(code, count);
    std::sort(survivors.begin(), survivors.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first > b.first;
    });
    if (survivors.empty())
        throw EstimationError(
            "industry heterogeneity: no industry reaches the minimum of " +
            std::to_string(cfg.industry_min_obs) + " observations");

    const std::string hottest = spec.interval_code(spec.n_intervals() - 1);

    IndustryHetResult out;
    out.table.kind = TableKind::IndustryHet;
    out.table.title = "Industry Heterogeneity Analysis (screening model)";
    out.table.fe_names = {"Year FE", "City FE"};
    out.table.label_map = bin_label_map(spec);
    out.plot.title = "Industry heterogeneity: hottest-bin effect";
    out.plot.zero_line = true;

    for (const auto& [industry, count] : survivors) {
        PanelDataset sub;
        for (const auto& row : panel.rows)
            if (row.industry_code == industry) sub.rows.push_back(row);

        RegressionColumn col;
        col.header = industry;
        col.controls = true;
        try {
            const FeatureMatrix all = build_features(sub, spec, true);
            FeatureMatrix features;
            if (cfg.industry_all_bins) {
                features = all;
            } else {
                // Hottest-bin count plus the three controls.
                std::vector<Eigen::Index> pick;
                for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(all.labels.size()); ++c)
                    if (all.labels[static_cast<std::size_t>(c)] == hottest ||
                        std::find(control_labels().begin(), control_labels().end(),
                                  all.labels[static_cast<std::size_t>(c)]) !=
                            control_labels().end())
                        pick.push_back(c);
                features.values.resize(all.values.rows(),
                                       static_cast<Eigen::Index>(pick.size()));
                for (std::size_t c = 0; c < pick.size(); ++c) {
                    features.labels.push_back(all.labels[static_cast<std::size_t>(pick[c])]);
                    features.values.col(static_cast<Eigen::Index>(c)) =
                        all.values.col(pick[c]);
                }
            }
            if (out.table.row_codes.empty()) out.table.row_codes = features.labels;
            const PreparedSample prep =
                prepare_sample(sub, features, {"year", "city"}, cfg.cluster, cfg);
            col.fit = fit_prepared(prep, VcovKind::Classical);
            for (const auto& c : col.fit.coefficients) {
                if (c.label == hottest) {
                    out.plot.points.push_back({industry, industry, c.beta, c.ci_lo, c.ci_hi});
                    break;
                }
            }
        } catch (const EstimationError& e) {
            col.ok = false;
            col.note = std::string("insufficient sample (") + e.what() + ")";
        }
        out.table.columns.push_back(std::move(col));
    }
    if (out.table.row_codes.empty()) out.table.row_codes = {hottest};
    out.table.footnotes.push_back(
        "Each column regresses cvalue on the hottest-bin day count" +
        std::string(cfg.industry_all_bins ? " and all other bins" : "") +
        " plus controls within one industry; industries with fewer than " +
        std::to_string(cfg.industry_min_obs) + " observations are excluded.");
    return out;
}

// ---- coefficient plots ----

std::vector<std::string> coefplot_bin_order() {
    const BinSpec& spec = BinSpec::standard();
    std::vector<std::string> order;
    for (int i = spec.n_intervals() - 1; i >= 0; --i)
        if (i != spec.reference_interval()) order.push_back(spec.interval_code(i));
    return order;
}

CoefPlotArtifact emit_coefplot(const FitResult& fit, const std::vector<std::string>& order,
                               const std::string& title) {
    CoefPlotArtifact plot;
    plot.title = title;
    for (const auto& code : order) {
        const Coefficient* found = nullptr;
        for (const auto& c : fit.coefficients)
            if (c.label == code) found = &c;
        if (!found)
            throw ValidationError("coefplot: label '" + code + "' not in the fit");
        plot.points.push_back({code, display_label(code), found->beta, found->ci_lo,
                               found->ci_hi});
    }
    return plot;
}

std::string CoefPlotArtifact::to_csv() const {
    std::ostringstream os;
    os << "label,beta,ci_lo,ci_hi\n";
    for (const auto& p : points)
        os << p.code << ',' << shortest(p.beta) << ',' << shortest(p.lo) << ','
           << shortest(p.hi) << '\n';
    return os.str();
}

namespace {

std::string coord(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

double nice_step(double raw) {
    if (raw <= 0) return 1.0;
    const double pow10 = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (m * pow10 >= raw) return m * pow10;
    return 10.0 * pow10;
}

}  // namespace

std::string CoefPlotArtifact::to_svg() const {
    const double width = 860, height = 520;
    const double left = 95, right = 30, top = 45, bottom = 120;
    const double plot_w = width - left - right, plot_h = height - top - bottom;

    double lo = zero_line ? 0.0 : (points.empty() ? -1.0 : points.front().lo);
    double hi = zero_line ? 0.0 : (points.empty() ? 1.0 : points.front().hi);
    for (const auto& p : points) {
        lo = std::min(lo, p.lo);
        hi = std::max(hi, p.hi);
    }
    if (hi - lo <= 0) {
        lo -= 1.0;
        hi += 1.0;
    }
    const double pad = 0.06 * (hi - lo);
    lo -= pad;
    hi += pad;

    const auto y_of = [&](double v) { return top + plot_h * (hi - v) / (hi - lo); };
    const auto x_of = [&](std::size_t i) {
        return left + plot_w * (static_cast<double>(i) + 0.5) /
                          static_cast<double>(std::max<std::size_t>(points.size(), 1));
    };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    svg << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
        << "\" fill=\"white\"/>\n";
    if (!title.empty())
        svg << "<text x=\"" << coord(width / 2) << "\" y=\"24\" font-family=\"sans-serif\" "
               "font-size=\"15\" text-anchor=\"middle\">"
            << xml_escape(title) << "</text>\n";

    // y grid + ticks
    const double step = nice_step((hi - lo) / 6.0);
    const double first_tick = std::ceil(lo / step) * step;
    for (int i = 0;; ++i) {
        const double v = first_tick + i * step;
        if (v > hi + step * 1e-9) break;
        const double y = y_of(v);
        svg << "<line x1=\"" << coord(left) << "\" y1=\"" << coord(y) << "\" x2=\""
            << coord(left + plot_w) << "\" y2=\"" << coord(y)
            << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        svg << "<text x=\"" << coord(left - 8) << "\" y=\"" << coord(y + 4)
            << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">"
            << fmt6(std::abs(v) < step * 1e-9 ? 0.0 : v) << "</text>\n";
    }

    // frame
    svg << "<rect x=\"" << coord(left) << "\" y=\"" << coord(top) << "\" width=\""
        << coord(plot_w) << "\" height=\"" << coord(plot_h)
        << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";

    if (zero_line && 0.0 >= lo && 0.0 <= hi) {
        const double y = y_of(0.0);
        svg << "<line x1=\"" << coord(left) << "\" y1=\"" << coord(y) << "\" x2=\""
            << coord(left + plot_w) << "\" y2=\"" << coord(y)
            << "\" stroke=\"black\" stroke-width=\"1\" stroke-dasharray=\"5,4\"/>\n";
    }

    const bool rotate = points.size() > 6;
    const double cap = 6.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& p = points[i];
        const double x = x_of(i);
        const double y_lo = y_of(p.lo), y_hi = y_of(p.hi), y_b = y_of(p.beta);
        // CI bar with caps (rcap style).
        svg << "<line x1=\"" << coord(x) << "\" y1=\"" << coord(y_lo) << "\" x2=\""
            << coord(x) << "\" y2=\"" << coord(y_hi)
            << "\" stroke=\"#555555\" stroke-width=\"1.5\"/>\n";
        for (double y_end : {y_lo, y_hi})
            svg << "<line x1=\"" << coord(x - cap) << "\" y1=\"" << coord(y_end)
                << "\" x2=\"" << coord(x + cap) << "\" y2=\"" << coord(y_end)
                << "\" stroke=\"#555555\" stroke-width=\"1.5\"/>\n";
        svg << "<circle cx=\"" << coord(x) << "\" cy=\"" << coord(y_b)
            << "\" r=\"3.5\" fill=\"black\"/>\n";
        if (rotate) {
            svg << "<text x=\"" << coord(x) << "\" y=\"" << coord(top + plot_h + 14)
                << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\" "
                   "transform=\"rotate(-40 "
                << coord(x) << " " << coord(top + plot_h + 14) << ")\">"
                << xml_escape(p.label) << "</text>\n";
        } else {
            svg << "<text x=\"" << coord(x) << "\" y=\"" << coord(top + plot_h + 18)
                << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">"
                << xml_escape(p.label) << "</text>\n";
        }
    }
    svg << "</svg>\n";
    return svg.str();
}

// ---- panel export, load, pipeline ----

std::string panel_to_csv(const PanelDataset& panel, const BinSpec& spec) {
    std::ostringstream os;
    os << "firm_id,year,city_code,ownership,industry_code,cvalue,wind,sea,visb";
    for (const auto& code : spec.regressor_codes()) os << ',' << code;
    os << ",ref_days,total_days\n";
    for (const auto& row : panel.rows) {
        os << row.firm_id << ',' << row.year << ',' << row.city_code << ','
           << ownership_code(row.ownership) << ',' << row.industry_code << ','
           << shortest(row.cvalue) << ',' << shortest(row.wind) << ',' << shortest(row.sea)
           << ',' << shortest(row.visb);
        for (int b = 0; b < spec.n_regressors(); ++b)
            os << ',' << row.bins.counts[static_cast<std::size_t>(b)];
        os << ',' << row.bins.reference_days << ',' << row.bins.total_days << '\n';
    }
    return os.str();
}

PanelDataset load_panel(const StudyConfig& cfg, std::string* log) {
    std::ifstream weather_file(cfg.weather_path, std::ios::binary);
    if (!weather_file) throw ValidationError("cannot open weather file " + cfg.weather_path);
    WeatherSchema schema;
    schema.units = cfg.units;
    const WeatherParseResult weather = parse_weather_csv(weather_file, schema);

    std::ifstream firm_file(cfg.firms_path, std::ios::binary);
    if (!firm_file) throw ValidationError("cannot open firm file " + cfg.firms_path);
    const FirmParseResult firms = parse_firm_csv(firm_file);

    if (log) {
        std::ostringstream os;
        os << "weather: " << weather.records.size() << " records, "
           << weather.line_errors.size() << " bad lines, " << weather.missing_values
           << " missing values\n";
        for (const auto& e : weather.line_errors)
            os << "  weather line " << e.line_no << ": " << e.message << '\n';
        os << "firms: " << firms.records.size() << " records, " << firms.line_errors.size()
           << " bad lines\n";
        for (const auto& e : firms.line_errors)
            os << "  firm line " << e.line_no << ": " << e.message << '\n';
        *log = os.str();
    }
    return join_firm_weather(firms.records, weather.records, cfg.coverage,
                             study_bin_spec(cfg));
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << bytes;
}

}  // namespace

void run_pipeline(const PanelDataset& panel, const StudyConfig& cfg) {
    const std::filesystem::path dir(cfg.out_dir);
    std::filesystem::create_directories(dir);
    const BinSpec spec = study_bin_spec(cfg);

    write_file(dir / "join_report.txt", panel.join_report.to_text());
    write_file(dir / "join_report.json", panel.join_report.to_json());
    write_file(dir / "panel.csv", panel_to_csv(panel, spec));

    const DescriptivesTable desc =
        run_descriptives(panel, default_descriptive_variables(), spec);
    write_file(dir / "descriptives.txt", desc.to_text());
    write_file(dir / "descriptives.json", desc.to_json());

    const RegressionTable baseline = run_baseline(panel, cfg);
    write_file(dir / "baseline.txt", baseline.to_text());
    write_file(dir / "baseline.json", baseline.to_json());
    const CoefPlotArtifact fig1 = emit_coefplot(
        baseline.columns[1].fit, coefplot_bin_order(), "Benchmark regression coefficients");
    write_file(dir / "baseline_coefplot.svg", fig1.to_svg());
    write_file(dir / "baseline_coefplot.csv", fig1.to_csv());

    const RegressionTable robustness = run_robustness(panel, cfg);
    write_file(dir / "robustness.txt", robustness.to_text());
    write_file(dir / "robustness.json", robustness.to_json());

    const RegressionTable ownership = run_ownership_het(panel, cfg);
    write_file(dir / "het_ownership.txt", ownership.to_text());
    write_file(dir / "het_ownership.json", ownership.to_json());

    const IndustryHetResult industry = run_industry_het(panel, cfg);
    write_file(dir / "het_industry.txt", industry.table.to_text());
    write_file(dir / "het_industry.json", industry.table.to_json());
    write_file(dir / "het_industry_coefplot.svg", industry.plot.to_svg());
    write_file(dir / "het_industry_coefplot.csv", industry.plot.to_csv());
}

}  // namespace tempanel
