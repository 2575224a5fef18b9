#include "tempanel/features.hpp"

#include <map>

#include "tempanel/errors.hpp"

namespace tempanel {

FeatureMatrix build_features(const PanelDataset& panel, const BinSpec& spec,
                             bool include_controls) {
    FeatureMatrix out;
    out.labels = spec.regressor_codes();
    if (include_controls)
        for (const auto& c : control_labels()) out.labels.push_back(c);

    const auto n = static_cast<Eigen::Index>(panel.rows.size());
    out.values.resize(n, static_cast<Eigen::Index>(out.labels.size()));
    for (Eigen::Index i = 0; i < n; ++i) {
        const PanelRow& row = panel.rows[static_cast<std::size_t>(i)];
        for (int b = 0; b < spec.n_regressors(); ++b)
            out.values(i, b) = row.bins.counts[static_cast<std::size_t>(b)];
        if (include_controls) {
            const int base = spec.n_regressors();
            out.values(i, base + 0) = row.wind;
            out.values(i, base + 1) = row.sea;
            out.values(i, base + 2) = row.visb;
        }
    }
    return out;
}

Eigen::VectorXd outcome_vector(const PanelDataset& panel) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(panel.rows.size()));
    for (Eigen::Index i = 0; i < y.size(); ++i)
        y(i) = panel.rows[static_cast<std::size_t>(i)].cvalue;
    return y;
}

LaggedPanel build_lagged(const PanelDataset& panel, const FeatureMatrix& features, int lag) {
    if (lag < 0) throw ValidationError("build_lagged: lag must be >= 0");
    if (features.values.rows() != static_cast<Eigen::Index>(panel.rows.size()))
        throw ValidationError("build_lagged: features not aligned with panel");

    LaggedPanel out;
    if (lag == 0) {
        out.features = features;
        out.panel = panel;
        return out;
    }

    std::map<std::pair<std::string, int>, Eigen::Index> row_of;
    for (std::size_t i = 0; i < panel.rows.size(); ++i)
        row_of[{panel.rows[i].firm_id, panel.rows[i].year}] = static_cast<Eigen::Index>(i);

    std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;  // (current row, source row)
    for (std::size_t i = 0; i < panel.rows.size(); ++i) {
        auto src = row_of.find({panel.rows[i].firm_id, panel.rows[i].year - lag});
        if (src != row_of.end())
            pairs.emplace_back(static_cast<Eigen::Index>(i), src->second);
    }

    out.features.labels.reserve(features.labels.size());
    const std::string prefix = lag == 1 ? "L" : "L" + std::to_string(lag);
    for (const auto& label : features.labels) out.features.labels.push_back(prefix + label);
    out.features.lag_depth = lag;
    out.features.values.resize(static_cast<Eigen::Index>(pairs.size()), features.values.cols());
    out.panel.join_report = panel.join_report;
    out.panel.rows.reserve(pairs.size());
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        out.features.values.row(static_cast<Eigen::Index>(k)) =
            features.values.row(pairs[k].second);
        out.panel.rows.push_back(panel.rows[static_cast<std::size_t>(pairs[k].first)]);
    }
    if (out.panel.rows.empty())
        out.warning = "lagged sample is empty (lag " + std::to_string(lag) +
                      " reaches past every firm's first year)";
    return out;
}

}  // namespace tempanel
