#ifndef TEMPANEL_FEATURES_HPP
#define TEMPANEL_FEATURES_HPP

#include <string>
#include <vector>

#include <Eigen/Core>

#include "tempanel/panel.hpp"

namespace tempanel {

/// Regressor columns aligned row-for-row with a PanelDataset.
struct FeatureMatrix {
    std::vector<std::string> labels;
    Eigen::MatrixXd values;  // rows x labels.size()
    int lag_depth = 0;
};

inline const std::vector<std::string>& control_labels() {
    static const std::vector<std::string> labels = {"wind", "sea", "visb"};
    return labels;
}

/// Nine bin-count columns (cold-to-hot ASCII codes) plus, optionally, the
/// three annual-mean controls wind/sea/visb.
FeatureMatrix build_features(const PanelDataset& panel, const BinSpec& spec,
                             bool include_controls);

Eigen::VectorXd outcome_vector(const PanelDataset& panel);

struct LaggedPanel {
    FeatureMatrix features;  // lagged values; labels prefixed "L" ("L2", ... beyond lag 1)
    PanelDataset panel;      // rows that had a (firm, year - lag) source
    std::string warning;     // set when the output is empty, e.g. lag >= year span
};

/// Replaces each row's features with those of the same firm at (year - lag).
/// Rows without a source year are dropped; gap years are never interpolated.
/// lag == 0 is the identity. Throws ValidationError on lag < 0.
LaggedPanel build_lagged(const PanelDataset& panel, const FeatureMatrix& features,
                         int lag);

}  // namespace tempanel

#endif
