#include "tempanel/estimator.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "tempanel/errors.hpp"

namespace tempanel {

namespace {

constexpr double kCollinearityTolerance = 1e-10;

double normal_two_sided_p(double t) {
    if (std::isnan(t)) return 1.0;
    return std::erfc(std::abs(t) / std::sqrt(2.0));
}

std::string star_string(double p) {
    if (p < 0.01) return "***";
    if (p < 0.05) return "**";
    if (p < 0.10) return "*";
    return "";
}

}  // namespace

OlsFit ols(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
           const std::vector<std::string>& labels) {
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    if (y.size() != n) throw ValidationError("ols: outcome not aligned with regressors");
    if (static_cast<Eigen::Index>(labels.size()) != p)
        throw ValidationError("ols: label count does not match columns");
    if (n == 0) throw EstimationError("ols: empty sample");

    OlsFit fit;
    // Gram-Schmidt in column order (two passes for orthogonality): a column
    // whose residual against the kept columns is below tolerance * its own
    // norm is exactly collinear; later columns lose, matching how regression
    // packages drop them.
    Eigen::MatrixXd q(n, p);
    Eigen::Index kept_count = 0;
    for (Eigen::Index j = 0; j < p; ++j) {
        Eigen::VectorXd v = x.col(j);
        const double norm0 = v.norm();
        for (int pass = 0; pass < 2; ++pass)
            for (Eigen::Index c = 0; c < kept_count; ++c)
                v -= q.col(c).dot(v) * q.col(c);
        const double pivot = v.norm();
        if (pivot <= kCollinearityTolerance * norm0) {
            fit.dropped_collinear.push_back(labels[static_cast<std::size_t>(j)]);
            continue;
        }
        q.col(kept_count) = v / pivot;
        fit.kept.push_back(static_cast<int>(j));
        ++kept_count;
    }
    if (kept_count == 0) throw EstimationError("ols: rank zero, every column dropped");
    if (n < kept_count)
        throw EstimationError("ols: fewer rows than regressors after collinearity handling");

    Eigen::MatrixXd xk(n, kept_count);
    for (Eigen::Index c = 0; c < kept_count; ++c)
        xk.col(c) = x.col(fit.kept[static_cast<std::size_t>(c)]);

    Eigen::HouseholderQR<Eigen::MatrixXd> qr(xk);
    fit.beta = qr.solve(y);
    fit.residuals = y - xk * fit.beta;
    fit.rss = fit.residuals.squaredNorm();

    // X'X = R'R, so (X'X)^-1 = R^-1 R^-T.
    const Eigen::MatrixXd r =
        qr.matrixQR().topRows(kept_count).triangularView<Eigen::Upper>();
    const Eigen::MatrixXd r_inv =
        r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(kept_count, kept_count));
    fit.xtx_inv = r_inv * r_inv.transpose();
    fit.xtx_inv = ((fit.xtx_inv + fit.xtx_inv.transpose()) / 2.0).eval();
    return fit;
}

Eigen::MatrixXd classical_vcov(const Eigen::MatrixXd& x, const Eigen::VectorXd& residuals,
                               int m_absorbed) {
    const Eigen::Index n = x.rows();
    const Eigen::Index k = x.cols();
    const long long dof = static_cast<long long>(n) - k - m_absorbed;
    if (dof < 1)
        throw EstimationError("classical_vcov: degrees of freedom exhausted (n - k - m = " +
                              std::to_string(dof) + ")");
    const double sigma2 = residuals.squaredNorm() / static_cast<double>(dof);
    const Eigen::MatrixXd xtx = x.transpose() * x;
    Eigen::MatrixXd vcov = sigma2 * xtx.ldlt().solve(Eigen::MatrixXd::Identity(k, k));
    return ((vcov + vcov.transpose()) / 2.0).eval();
}

Eigen::MatrixXd cluster_vcov(const Eigen::MatrixXd& x, const Eigen::VectorXd& residuals,
                             const std::vector<int>& cluster_of_row, int m_absorbed) {
    const Eigen::Index n = x.rows();
    const Eigen::Index k = x.cols();
    if (static_cast<Eigen::Index>(cluster_of_row.size()) != n)
        throw ValidationError("cluster_vcov: cluster ids not aligned with rows");
    int max_id = -1;
    for (int c : cluster_of_row) {
        if (c < 0) throw ValidationError("cluster_vcov: negative cluster id");
        max_id = std::max(max_id, c);
    }
    // Ids may be sparse; G counts the clusters actually present.
    std::vector<char> seen(static_cast<std::size_t>(max_id + 1), 0);
    int n_clusters = 0;
    for (int c : cluster_of_row)
        if (!seen[static_cast<std::size_t>(c)]) {
            seen[static_cast<std::size_t>(c)] = 1;
            ++n_clusters;
        }
    if (n_clusters < 2) throw EstimationError("cluster_vcov: fewer than 2 clusters");
    const long long k_total = k + m_absorbed;
    if (n - k_total < 1)
        throw EstimationError("cluster_vcov: degrees of freedom exhausted (n - k - m < 1)");

    // Cluster scores s_g = X_g' e_g, accumulated in row order. Rows of
    // absent ids stay zero and do not touch the meat.
    Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(max_id + 1, k);
    for (Eigen::Index r = 0; r < n; ++r)
        scores.row(cluster_of_row[static_cast<std::size_t>(r)]) += residuals(r) * x.row(r);
    const Eigen::MatrixXd meat = scores.transpose() * scores;

    const double g = static_cast<double>(n_clusters);
    const double c_small_sample = (g / (g - 1.0)) * (static_cast<double>(n - 1) /
                                                     static_cast<double>(n - k_total));
    const Eigen::MatrixXd xtx = x.transpose() * x;
    const Eigen::MatrixXd xtx_inv = xtx.ldlt().solve(Eigen::MatrixXd::Identity(k, k));
    Eigen::MatrixXd vcov = c_small_sample * xtx_inv * meat * xtx_inv;
    return ((vcov + vcov.transpose()) / 2.0).eval();
}

FitResult summarize_fit(const OlsFit& fit, const Eigen::MatrixXd& vcov,
                        const std::vector<std::string>& labels, VcovKind kind,
                        int n_clusters, int m_absorbed, const RawSample& raw,
                        const Eigen::VectorXd& y_demeaned) {
    FitResult out;
    out.vcov = vcov;
    out.dropped_collinear = fit.dropped_collinear;
    out.vcov_kind = kind;
    out.n_clusters = n_clusters;
    out.n_obs = fit.residuals.size();
    out.k_regressors = static_cast<int>(fit.kept.size());
    out.m_absorbed = m_absorbed;

    const long long dof = out.n_obs - out.k_regressors - m_absorbed;
    out.sigma2 = dof >= 1 ? fit.rss / static_cast<double>(dof) : 0.0;

    for (std::size_t j = 0; j < fit.kept.size(); ++j) {
        Coefficient c;
        c.label = labels[static_cast<std::size_t>(fit.kept[j])];
        c.beta = fit.beta(static_cast<Eigen::Index>(j));
        const double var = vcov(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j));
        c.se = var > 0 ? std::sqrt(var) : 0.0;
        if (c.se > 0) {
            c.t_stat = c.beta / c.se;
        } else {
            c.t_stat = c.beta == 0 ? 0.0 : std::numeric_limits<double>::infinity();
        }
        c.p_value = std::isinf(c.t_stat) ? 0.0 : normal_two_sided_p(c.t_stat);
        c.stars = star_string(c.p_value);
        c.ci_lo = c.beta - 1.96 * c.se;
        c.ci_hi = c.beta + 1.96 * c.se;
        out.coefficients.push_back(std::move(c));
    }

    const auto n = static_cast<double>(out.n_obs);
    const double y_mean = raw.y.mean();
    const double tss_full = (raw.y.array() - y_mean).matrix().squaredNorm();
    const double yd_mean = y_demeaned.mean();
    const double tss_within = (y_demeaned.array() - yd_mean).matrix().squaredNorm();
    out.r2_full = tss_full > 0 ? 1.0 - fit.rss / tss_full : (fit.rss == 0 ? 1.0 : 0.0);
    out.r2_within = tss_within > 0 ? 1.0 - fit.rss / tss_within : (fit.rss == 0 ? 1.0 : 0.0);

    double xbar_beta = 0.0;
    for (std::size_t j = 0; j < fit.kept.size(); ++j)
        xbar_beta += raw.x.col(fit.kept[j]).sum() / n * fit.beta(static_cast<Eigen::Index>(j));
    out.reported_constant = y_mean - xbar_beta;
    out.constant_se_available = false;
    return out;
}

}  // namespace tempanel
