#ifndef TEMPANEL_ESTIMATOR_HPP
#define TEMPANEL_ESTIMATOR_HPP

#include <string>
#include <vector>

#include <Eigen/Core>

namespace tempanel {

enum class VcovKind { Classical, ClusterRobust };

struct OlsFit {
    Eigen::VectorXd beta;             // kept regressors only
    std::vector<int> kept;            // kept column indices into the input
    std::vector<std::string> dropped_collinear;
    Eigen::VectorXd residuals;
    Eigen::MatrixXd xtx_inv;          // (Xk'Xk)^-1 of the kept columns
    double rss = 0.0;
};

/// Least squares through a rank-revealing orthogonal decomposition that
/// respects column order: a column whose residual after projecting on the
/// kept columns falls below 1e-10 of its own norm is exactly collinear and
/// dropped with its label recorded (later columns lose, like Stata).
/// Throws EstimationError on zero rows, all columns dropped, or
/// rows < kept columns.
OlsFit ols(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
           const std::vector<std::string>& labels);

/// sigma2 * (X'X)^-1 with sigma2 = RSS / (n - k - m). m counts absorbed
/// fixed-effect dof. Throws EstimationError when n - k - m < 1.
Eigen::MatrixXd classical_vcov(const Eigen::MatrixXd& x, const Eigen::VectorXd& residuals,
                               int m_absorbed);

/// CR1 sandwich: c * (X'X)^-1 [sum_g (X_g'e_g)(X_g'e_g)'] (X'X)^-1 with
/// c = (G/(G-1)) * ((N-1)/(N-K)), K = k + m. With every row its own cluster
/// this is exactly HC1. Throws EstimationError when G < 2 or N <= K.
Eigen::MatrixXd cluster_vcov(const Eigen::MatrixXd& x, const Eigen::VectorXd& residuals,
                             const std::vector<int>& cluster_of_row, int m_absorbed);

struct Coefficient {
    std::string label;
    double beta = 0.0;
    double se = 0.0;
    double t_stat = 0.0;
    double p_value = 0.0;
    std::string stars;   // "***" p<0.01, "**" p<0.05, "*" p<0.1
    double ci_lo = 0.0;  // beta - 1.96 se
    double ci_hi = 0.0;
};

struct FitResult {
    std::vector<Coefficient> coefficients;
    Eigen::MatrixXd vcov;
    std::vector<std::string> dropped_collinear;
    VcovKind vcov_kind = VcovKind::Classical;
    int n_clusters = 0;  // when cluster-robust
    long long n_obs = 0;
    int k_regressors = 0;
    int m_absorbed = 0;
    double r2_full = 0.0;    // 1 - RSS/TSS of the raw outcome
    double r2_within = 0.0;  // 1 - RSS/TSS of the demeaned outcome
    double sigma2 = 0.0;     // RSS / (n - k - m)
    double reported_constant = 0.0;  // ybar - xbar' beta, point estimate only
    bool constant_se_available = false;
};

/// Raw (pre-absorption) outcome and regressor columns of the estimation
/// sample; needed for the constant and the two R-squared flavors.
struct RawSample {
    Eigen::VectorXd y;
    Eigen::MatrixXd x;  // same column set as passed to ols (pre-drop)
};

/// Inference from a fit: normal-approximation two-sided p-values, 1.96
/// confidence bands, star thresholds 0.01/0.05/0.10.
FitResult summarize_fit(const OlsFit& fit, const Eigen::MatrixXd& vcov,
                        const std::vector<std::string>& labels, VcovKind kind,
                        int n_clusters, int m_absorbed, const RawSample& raw,
                        const Eigen::VectorXd& y_demeaned);

}  // namespace tempanel

#endif
