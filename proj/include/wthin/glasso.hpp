#pragma once

#include "wthin/linalg.hpp"
#include "wthin/rng.hpp"

#include <optional>
#include <vector>

namespace wthin {

struct GlassoOptions {
    double tol = 1e-6;
    int max_iter = 200;
    /// Penalise the diagonal of the precision matrix as well (lambda * ||Omega||_1
    /// over all entries). Turn off for the diagonal-excluded variant.
    bool penalize_diagonal = true;
    /// Warm-start each fold's lambda path from the previous (larger) lambda.
    bool warm_start = true;
};

struct GlassoResult {
    Eigen::MatrixXd precision;   ///< Omega
    Eigen::MatrixXd covariance;  ///< Omega^{-1}, the working covariance
    double lambda = 0.0;
    int iterations = 0;
    bool converged = false;
    double objective = 0.0;
    /// Penalised objective after each outer sweep (starting point first).
    std::vector<double> objective_trace;
};

/// Minimises -logdet(Omega) + tr(Omega S) + lambda ||Omega||_1 by block
/// coordinate descent over columns of the precision matrix. Each column
/// update solves a lasso with cyclic coordinate descent and is an exact
/// block minimisation, so the objective never increases between sweeps and
/// every iterate stays positive definite.
///
/// Converges when the largest entry change of the working covariance over a
/// sweep drops below tol * mean|S_offdiag| and the KKT residual is <= tol. A fit that runs out of sweeps is
/// returned with converged = false. lambda = 0 is solved by direct inversion
/// and throws SingularInput when S is not positive definite.
GlassoResult glasso_fit(const PsdMatrix& s, double lambda, const GlassoOptions& opts = {},
                        const GlassoResult* warm = nullptr);

/// Penalised objective for a given precision matrix.
double glasso_objective(const Eigen::MatrixXd& omega, const Eigen::MatrixXd& s, double lambda,
                        bool penalize_diagonal = true);

/// Largest entrywise violation of the subgradient optimality conditions
/// S - Omega^{-1} + lambda G = 0 with G_ij = sign(Omega_ij) on the support and
/// |G_ij| <= 1 off it.
double kkt_residual(const Eigen::MatrixXd& omega, const Eigen::MatrixXd& s, double lambda,
                    bool penalize_diagonal = true);

/// -logdet(Omega) + tr(Omega S). Throws NotPositiveDefinite.
double neg_log_lik(const Eigen::MatrixXd& omega, const Eigen::MatrixXd& s);

enum class CvMode { SampleSplit, Thinned };

struct CvCurve {
    CvMode mode;
    std::vector<double> lambdas;
    std::vector<double> losses;
    std::size_t selected = 0;
    int fits = 0;
    int nonconverged = 0;

    double selected_lambda() const { return lambdas[selected]; }
};

/// 0 followed by 41 log-spaced points on [1e-3, 0.2].
std::vector<double> default_lambda_grid();

/// Index of the smallest loss; exact ties go to the larger lambda.
std::size_t select_minimizer(const std::vector<double>& losses);

/// Sample-splitting cross-validation loss on the raw observations. Train and
/// test covariances are centred by their own means with divisor count - 1.
/// Folds are contiguous unless `shuffle` is supplied.
CvCurve cv_sample_split(const DataMatrix& z, int k, const std::vector<double>& lambdas,
                        const GlassoOptions& opts = {}, RngStream* shuffle = nullptr);

/// Cross-validation loss from the sample covariance alone: (n-1) S_n is split
/// into n-1 Gaussian rows, the rows into K contiguous folds, and train/test
/// second-moment matrices are formed without centring (divisors n-1-|C_k|
/// and |C_k|).
CvCurve cv_thinned(const PsdMatrix& s_n, Eigen::Index n, int k, const std::vector<double>& lambdas,
                   RngStream& rng, const GlassoOptions& opts = {});

/// One train/test pair of second-moment matrices per fold, as used by
/// cv_thinned. Exposed for independence checks.
struct ThinnedFold {
    Eigen::MatrixXd train;
    Eigen::MatrixXd test;
    Eigen::Index test_count;
};
std::vector<ThinnedFold> thinned_cv_folds(const PsdMatrix& s_n, Eigen::Index n, int k, RngStream& rng);

}  // namespace wthin
