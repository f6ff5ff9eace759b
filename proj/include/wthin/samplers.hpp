#pragma once

#include "wthin/linalg.hpp"
#include "wthin/rng.hpp"

namespace wthin {

/// Mean and covariance of a multivariate normal.
struct GaussianParams {
    GaussianParams(Eigen::VectorXd mean, PsdMatrix covariance);

    Eigen::VectorXd mean;
    PsdMatrix covariance;
};

/// n x p iid N(0, 1), filled column-major.
DataMatrix sample_std_normal_matrix(RngStream& rng, Eigen::Index n, Eigen::Index p);

/// Haar-uniform draw from {Q in R^{n x r} : Q^T Q = I_r}.
///
/// Takes the thin QR factorisation of an n x r standard normal matrix and
/// flips column j of Q by sign(R_jj). Without the sign fix the result is
/// orthonormal but not Haar distributed.
StiefelMatrix sample_haar_stiefel(RngStream& rng, Eigen::Index n, Eigen::Index r);

/// n rows iid N_p(mean_row, covariance). The square root V sqrt(D) comes from
/// the cached spectrum, so singular covariances work. Only rank(covariance)
/// normals are drawn per row.
DataMatrix sample_matrix_normal(RngStream& rng, const Eigen::VectorXd& mean_row, Eigen::Index n,
                                const PsdMatrix& covariance);

inline DataMatrix sample_matrix_normal(RngStream& rng, const GaussianParams& params, Eigen::Index n) {
    return sample_matrix_normal(rng, params.mean, n, params.covariance);
}

/// W = Z^T Z with Z holding dof iid N_p(0, scale) rows. Singular when
/// dof < p; the returned rank is min(dof, rank(scale)) almost surely.
PsdMatrix sample_wishart(RngStream& rng, Eigen::Index dof, const PsdMatrix& scale);

}  // namespace wthin
