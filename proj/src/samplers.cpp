#include "wthin/samplers.hpp"

#include "wthin/errors.hpp"

#include <string>

namespace wthin {

GaussianParams::GaussianParams(Eigen::VectorXd mean_, PsdMatrix covariance_)
    : mean(std::move(mean_)), covariance(std::move(covariance_)) {
    if (mean.size() != covariance.dim()) {
        throw Error(ErrorCode::DimensionMismatch, "mean length " + std::to_string(mean.size()) +
                                                      " != covariance dim " +
                                                      std::to_string(covariance.dim()));
    }
}

DataMatrix sample_std_normal_matrix(RngStream& rng, Eigen::Index n, Eigen::Index p) {
    if (n < 1 || p < 1) throw Error(ErrorCode::InvalidSize, "normal matrix needs n, p >= 1");
    DataMatrix out(n, p);
    for (Eigen::Index j = 0; j < p; ++j)
        for (Eigen::Index i = 0; i < n; ++i) out(i, j) = rng.normal();
    return out;
}

StiefelMatrix sample_haar_stiefel(RngStream& rng, Eigen::Index n, Eigen::Index r) {
    if (r < 1 || r > n) {
        throw Error(ErrorCode::InvalidSize, "Haar Stiefel draw needs 1 <= r <= n, got n=" +
                                                std::to_string(n) + " r=" + std::to_string(r));
    }
    const DataMatrix g = sample_std_normal_matrix(rng, n, r);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, r);
    const Eigen::MatrixXd& packed = qr.matrixQR();
    for (Eigen::Index j = 0; j < r; ++j) {
        if (packed(j, j) < 0.0) q.col(j) = -q.col(j);
    }
    return StiefelMatrix(std::move(q));
}

DataMatrix sample_matrix_normal(RngStream& rng, const Eigen::VectorXd& mean_row, Eigen::Index n,
                                const PsdMatrix& covariance) {
    if (n < 1) throw Error(ErrorCode::InvalidSize, "matrix normal needs n >= 1");
    if (mean_row.size() != covariance.dim()) {
        throw Error(ErrorCode::DimensionMismatch, "mean length does not match covariance");
    }
    const auto& eig = covariance.spectrum();
    DataMatrix out = mean_row.transpose().replicate(n, 1);
    if (eig.rank() == 0) return out;
    const DataMatrix g = sample_std_normal_matrix(rng, n, eig.rank());
    out.noalias() += g * eig.root();
    return out;
}

PsdMatrix sample_wishart(RngStream& rng, Eigen::Index dof, const PsdMatrix& scale) {
    if (dof < 1) throw Error(ErrorCode::InvalidDof, "Wishart degrees of freedom must be >= 1");
    const DataMatrix z = sample_matrix_normal(rng, Eigen::VectorXd::Zero(scale.dim()), dof, scale);
    return PsdMatrix(z.transpose() * z, scale.rank_tol());
}

}  // namespace wthin
