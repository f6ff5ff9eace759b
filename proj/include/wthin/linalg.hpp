#pragma once

#include <Eigen/Dense>

#include <span>

namespace wthin {

/// Rows are observations, columns are variables.
using DataMatrix = Eigen::MatrixXd;

inline constexpr double kDefaultRankTol = 1e-10;

/// Square matrix whose entries are exactly symmetric. The constructor averages
/// the input with its transpose, so (i, j) and (j, i) are bitwise equal.
class SymmetricMatrix {
public:
    explicit SymmetricMatrix(const Eigen::MatrixXd& m);

    Eigen::Index dim() const { return m_.rows(); }
    const Eigen::MatrixXd& matrix() const { return m_; }

private:
    Eigen::MatrixXd m_;
};

/// Truncated spectral factorisation W = V diag(eigenvalues) V^T keeping only
/// the numerically positive part of the spectrum.
struct EigenDecomposition {
    Eigen::VectorXd eigenvalues;  ///< nonincreasing, strictly positive, length r
    Eigen::MatrixXd vectors;      ///< p x r, orthonormal columns

    Eigen::Index rank() const { return eigenvalues.size(); }
    Eigen::Index dim() const { return vectors.rows(); }

    /// V diag(eigenvalues) V^T
    Eigen::MatrixXd reconstruct() const;
    /// D V^T with D = diag(sqrt(eigenvalues)); an r x p square root of the input.
    Eigen::MatrixXd root() const;
};

/// Eigendecomposition restricted to eigenvalues above rank_tol * max(lambda_1, 0).
/// Eigenvalues in [-rank_tol * lambda_max, rank_tol * lambda_max] are dropped;
/// anything more negative throws NotPsd. Column order inside a tie is unspecified.
EigenDecomposition eigh(const SymmetricMatrix& s, double rank_tol = kDefaultRankTol);

/// Number of entries strictly greater than rank_tol * max(front, 0).
Eigen::Index numeric_rank(std::span<const double> eigenvalues_desc,
                          double rank_tol = kDefaultRankTol);

/// Validated positive semi-definite matrix. Keeps the truncated spectrum so
/// downstream square roots don't redo the eigensolve.
class PsdMatrix {
public:
    explicit PsdMatrix(const Eigen::MatrixXd& m, double rank_tol = kDefaultRankTol);

    static PsdMatrix zero(Eigen::Index p);
    static PsdMatrix identity(Eigen::Index p);

    Eigen::Index dim() const { return m_.rows(); }
    Eigen::Index rank() const { return eig_.rank(); }
    double rank_tol() const { return rank_tol_; }
    const Eigen::MatrixXd& matrix() const { return m_; }
    const EigenDecomposition& spectrum() const { return eig_; }

private:
    Eigen::MatrixXd m_;
    EigenDecomposition eig_;
    double rank_tol_;
};

/// n x r matrix with orthonormal columns.
class StiefelMatrix {
public:
    /// Checks Q^T Q = I to `tol` (max-abs) and throws InvalidSize otherwise.
    explicit StiefelMatrix(Eigen::MatrixXd q, double tol = 1e-10);

    Eigen::Index rows() const { return q_.rows(); }
    Eigen::Index cols() const { return q_.cols(); }
    const Eigen::MatrixXd& matrix() const { return q_; }

private:
    Eigen::MatrixXd q_;
};

/// The n x (n-1) normalised Helmert contrasts. Column k (0-based) has
/// 1/sqrt((k+1)(k+2)) on rows 0..k, -(k+1)/sqrt((k+1)(k+2)) on row k+1 and
/// zeros below, so H^T 1 = 0, H^T H = I and H H^T = I - 11^T/n.
StiefelMatrix helmert_complement(Eigen::Index n);

/// H * y for the Helmert complement of size y.rows() + 1, in O(n p) without
/// forming H.
Eigen::MatrixXd apply_helmert(const Eigen::MatrixXd& y);

/// Sample covariance with divisor (rows - 1); requires at least two rows.
Eigen::MatrixXd sample_covariance(const DataMatrix& z);

/// Throws NonFinite unless every entry is finite.
void require_finite(const Eigen::MatrixXd& m, const char* what);

}  // namespace wthin
