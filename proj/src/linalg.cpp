#include "wthin/linalg.hpp"

#include "wthin/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace wthin {

SymmetricMatrix::SymmetricMatrix(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols() || m.rows() == 0) {
        throw Error(ErrorCode::InvalidSize, "symmetric matrix must be square and nonempty, got " +
                                                std::to_string(m.rows()) + "x" +
                                                std::to_string(m.cols()));
    }
    require_finite(m, "symmetric matrix");
    const Eigen::Index p = m.rows();
    m_.resize(p, p);
    for (Eigen::Index j = 0; j < p; ++j) {
        m_(j, j) = m(j, j);
        for (Eigen::Index i = j + 1; i < p; ++i) {
            const double v = 0.5 * (m(i, j) + m(j, i));
            m_(i, j) = v;
            m_(j, i) = v;
        }
    }
}

Eigen::MatrixXd EigenDecomposition::reconstruct() const {
    return vectors * eigenvalues.asDiagonal() * vectors.transpose();
}

Eigen::MatrixXd EigenDecomposition::root() const {
    return eigenvalues.cwiseSqrt().asDiagonal() * vectors.transpose();
}

Eigen::Index numeric_rank(std::span<const double> eigenvalues_desc, double rank_tol) {
    if (eigenvalues_desc.empty()) return 0;
    const double threshold = rank_tol * std::max(eigenvalues_desc.front(), 0.0);
    return std::count_if(eigenvalues_desc.begin(), eigenvalues_desc.end(),
                         [threshold](double v) { return v > threshold; });
}

EigenDecomposition eigh(const SymmetricMatrix& s, double rank_tol) {
    if (!(rank_tol > 0.0 && rank_tol < 1.0)) {
        throw Error(ErrorCode::InvalidSize, "rank_tol must lie in (0, 1)");
    }
    const Eigen::Index p = s.dim();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s.matrix());
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorCode::NotPsd, "eigensolver did not converge");
    }
    // Eigen returns ascending order.
    std::vector<double> values(static_cast<std::size_t>(p));
    for (Eigen::Index i = 0; i < p; ++i) values[static_cast<std::size_t>(i)] = solver.eigenvalues()(p - 1 - i);

    const double lambda_max = std::max(values.front(), 0.0);
    const double threshold = rank_tol * lambda_max;
    if (values.back() < -threshold) {
        throw Error(ErrorCode::NotPsd, "eigenvalue " + std::to_string(values.back()) +
                                           " below -rank_tol * lambda_max = " +
                                           std::to_string(-threshold));
    }

    const Eigen::Index r = numeric_rank(values, rank_tol);
    EigenDecomposition out;
    out.eigenvalues.resize(r);
    out.vectors.resize(p, r);
    for (Eigen::Index k = 0; k < r; ++k) {
        out.eigenvalues(k) = values[static_cast<std::size_t>(k)];
        out.vectors.col(k) = solver.eigenvectors().col(p - 1 - k);
    }
    return out;
}

PsdMatrix::PsdMatrix(const Eigen::MatrixXd& m, double rank_tol) : rank_tol_(rank_tol) {
    SymmetricMatrix sym(m);
    eig_ = eigh(sym, rank_tol);
    m_ = sym.matrix();
}

PsdMatrix PsdMatrix::zero(Eigen::Index p) { return PsdMatrix(Eigen::MatrixXd::Zero(p, p)); }

PsdMatrix PsdMatrix::identity(Eigen::Index p) { return PsdMatrix(Eigen::MatrixXd::Identity(p, p)); }

StiefelMatrix::StiefelMatrix(Eigen::MatrixXd q, double tol) : q_(std::move(q)) {
    if (q_.cols() < 1 || q_.cols() > q_.rows()) {
        throw Error(ErrorCode::InvalidSize, "Stiefel matrix needs 1 <= cols <= rows");
    }
    const Eigen::Index r = q_.cols();
    const double err = (q_.transpose() * q_ - Eigen::MatrixXd::Identity(r, r)).cwiseAbs().maxCoeff();
    if (!(err <= tol)) {
        throw Error(ErrorCode::InvalidSize,
                    "columns are not orthonormal (max |Q^T Q - I| = " + std::to_string(err) + ")");
    }
}

StiefelMatrix helmert_complement(Eigen::Index n) {
    if (n < 2) throw Error(ErrorCode::InvalidSize, "Helmert complement needs n >= 2");
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n - 1);
    for (Eigen::Index k = 0; k < n - 1; ++k) {
        const double m = static_cast<double>(k + 1);
        const double scale = 1.0 / std::sqrt(m * (m + 1.0));
        h.col(k).head(k + 1).setConstant(scale);
        h(k + 1, k) = -m * scale;
    }
    return StiefelMatrix(std::move(h), 1e-12);
}

Eigen::MatrixXd apply_helmert(const Eigen::MatrixXd& y) {
    const Eigen::Index m = y.rows();  // n - 1
    const Eigen::Index n = m + 1;
    Eigen::MatrixXd out(n, y.cols());
    // suffix(i) = sum_{k >= i} y_k / sqrt((k+1)(k+2))
    Eigen::RowVectorXd suffix = Eigen::RowVectorXd::Zero(y.cols());
    for (Eigen::Index i = n - 1; i >= 0; --i) {
        if (i < m) {
            const double kk = static_cast<double>(i + 1);
            suffix += y.row(i) / std::sqrt(kk * (kk + 1.0));
        }
        out.row(i) = suffix;
        if (i >= 1) {
            const double kk = static_cast<double>(i);
            out.row(i) -= (kk / std::sqrt(kk * (kk + 1.0))) * y.row(i - 1);
        }
    }
    return out;
}

Eigen::MatrixXd sample_covariance(const DataMatrix& z) {
    if (z.rows() < 2) throw Error(ErrorCode::InvalidSize, "sample covariance needs >= 2 rows");
    const Eigen::RowVectorXd mean = z.colwise().mean();
    const Eigen::MatrixXd centered = z.rowwise() - mean;
    return (centered.transpose() * centered) / static_cast<double>(z.rows() - 1);
}

void require_finite(const Eigen::MatrixXd& m, const char* what) {
    if (!m.allFinite()) throw Error(ErrorCode::NonFinite, std::string(what) + " has non-finite entries");
}

}  // namespace wthin
