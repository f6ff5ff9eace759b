#pragma once

#include "wthin/linalg.hpp"
#include "wthin/rng.hpp"

#include <optional>
#include <vector>

namespace wthin {

/// Sample mean, sample covariance (divisor count - 1) and sample size.
struct SummaryStats {
    Eigen::VectorXd mean;
    PsdMatrix covariance;
    Eigen::Index count;
};

/// Assignment of rows 0..n-1 to folds 0..K-1. Every fold is nonempty.
class Partition {
public:
    /// Validates that ids lie in [0, folds) and every fold is used.
    Partition(std::vector<int> assignments, int folds);

    int folds() const { return folds_; }
    Eigen::Index size() const { return static_cast<Eigen::Index>(assignments_.size()); }
    const std::vector<int>& assignments() const { return assignments_; }
    int fold_of(Eigen::Index row) const { return assignments_[static_cast<std::size_t>(row)]; }

    std::vector<Eigen::Index> fold_sizes() const;
    /// Row indices of fold k in increasing order.
    std::vector<Eigen::Index> members(int k) const;

private:
    std::vector<int> assignments_;
    int folds_;
};

/// Per-fold statistics. `mean` is empty in known-mean mode.
struct FoldStatistics {
    int fold_id;  ///< 0-based
    Eigen::Index count;
    std::optional<Eigen::VectorXd> mean;
    Eigen::MatrixXd covariance;
};

/// Returns X = Q D V^T, an n x p square root of W with Q Haar on the
/// n x rank(W) Stiefel manifold. If W ~ Wishart_p(n, Sigma) the rows of X
/// are iid N_p(0, Sigma).
DataMatrix decompose_psd(const PsdMatrix& w, Eigen::Index n, RngStream& rng);

/// Same as decompose_psd but from a precomputed (possibly sign-flipped)
/// spectrum.
DataMatrix decompose_from_spectrum(const EigenDecomposition& eig, Eigen::Index n, RngStream& rng);

/// Returns X = 1 t^T + H Q D V^T where H is the Helmert complement and Q is
/// Haar on the (n-1) x rank(W) Stiefel manifold. The column means of X equal
/// t and the centered scatter X^T (I - 11^T/n) X equals W.
DataMatrix decompose_with_mean(const PsdMatrix& w, const Eigen::VectorXd& t, Eigen::Index n,
                               RngStream& rng);

/// Balanced contiguous folds unless `sizes` is given. With `shuffle`, rows are
/// permuted (Fisher-Yates) before being cut into folds.
Partition partition_folds(Eigen::Index n, int k, const std::optional<std::vector<Eigen::Index>>& sizes = {},
                          RngStream* shuffle = nullptr);

/// S^(k) = (1/|C_k|) sum_{i in C_k} X_i X_i^T.
std::vector<FoldStatistics> fold_statistics_known_mean(const DataMatrix& x, const Partition& part);

/// Fold means and fold covariances with divisor |C_k| - 1. Every fold needs
/// at least two rows.
std::vector<FoldStatistics> fold_statistics_unknown_mean(const DataMatrix& x, const Partition& part);

/// Pools unknown-mean fold statistics back into the global mean and sample
/// covariance: (n-1) S = sum_k (|C_k|-1) S^(k) + |C_k| (m_k - m)(m_k - m)^T.
SummaryStats recombine(const std::vector<FoldStatistics>& folds);

/// Pools known-mean fold statistics: sum_k |C_k| S^(k) / n.
Eigen::MatrixXd recombine_known_mean(const std::vector<FoldStatistics>& folds);

}  // namespace wthin
