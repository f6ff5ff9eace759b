#include "wthin/thinning.hpp"

#include "wthin/errors.hpp"
#include "wthin/samplers.hpp"

#include <numeric>
#include <string>

namespace wthin {

Partition::Partition(std::vector<int> assignments, int folds)
    : assignments_(std::move(assignments)), folds_(folds) {
    if (folds_ < 1) throw Error(ErrorCode::InvalidFoldSpec, "need at least one fold");
    std::vector<Eigen::Index> counts(static_cast<std::size_t>(folds_), 0);
    for (int a : assignments_) {
        if (a < 0 || a >= folds_) {
            throw Error(ErrorCode::InvalidFoldSpec, "fold id " + std::to_string(a) + " out of range");
        }
        ++counts[static_cast<std::size_t>(a)];
    }
    for (std::size_t k = 0; k < counts.size(); ++k) {
        if (counts[k] == 0) throw Error(ErrorCode::InvalidFoldSpec, "fold " + std::to_string(k) + " is empty");
    }
}

std::vector<Eigen::Index> Partition::fold_sizes() const {
    std::vector<Eigen::Index> counts(static_cast<std::size_t>(folds_), 0);
    for (int a : assignments_) ++counts[static_cast<std::size_t>(a)];
    return counts;
}

std::vector<Eigen::Index> Partition::members(int k) const {
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < assignments_.size(); ++i)
        if (assignments_[i] == k) rows.push_back(static_cast<Eigen::Index>(i));
    return rows;
}

DataMatrix decompose_from_spectrum(const EigenDecomposition& eig, Eigen::Index n, RngStream& rng) {
    if (n < 1) throw Error(ErrorCode::InvalidSize, "row count must be >= 1");
    const Eigen::Index r = eig.rank();
    if (n < r) {
        throw Error(ErrorCode::RankExceedsRows, "rank(W) = " + std::to_string(r) +
                                                    " exceeds requested rows n = " + std::to_string(n));
    }
    if (r == 0) return DataMatrix::Zero(n, eig.dim());
    const StiefelMatrix q = sample_haar_stiefel(rng, n, r);
    return q.matrix() * eig.root();
}

DataMatrix decompose_psd(const PsdMatrix& w, Eigen::Index n, RngStream& rng) {
    return decompose_from_spectrum(w.spectrum(), n, rng);
}

DataMatrix decompose_with_mean(const PsdMatrix& w, const Eigen::VectorXd& t, Eigen::Index n,
                               RngStream& rng) {
    if (t.size() != w.dim()) {
        throw Error(ErrorCode::DimensionMismatch, "mean length " + std::to_string(t.size()) +
                                                      " != dim(W) " + std::to_string(w.dim()));
    }
    require_finite(t, "mean vector");
    if (n <= w.rank()) {
        throw Error(ErrorCode::RankExceedsRows, "need n > rank(W); rank(W) = " + std::to_string(w.rank()) +
                                                    ", n = " + std::to_string(n));
    }
    DataMatrix out = t.transpose().replicate(n, 1);
    if (w.rank() == 0) return out;
    const DataMatrix centered = decompose_psd(w, n - 1, rng);
    out += apply_helmert(centered);
    return out;
}

Partition partition_folds(Eigen::Index n, int k, const std::optional<std::vector<Eigen::Index>>& sizes,
                          RngStream* shuffle) {
    if (k < 1 || n < k) {
        throw Error(ErrorCode::InvalidFoldSpec,
                    "need 1 <= K <= n, got K=" + std::to_string(k) + " n=" + std::to_string(n));
    }
    std::vector<Eigen::Index> fold_sizes;
    if (sizes) {
        if (static_cast<int>(sizes->size()) != k) {
            throw Error(ErrorCode::InvalidFoldSpec, "sizes list length must equal K");
        }
        for (Eigen::Index s : *sizes)
            if (s < 1) throw Error(ErrorCode::InvalidFoldSpec, "fold sizes must be positive");
        if (std::accumulate(sizes->begin(), sizes->end(), Eigen::Index{0}) != n) {
            throw Error(ErrorCode::InvalidFoldSpec, "fold sizes must sum to n");
        }
        fold_sizes = *sizes;
    } else {
        const Eigen::Index base = n / k;
        const Eigen::Index extra = n % k;
        for (int f = 0; f < k; ++f) fold_sizes.push_back(base + (f < extra ? 1 : 0));
    }

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    if (shuffle != nullptr) {
        for (std::size_t i = order.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(shuffle->uniform_index(i));
            std::swap(order[i - 1], order[j]);
        }
    }

    std::vector<int> assignments(static_cast<std::size_t>(n));
    std::size_t pos = 0;
    for (int f = 0; f < k; ++f) {
        for (Eigen::Index c = 0; c < fold_sizes[static_cast<std::size_t>(f)]; ++c) {
            assignments[static_cast<std::size_t>(order[pos++])] = f;
        }
    }
    return Partition(std::move(assignments), k);
}

namespace {

void check_partition(const DataMatrix& x, const Partition& part) {
    if (part.size() != x.rows()) {
        throw Error(ErrorCode::PartitionMismatch, "partition covers " + std::to_string(part.size()) +
                                                      " rows but X has " + std::to_string(x.rows()));
    }
}

DataMatrix gather_rows(const DataMatrix& x, const std::vector<Eigen::Index>& rows) {
    DataMatrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
    return out;
}

}  // namespace

std::vector<FoldStatistics> fold_statistics_known_mean(const DataMatrix& x, const Partition& part) {
    check_partition(x, part);
    std::vector<FoldStatistics> out;
    out.reserve(static_cast<std::size_t>(part.folds()));
    for (int k = 0; k < part.folds(); ++k) {
        const DataMatrix xk = gather_rows(x, part.members(k));
        Eigen::MatrixXd second = xk.transpose() * xk;
        second /= static_cast<double>(xk.rows());
        out.push_back({k, xk.rows(), std::nullopt, SymmetricMatrix(second).matrix()});
    }
    return out;
}

std::vector<FoldStatistics> fold_statistics_unknown_mean(const DataMatrix& x, const Partition& part) {
    check_partition(x, part);
    const auto sizes = part.fold_sizes();
    for (std::size_t k = 0; k < sizes.size(); ++k) {
        if (sizes[k] < 2) {
            throw Error(ErrorCode::FoldTooSmall, "fold " + std::to_string(k) + " has " +
                                                     std::to_string(sizes[k]) +
                                                     " row(s); unknown-mean statistics need >= 2");
        }
    }
    std::vector<FoldStatistics> out;
    out.reserve(sizes.size());
    for (int k = 0; k < part.folds(); ++k) {
        const DataMatrix xk = gather_rows(x, part.members(k));
        Eigen::VectorXd mean = xk.colwise().mean().transpose();
        out.push_back({k, xk.rows(), std::move(mean), SymmetricMatrix(sample_covariance(xk)).matrix()});
    }
    return out;
}

SummaryStats recombine(const std::vector<FoldStatistics>& folds) {
    if (folds.empty()) throw Error(ErrorCode::InvalidFoldSpec, "nothing to recombine");
    const Eigen::Index p = folds.front().covariance.rows();
    for (const auto& f : folds) {
        if (!f.mean) throw Error(ErrorCode::DimensionMismatch, "recombine needs fold means (unknown-mean mode)");
        if (f.mean->size() != p || f.covariance.rows() != p || f.covariance.cols() != p) {
            throw Error(ErrorCode::DimensionMismatch, "fold statistics have inconsistent dimensions");
        }
        if (f.count < 2) throw Error(ErrorCode::FoldTooSmall, "fold count must be >= 2");
    }
    if (folds.size() == 1) {
        return {*folds.front().mean, PsdMatrix(folds.front().covariance), folds.front().count};
    }

    Eigen::Index n = 0;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(p);
    for (const auto& f : folds) {
        n += f.count;
        mean += static_cast<double>(f.count) * *f.mean;
    }
    mean /= static_cast<double>(n);

    Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(p, p);
    for (const auto& f : folds) {
        const Eigen::VectorXd d = *f.mean - mean;
        scatter += static_cast<double>(f.count - 1) * f.covariance;
        scatter += static_cast<double>(f.count) * d * d.transpose();
    }
    return {std::move(mean), PsdMatrix(scatter / static_cast<double>(n - 1)), n};
}

Eigen::MatrixXd recombine_known_mean(const std::vector<FoldStatistics>& folds) {
    if (folds.empty()) throw Error(ErrorCode::InvalidFoldSpec, "nothing to recombine");
    const Eigen::Index p = folds.front().covariance.rows();
    Eigen::MatrixXd total = Eigen::MatrixXd::Zero(p, p);
    Eigen::Index n = 0;
    for (const auto& f : folds) {
        if (f.covariance.rows() != p || f.covariance.cols() != p) {
            throw Error(ErrorCode::DimensionMismatch, "fold statistics have inconsistent dimensions");
        }
        total += static_cast<double>(f.count) * f.covariance;
        n += f.count;
    }
    return total / static_cast<double>(n);
}

}  // namespace wthin
