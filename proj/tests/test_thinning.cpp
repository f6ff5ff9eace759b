#include "wthin/errors.hpp"
#include "wthin/samplers.hpp"
#include "wthin/stats_tests.hpp"
#include "wthin/thinning.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

using namespace wthin;

namespace {

double rel_frob(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return (a - b).norm() / (1.0 + b.norm());
}

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::Io;
}

Eigen::MatrixXd centered_scatter(const DataMatrix& x) {
    const Eigen::RowVectorXd m = x.colwise().mean();
    const Eigen::MatrixXd c = x.rowwise() - m;
    return c.transpose() * c;
}

}  // namespace

TEST(DecomposePsd, IdentityGivesOrthogonalMatrix) {
    RngStream rng(1, 0);
    const DataMatrix x = decompose_psd(PsdMatrix::identity(2), 2, rng);
    EXPECT_LT((x.transpose() * x - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((x * x.transpose() - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(DecomposePsd, RankOneDiagonal) {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(2, 2);
    w(0, 0) = 4.0;
    std::set<double> seen;
    for (std::uint64_t s = 0; s < 64; ++s) {
        RngStream rng(2, s);
        const DataMatrix x = decompose_psd(PsdMatrix(w), 1, rng);
        ASSERT_EQ(x.rows(), 1);
        EXPECT_NEAR(std::abs(x(0, 0)), 2.0, 1e-14);
        EXPECT_EQ(x(0, 1), 0.0);
        seen.insert(x(0, 0) > 0 ? 1.0 : -1.0);
    }
    EXPECT_EQ(seen.size(), 2u);
}

TEST(DecomposePsd, ZeroMatrix) {
    RngStream rng(3, 0);
    const DataMatrix x = decompose_psd(PsdMatrix::zero(3), 4, rng);
    EXPECT_EQ(x.rows(), 4);
    EXPECT_TRUE(x.isZero(0.0));
}

TEST(DecomposePsd, RankExceedsRows) {
    RngStream rng(3, 1);
    EXPECT_EQ(code_of([&] { decompose_psd(PsdMatrix::identity(3), 2, rng); }), ErrorCode::RankExceedsRows);
}

TEST(DecomposePsd, SquareRootProperty) {
    RngStream rng(4, 0);
    for (int t = 0; t < 200; ++t) {
        const auto p = static_cast<Eigen::Index>(1 + rng.uniform_index(25));
        const auto dof = static_cast<Eigen::Index>(1 + rng.uniform_index(30));
        const Eigen::MatrixXd g = sample_std_normal_matrix(rng, dof, p);
        const PsdMatrix w(g.transpose() * g);
        const auto n = w.rank() + static_cast<Eigen::Index>(rng.uniform_index(5));
        if (n == 0) continue;
        const DataMatrix x = decompose_psd(w, n, rng);
        EXPECT_LE((x.transpose() * x - w.matrix()).norm(), 1e-8 * (1.0 + w.matrix().norm()));
    }
}

TEST(DecomposePsd, SignFlippedSpectrumStillSquareRoot) {
    RngStream rng(4, 1);
    const PsdMatrix w = sample_wishart(rng, 3, PsdMatrix(toeplitz_inverse_distance(5)));
    EigenDecomposition eig = w.spectrum();
    eig.vectors.col(1) *= -1.0;
    const DataMatrix x = decompose_from_spectrum(eig, 3, rng);
    EXPECT_LT(rel_frob(x.transpose() * x, w.matrix()), 1e-10);
}

TEST(DecomposeWithMean, ZeroScatterReplicatesMean) {
    RngStream rng(5, 0);
    Eigen::VectorXd t(2);
    t << 3.0, -1.0;
    const DataMatrix x = decompose_with_mean(PsdMatrix::zero(2), t, 4, rng);
    ASSERT_EQ(x.rows(), 4);
    for (Eigen::Index i = 0; i < 4; ++i) {
        EXPECT_EQ(x(i, 0), 3.0);
        EXPECT_EQ(x(i, 1), -1.0);
    }
}

TEST(DecomposeWithMean, RecoversMeanAndScatter) {
    RngStream rng(5, 1);
    for (int t = 0; t < 200; ++t) {
        const auto p = static_cast<Eigen::Index>(1 + rng.uniform_index(20));
        const auto n = static_cast<Eigen::Index>(2 + rng.uniform_index(30));
        Eigen::VectorXd mu(p);
        for (Eigen::Index j = 0; j < p; ++j) mu(j) = 10.0 * rng.normal();
        const DataMatrix z = sample_std_normal_matrix(rng, n, p).rowwise() + mu.transpose();
        const Eigen::VectorXd zbar = z.colwise().mean().transpose();
        const PsdMatrix w(centered_scatter(z));
        const DataMatrix x = decompose_with_mean(w, zbar, n, rng);
        EXPECT_LT((x.colwise().mean().transpose() - zbar).cwiseAbs().maxCoeff(), 1e-10);
        EXPECT_LE((centered_scatter(x) - w.matrix()).norm(), 1e-8 * (1.0 + w.matrix().norm()));
    }
}

TEST(DecomposeWithMean, Errors) {
    RngStream rng(5, 2);
    EXPECT_EQ(code_of([&] { decompose_with_mean(PsdMatrix::identity(2), Eigen::VectorXd::Zero(2), 2, rng); }),
              ErrorCode::RankExceedsRows);
    EXPECT_EQ(code_of([&] { decompose_with_mean(PsdMatrix::identity(2), Eigen::VectorXd::Zero(3), 5, rng); }),
              ErrorCode::DimensionMismatch);
}

TEST(Partition, BalancedContiguous) {
    const auto part = partition_folds(10, 2);
    EXPECT_EQ(part.fold_sizes(), (std::vector<Eigen::Index>{5, 5}));
    EXPECT_EQ(part.fold_of(4), 0);
    EXPECT_EQ(part.fold_of(5), 1);
    const auto big = partition_folds(250, 10);
    for (auto s : big.fold_sizes()) EXPECT_EQ(s, 25);
    const auto uneven = partition_folds(249, 10);
    for (auto s : uneven.fold_sizes()) EXPECT_TRUE(s == 24 || s == 25);
}

TEST(Partition, InvalidSpecs) {
    EXPECT_EQ(code_of([] { partition_folds(9, 10); }), ErrorCode::InvalidFoldSpec);
    EXPECT_EQ(code_of([] { partition_folds(5, 2, std::vector<Eigen::Index>{2, 2}); }), ErrorCode::InvalidFoldSpec);
    EXPECT_EQ(code_of([] { partition_folds(5, 2, std::vector<Eigen::Index>{5, 0}); }), ErrorCode::InvalidFoldSpec);
    EXPECT_EQ(code_of([] { Partition({0, 0, 2}, 3); }), ErrorCode::InvalidFoldSpec);
}

TEST(Partition, ShuffledIsPermutationOfSizes) {
    RngStream rng(6, 0);
    const auto part = partition_folds(20, 3, std::vector<Eigen::Index>{4, 7, 9}, &rng);
    EXPECT_EQ(part.fold_sizes(), (std::vector<Eigen::Index>{4, 7, 9}));
    RngStream again(6, 0);
    EXPECT_EQ(partition_folds(20, 3, std::vector<Eigen::Index>{4, 7, 9}, &again).assignments(), part.assignments());
    EXPECT_NE(part.assignments(), partition_folds(20, 3, std::vector<Eigen::Index>{4, 7, 9}).assignments());
}

TEST(FoldStatsKnownMean, SingleFold) {
    RngStream rng(7, 0);
    const DataMatrix x = sample_std_normal_matrix(rng, 6, 3);
    const auto folds = fold_statistics_known_mean(x, partition_folds(6, 1));
    ASSERT_EQ(folds.size(), 1u);
    EXPECT_LT((folds[0].covariance - x.transpose() * x / 6.0).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_FALSE(folds[0].mean.has_value());
}

TEST(FoldStatsKnownMean, BasisRows) {
    const DataMatrix x = Eigen::MatrixXd::Identity(2, 2);
    const auto folds = fold_statistics_known_mean(x, partition_folds(2, 2));
    Eigen::MatrixXd e1 = Eigen::MatrixXd::Zero(2, 2), e2 = Eigen::MatrixXd::Zero(2, 2);
    e1(0, 0) = 1.0;
    e2(1, 1) = 1.0;
    EXPECT_EQ(folds[0].covariance, e1);
    EXPECT_EQ(folds[1].covariance, e2);
}

TEST(FoldStatsKnownMean, PartitionMismatch) {
    const DataMatrix x = Eigen::MatrixXd::Identity(3, 2);
    EXPECT_EQ(code_of([&] { fold_statistics_known_mean(x, partition_folds(4, 2)); }), ErrorCode::PartitionMismatch);
}

TEST(FoldStatsKnownMean, Additivity) {
    RngStream rng(7, 1);
    for (int t = 0; t < 100; ++t) {
        const auto n = static_cast<Eigen::Index>(2 + rng.uniform_index(40));
        const auto p = static_cast<Eigen::Index>(1 + rng.uniform_index(8));
        const int k = 1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n)));
        const DataMatrix x = sample_std_normal_matrix(rng, n, p);
        const auto folds = fold_statistics_known_mean(x, partition_folds(n, k, std::nullopt, &rng));
        Eigen::MatrixXd total = Eigen::MatrixXd::Zero(p, p);
        for (const auto& f : folds) total += static_cast<double>(f.count) * f.covariance;
        EXPECT_LT((total - x.transpose() * x).cwiseAbs().maxCoeff(), 1e-10 * (1.0 + total.cwiseAbs().maxCoeff()));
    }
}

TEST(FoldStatsKnownMean, CrossFoldIndependence) {
    const PsdMatrix sigma(toeplitz_inverse_distance(3));
    const int reps = 50000;
    std::vector<std::vector<double>> a(6), b(6);
    const auto part = partition_folds(4, 2);
    for (int r = 0; r < reps; ++r) {
        RngStream rng(8, static_cast<std::uint64_t>(r));
        const auto w = sample_wishart(rng, 4, sigma);
        const auto folds = fold_statistics_known_mean(decompose_psd(w, 4, rng), part);
        int e = 0;
        for (Eigen::Index i = 0; i < 3; ++i)
            for (Eigen::Index j = i; j < 3; ++j, ++e) {
                a[static_cast<std::size_t>(e)].push_back(folds[0].covariance(i, j));
                b[static_cast<std::size_t>(e)].push_back(folds[1].covariance(i, j));
            }
    }
    std::vector<std::pair<ScalarStream, ScalarStream>> pairs;
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j) pairs.emplace_back(a[i], b[j]);
    EXPECT_LT(independence_check(pairs), 5.0 / std::sqrt(double(reps)));
}

TEST(FoldStatsUnknownMean, IdenticalRows) {
    DataMatrix x(4, 2);
    x << 1, 2, 1, 2, 5, 6, 7, 8;
    const auto folds = fold_statistics_unknown_mean(x, partition_folds(4, 2));
    EXPECT_TRUE(folds[0].covariance.isZero(0.0));
    EXPECT_EQ(*folds[0].mean, Eigen::Vector2d(1, 2));
}

TEST(FoldStatsUnknownMean, SingletonFoldRejected) {
    const DataMatrix x = Eigen::MatrixXd::Identity(3, 2);
    EXPECT_EQ(code_of([&] { fold_statistics_unknown_mean(x, partition_folds(3, 2)); }), ErrorCode::FoldTooSmall);
}

TEST(FoldStatsUnknownMean, PoolingIdentity) {
    RngStream rng(9, 0);
    for (int t = 0; t < 100; ++t) {
        const auto n = static_cast<Eigen::Index>(4 + rng.uniform_index(40));
        const auto p = static_cast<Eigen::Index>(1 + rng.uniform_index(6));
        const int k = 1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n / 2)));
        const DataMatrix x = (3.0 * sample_std_normal_matrix(rng, n, p)).array() + 2.0;
        const auto folds = fold_statistics_unknown_mean(x, partition_folds(n, k, std::nullopt, &rng));
        const Eigen::VectorXd grand = x.colwise().mean().transpose();
        Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(p, p);
        for (const auto& f : folds) {
            const Eigen::VectorXd d = *f.mean - grand;
            pooled += static_cast<double>(f.count - 1) * f.covariance + static_cast<double>(f.count) * d * d.transpose();
        }
        EXPECT_LT(rel_frob(pooled, centered_scatter(x)), 1e-8);
    }
}

TEST(FoldStatsUnknownMean, CrossFoldIndependence) {
    const PsdMatrix sigma(toeplitz_inverse_distance(2));
    Eigen::VectorXd mu(2);
    mu << 1.0, -2.0;
    const int reps = 50000;
    const auto part = partition_folds(6, 2);
    std::vector<std::vector<double>> a(5), b(5);
    for (int r = 0; r < reps; ++r) {
        RngStream rng(10, static_cast<std::uint64_t>(r));
        const DataMatrix z = sample_matrix_normal(rng, mu, 6, sigma);
        const PsdMatrix w(centered_scatter(z));
        const DataMatrix x = decompose_with_mean(w, z.colwise().mean().transpose(), 6, rng);
        const auto folds = fold_statistics_unknown_mean(x, part);
        auto scalars = [](const FoldStatistics& f) {
            return std::vector<double>{(*f.mean)(0), (*f.mean)(1), f.covariance(0, 0), f.covariance(0, 1),
                                       f.covariance(1, 1)};
        };
        const auto s0 = scalars(folds[0]);
        const auto s1 = scalars(folds[1]);
        for (std::size_t i = 0; i < 5; ++i) {
            a[i].push_back(s0[i]);
            b[i].push_back(s1[i]);
        }
    }
    std::vector<std::pair<ScalarStream, ScalarStream>> pairs;
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) pairs.emplace_back(a[i], b[j]);
    EXPECT_LT(independence_check(pairs), 5.0 / std::sqrt(double(reps)));
}

TEST(Recombine, SingleFoldUnchanged) {
    FoldStatistics f{0, 5, Eigen::Vector2d(1.5, -0.5), (Eigen::Matrix2d() << 2, 0.3, 0.3, 1).finished()};
    const auto s = recombine({f});
    EXPECT_EQ(s.mean, *f.mean);
    EXPECT_EQ(s.covariance.matrix(), f.covariance);
    EXPECT_EQ(s.count, 5);
}

TEST(Recombine, EqualMeansNoBetweenScatter) {
    const Eigen::Matrix2d c1 = (Eigen::Matrix2d() << 2, 0.5, 0.5, 1).finished();
    const Eigen::Matrix2d c2 = (Eigen::Matrix2d() << 1, 0, 0, 3).finished();
    const Eigen::Vector2d mu0(0.7, -1.1);
    const auto s = recombine({{0, 4, mu0, c1}, {1, 4, mu0, c2}});
    EXPECT_LT((s.mean - mu0).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LT((s.covariance.matrix() - (3.0 * c1 + 3.0 * c2) / 7.0).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Recombine, DimensionMismatch) {
    FoldStatistics a{0, 3, Eigen::Vector2d(0, 0), Eigen::Matrix2d::Identity()};
    FoldStatistics b{1, 3, Eigen::Vector3d(0, 0, 0), Eigen::Matrix3d::Identity()};
    EXPECT_EQ(code_of([&] { recombine({a, b}); }), ErrorCode::DimensionMismatch);
}

TEST(Recombine, SeededRoundTrip) {
    RngStream rng(11, 0);
    const Eigen::Index n = 20, p = 4;
    const DataMatrix z = sample_matrix_normal(rng, Eigen::Vector4d(1, 2, 3, 4), n, PsdMatrix(toeplitz_inverse_distance(p)));
    const Eigen::VectorXd zbar = z.colwise().mean().transpose();
    const Eigen::MatrixXd s_n = sample_covariance(z);
    const PsdMatrix w(static_cast<double>(n - 1) * s_n);
    const DataMatrix x = decompose_with_mean(w, zbar, n, rng);
    for (int k : {1, 2, 3, 5, 10}) {
        const auto back = recombine(fold_statistics_unknown_mean(x, partition_folds(n, k)));
        EXPECT_LT((back.mean - zbar).cwiseAbs().maxCoeff(), 1e-10);
        EXPECT_LT((back.covariance.matrix() - s_n).norm() / s_n.norm(), 1e-8);
        EXPECT_EQ(back.count, n);
    }
}

TEST(RecombineKnownMean, RoundTrip) {
    RngStream rng(12, 0);
    const Eigen::Index n = 12;
    const PsdMatrix w = sample_wishart(rng, n, PsdMatrix(toeplitz_inverse_distance(3)));
    const DataMatrix x = decompose_psd(w, n, rng);
    const auto folds = fold_statistics_known_mean(x, partition_folds(n, 4));
    EXPECT_LT((recombine_known_mean(folds) * static_cast<double>(n) - w.matrix()).norm() / w.matrix().norm(), 1e-10);
}

TEST(DecomposePsd, MarginalsPassKsAtSmallScale) {
    // Quick version of the full harness: 2000 replications, n = 2, p = 3.
    const PsdMatrix sigma(toeplitz_inverse_distance(3));
    const auto grid = verify_marginals_alg1(2000, 2, sigma, 13);
    EXPECT_TRUE(grid.all_pass());
    const auto flipped = verify_marginals_alg1(2000, 2, sigma, 13, RootKind::HaarFlippedSigns);
    EXPECT_TRUE(flipped.all_pass());
}
