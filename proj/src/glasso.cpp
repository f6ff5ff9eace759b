#include "wthin/glasso.hpp"

#include "wthin/errors.hpp"
#include "wthin/thinning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace wthin {

namespace {

double soft_threshold(double x, double t) {
    if (x > t) return x - t;
    if (x < -t) return x + t;
    return 0.0;
}

double mean_abs_offdiag(const Eigen::MatrixXd& s) {
    const Eigen::Index p = s.rows();
    if (p < 2) return 0.0;
    const double total = s.cwiseAbs().sum() - s.diagonal().cwiseAbs().sum();
    return total / static_cast<double>(p * (p - 1));
}

// Minimises 0.5 b^T A b + c^T b + lambda ||b||_1 in place, starting from b.
void lasso_cd(const Eigen::MatrixXd& a, const Eigen::VectorXd& c, double lambda, Eigen::VectorXd& b,
              double tol, int max_sweeps) {
    Eigen::VectorXd grad = a * b + c;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double max_step = 0.0;
        for (Eigen::Index i = 0; i < b.size(); ++i) {
            const double aii = a(i, i);
            const double old = b(i);
            const double partial = grad(i) - aii * old;
            const double updated = -soft_threshold(partial, lambda) / aii;
            const double delta = updated - old;
            if (delta != 0.0) {
                b(i) = updated;
                grad.noalias() += delta * a.col(i);
                max_step = std::max(max_step, aii * std::abs(delta));
            }
        }
        if (max_step < tol) break;
    }
}

Eigen::MatrixXd symmetric_inverse(const Eigen::MatrixXd& m) {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorCode::NotPositiveDefinite, "matrix is not positive definite");
    }
    Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
    return SymmetricMatrix(inv).matrix();
}

double log_det_pd(const Eigen::MatrixXd& m) {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorCode::NotPositiveDefinite, "matrix is not positive definite");
    }
    const auto& l = llt.matrixLLT();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) acc += std::log(l(i, i));
    return 2.0 * acc;
}

std::vector<Eigen::Index> all_but(Eigen::Index p, Eigen::Index j) {
    std::vector<Eigen::Index> idx;
    idx.reserve(static_cast<std::size_t>(p - 1));
    for (Eigen::Index i = 0; i < p; ++i)
        if (i != j) idx.push_back(i);
    return idx;
}

}  // namespace

double neg_log_lik(const Eigen::MatrixXd& omega, const Eigen::MatrixXd& s) {
    if (omega.rows() != omega.cols() || s.rows() != omega.rows() || s.cols() != omega.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "precision and covariance shapes differ");
    }
    return -log_det_pd(omega) + (omega.cwiseProduct(s)).sum();
}

double glasso_objective(const Eigen::MatrixXd& omega, const Eigen::MatrixXd& s, double lambda,
                        bool penalize_diagonal) {
    double l1 = omega.cwiseAbs().sum();
    if (!penalize_diagonal) l1 -= omega.diagonal().cwiseAbs().sum();
    return neg_log_lik(omega, s) + lambda * l1;
}

double kkt_residual(const Eigen::MatrixXd& omega, const Eigen::MatrixXd& s, double lambda,
                    bool penalize_diagonal) {
    const Eigen::MatrixXd w = symmetric_inverse(omega);
    const Eigen::Index p = s.rows();
    double worst = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
        for (Eigen::Index i = 0; i < p; ++i) {
            const double pen = (i == j && !penalize_diagonal) ? 0.0 : lambda;
            const double g = s(i, j) - w(i, j);
            double v;
            if (omega(i, j) != 0.0) {
                v = std::abs(g + pen * (omega(i, j) > 0.0 ? 1.0 : -1.0));
            } else {
                v = std::max(0.0, std::abs(g) - pen);
            }
            worst = std::max(worst, v);
        }
    }
    return worst;
}

GlassoResult glasso_fit(const PsdMatrix& s_psd, double lambda, const GlassoOptions& opts,
                        const GlassoResult* warm) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw Error(ErrorCode::InvalidSize, "lambda must be a finite nonnegative number");
    }
    const Eigen::MatrixXd& s = s_psd.matrix();
    const Eigen::Index p = s.rows();

    GlassoResult res;
    res.lambda = lambda;

    if (lambda == 0.0) {
        if (s_psd.rank() < p) {
            throw Error(ErrorCode::SingularInput, "lambda = 0 needs a positive definite S (rank " +
                                                      std::to_string(s_psd.rank()) + " < " +
                                                      std::to_string(p) + ")");
        }
        try {
            res.precision = symmetric_inverse(s);
        } catch (const Error&) {
            throw Error(ErrorCode::SingularInput, "lambda = 0 needs a positive definite S");
        }
        res.covariance = s;
        res.converged = true;
        res.objective = glasso_objective(res.precision, s, 0.0, opts.penalize_diagonal);
        res.objective_trace.push_back(res.objective);
        return res;
    }

    const double diag_pen = opts.penalize_diagonal ? lambda : 0.0;
    for (Eigen::Index i = 0; i < p; ++i) {
        if (!(s(i, i) + diag_pen > 0.0)) {
            throw Error(ErrorCode::SingularInput, "S has a zero diagonal entry and the diagonal is unpenalised");
        }
    }

    Eigen::MatrixXd theta;
    Eigen::MatrixXd w;
    if (warm != nullptr && warm->precision.rows() == p && warm->lambda > 0.0) {
        theta = warm->precision;
        w = warm->covariance;
    } else {
        theta = (s.diagonal().array() + diag_pen).inverse().matrix().asDiagonal();
        w = (s.diagonal().array() + diag_pen).matrix().asDiagonal();
    }

    const double mean_off = mean_abs_offdiag(s);
    const double threshold = opts.tol * (mean_off > 0.0 ? mean_off : 1.0);
    const double inner_tol = std::max(1e-3 * threshold, 1e-15);

    res.objective_trace.push_back(glasso_objective(theta, s, lambda, opts.penalize_diagonal));

    if (p == 1) {
        theta(0, 0) = 1.0 / (s(0, 0) + diag_pen);
        w(0, 0) = s(0, 0) + diag_pen;
        res.converged = true;
    }

    Eigen::VectorXd beta(p - 1);
    Eigen::VectorXd s12(p - 1);
    Eigen::MatrixXd m(p - 1, p - 1);
    for (int iter = 0; iter < opts.max_iter && !res.converged; ++iter) {
        const Eigen::MatrixXd w_old = w;
        for (Eigen::Index j = 0; j < p; ++j) {
            const auto idx = all_but(p, j);
            const double w22 = w(j, j);
            const Eigen::VectorXd w12 = w(idx, j);
            m = w(idx, idx) - w12 * w12.transpose() / w22;  // Theta_11^{-1}
            const double scale = s(j, j) + diag_pen;
            s12 = s(idx, j);
            beta = theta(idx, j);
            lasso_cd(scale * m, s12, lambda, beta, inner_tol, 10000);

            const Eigen::VectorXd u = m * beta;
            theta(idx, j) = beta;
            theta(j, idx) = beta.transpose();
            theta(j, j) = 1.0 / scale + beta.dot(u);
            w(idx, idx) = m + scale * u * u.transpose();
            w(idx, j) = -scale * u;
            w(j, idx) = -scale * u.transpose();
            w(j, j) = scale;
        }
        // Rank-one updates drift; resynchronise the working covariance.
        theta = SymmetricMatrix(theta).matrix();
        w = symmetric_inverse(theta);

        res.iterations = iter + 1;
        res.objective_trace.push_back(glasso_objective(theta, s, lambda, opts.penalize_diagonal));
        const double change = (w - w_old).cwiseAbs().maxCoeff();
        // The covariance-change rule alone can stop early on near-singular S,
        // so the subgradient conditions are required as well.
        if (change < threshold && kkt_residual(theta, s, lambda, opts.penalize_diagonal) <= opts.tol) {
            res.converged = true;
        }
    }

    res.precision = std::move(theta);
    res.covariance = std::move(w);
    res.objective = res.objective_trace.back();
    return res;
}

std::vector<double> default_lambda_grid() {
    std::vector<double> grid{0.0};
    const double lo = std::log(1e-3);
    const double hi = std::log(0.2);
    for (int i = 0; i < 41; ++i) grid.push_back(std::exp(lo + (hi - lo) * i / 40.0));
    grid.back() = 0.2;
    grid[1] = 1e-3;
    return grid;
}

std::size_t select_minimizer(const std::vector<double>& losses) {
    if (losses.empty()) throw Error(ErrorCode::EmptySample, "empty loss curve");
    std::size_t best = 0;
    for (std::size_t i = 1; i < losses.size(); ++i)
        if (losses[i] <= losses[best]) best = i;
    return best;
}

namespace {

void check_grid(const std::vector<double>& lambdas) {
    if (lambdas.empty()) throw Error(ErrorCode::InvalidSize, "empty lambda grid");
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        if (!(lambdas[i] >= 0.0)) throw Error(ErrorCode::InvalidSize, "lambda grid must be nonnegative");
        if (i > 0 && !(lambdas[i] > lambdas[i - 1])) {
            throw Error(ErrorCode::InvalidSize, "lambda grid must be strictly increasing");
        }
    }
}

// Adds sum over the grid of the test loss for one fold, walking lambda from
// large to small so warm starts follow the regularisation path.
void accumulate_fold(const PsdMatrix& train, const Eigen::MatrixXd& test, const std::vector<double>& lambdas,
                     const GlassoOptions& opts, CvCurve& curve) {
    std::optional<GlassoResult> prev;
    for (std::size_t idx = lambdas.size(); idx-- > 0;) {
        const GlassoResult* warm = (opts.warm_start && prev) ? &*prev : nullptr;
        GlassoResult fit = glasso_fit(train, lambdas[idx], opts, warm);
        ++curve.fits;
        if (!fit.converged) ++curve.nonconverged;
        curve.losses[idx] += neg_log_lik(fit.precision, test);
        prev = std::move(fit);
    }
}

}  // namespace

CvCurve cv_sample_split(const DataMatrix& z, int k, const std::vector<double>& lambdas,
                        const GlassoOptions& opts, RngStream* shuffle) {
    check_grid(lambdas);
    require_finite(z, "data matrix");
    const Eigen::Index n = z.rows();
    if (k < 1 || n < 2 * static_cast<Eigen::Index>(k)) {
        throw Error(ErrorCode::FoldTooSmall, "sample-split CV needs n >= 2K (n=" + std::to_string(n) +
                                                 ", K=" + std::to_string(k) + ")");
    }
    const Partition part = partition_folds(n, k, std::nullopt, shuffle);

    CvCurve curve{CvMode::SampleSplit, lambdas, std::vector<double>(lambdas.size(), 0.0)};
    for (int f = 0; f < k; ++f) {
        std::vector<Eigen::Index> test_rows;
        std::vector<Eigen::Index> train_rows;
        for (Eigen::Index i = 0; i < n; ++i) (part.fold_of(i) == f ? test_rows : train_rows).push_back(i);
        if (k == 1) train_rows = test_rows;
        if (test_rows.size() < 2 || train_rows.size() < 2) {
            throw Error(ErrorCode::FoldTooSmall, "every fold and its complement need >= 2 rows");
        }
        const PsdMatrix train(sample_covariance(z(train_rows, Eigen::all)));
        const Eigen::MatrixXd test = sample_covariance(z(test_rows, Eigen::all));
        accumulate_fold(train, test, lambdas, opts, curve);
    }
    curve.selected = select_minimizer(curve.losses);
    return curve;
}

std::vector<ThinnedFold> thinned_cv_folds(const PsdMatrix& s_n, Eigen::Index n, int k, RngStream& rng) {
    const Eigen::Index rows = n - 1;
    if (k < 1 || rows < 2 * static_cast<Eigen::Index>(k)) {
        throw Error(ErrorCode::FoldTooSmall, "thinned CV needs n - 1 >= 2K (n=" + std::to_string(n) +
                                                 ", K=" + std::to_string(k) + ")");
    }
    if (s_n.rank() > rows) {
        throw Error(ErrorCode::RankExceedsRows, "rank(S_n) = " + std::to_string(s_n.rank()) +
                                                    " exceeds n - 1 = " + std::to_string(rows));
    }
    const PsdMatrix w(static_cast<double>(rows) * s_n.matrix(), s_n.rank_tol());
    const DataMatrix x = decompose_psd(w, rows, rng);
    const Partition part = partition_folds(rows, k);
    const Eigen::MatrixXd total = x.transpose() * x;

    std::vector<ThinnedFold> out;
    for (int f = 0; f < k; ++f) {
        const auto members = part.members(f);
        const auto c = static_cast<Eigen::Index>(members.size());
        const DataMatrix xk = x(members, Eigen::all);
        const Eigen::MatrixXd scatter = xk.transpose() * xk;
        const Eigen::MatrixXd test = SymmetricMatrix(scatter / static_cast<double>(c)).matrix();
        const Eigen::MatrixXd train =
            (k == 1) ? test : SymmetricMatrix((total - scatter) / static_cast<double>(rows - c)).matrix();
        out.push_back({train, test, c});
    }
    return out;
}

CvCurve cv_thinned(const PsdMatrix& s_n, Eigen::Index n, int k, const std::vector<double>& lambdas,
                   RngStream& rng, const GlassoOptions& opts) {
    check_grid(lambdas);
    const auto folds = thinned_cv_folds(s_n, n, k, rng);
    CvCurve curve{CvMode::Thinned, lambdas, std::vector<double>(lambdas.size(), 0.0)};
    for (const auto& fold : folds) accumulate_fold(PsdMatrix(fold.train), fold.test, lambdas, opts, curve);
    curve.selected = select_minimizer(curve.losses);
    return curve;
}

}  // namespace wthin
