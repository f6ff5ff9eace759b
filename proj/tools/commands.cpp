#include "commands.hpp"

#include "wthin/errors.hpp"
#include "wthin/matrix_io.hpp"
#include "wthin/samplers.hpp"
#include "wthin/stats_tests.hpp"
#include "wthin/thinning.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

namespace wthin::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char* kManifestVersion = "1";

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw Error(ErrorCode::Io, "cannot create output directory " + dir.string());
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

std::string json_text(const json& j) { return j.dump(2) + "\n"; }

const char* pass_label(const CellResult& c) {
    switch (c.status) {
        case CellStatus::Pass: return "1";
        case CellStatus::Fail: return "0";
        case CellStatus::Degenerate: return "degenerate";
    }
    return "?";
}

std::string grid_csv(const MarginalGrid& grid) {
    std::ostringstream os;
    os << "row,col,ks_stat,critical,pass\n";
    for (const auto& c : grid.cells) {
        os << c.row + 1 << ',' << c.col + 1 << ',';
        if (c.status == CellStatus::Degenerate) os << "NA,NA,";
        else os << format_double(c.ks.statistic) << ',' << format_double(c.ks.critical) << ',';
        os << pass_label(c) << '\n';
    }
    return os.str();
}

json grid_json(const MarginalGrid& grid) {
    json cells = json::array();
    for (const auto& c : grid.cells) {
        json cell{{"row", c.row + 1}, {"col", c.col + 1}};
        if (c.status == CellStatus::Degenerate) {
            cell["ks_stat"] = nullptr;
            cell["critical"] = nullptr;
            cell["pass"] = "degenerate";
        } else {
            cell["ks_stat"] = c.ks.statistic;
            cell["critical"] = c.ks.critical;
            cell["pass"] = c.status == CellStatus::Pass;
        }
        cells.push_back(std::move(cell));
    }
    return json{{"rows", grid.rows},
                {"cols", grid.cols},
                {"family_alpha", grid.family_alpha},
                {"cell_alpha", grid.cell_alpha},
                {"cells", std::move(cells)}};
}

void write_grid(const RunConfig& cfg, const std::string& stem, const MarginalGrid& grid) {
    if (cfg.format == OutputFormat::Json) write_text(cfg.out_dir / (stem + ".json"), json_text(grid_json(grid)));
    else write_text(cfg.out_dir / (stem + ".csv"), grid_csv(grid));
}

struct HistogramRow {
    std::string variant;
    Eigen::Index row, col;
    int bin;
    double lo, hi;
    std::int64_t count;
};

void append_histograms(const std::string& variant, const ReplicateSamples& s, const Eigen::VectorXd& mu,
                       const PsdMatrix& sigma, int bins, std::vector<HistogramRow>& rows) {
    for (Eigen::Index i = 0; i < s.rows; ++i) {
        for (Eigen::Index j = 0; j < s.cols; ++j) {
            const double sd = std::sqrt(std::max(sigma.matrix()(j, j), 0.0));
            const double half = sd > 0.0 ? 5.0 * sd : 1.0;
            const double lo = mu(j) - half;
            const double hi = mu(j) + half;
            const Eigen::VectorXd col = s.draws.col(i * s.cols + j);
            const auto counts = histogram(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())),
                                          bins, lo, hi);
            const double width = (hi - lo) / bins;
            for (int b = 0; b < bins; ++b) {
                rows.push_back({variant, i + 1, j + 1, b, lo + b * width, lo + (b + 1) * width,
                                counts[static_cast<std::size_t>(b)]});
            }
        }
    }
}

void write_histograms(const RunConfig& cfg, const std::string& stem, const std::vector<HistogramRow>& rows) {
    if (cfg.format == OutputFormat::Json) {
        json arr = json::array();
        for (const auto& r : rows) {
            arr.push_back({{"variant", r.variant}, {"row", r.row}, {"col", r.col}, {"bin", r.bin},
                           {"lo", r.lo}, {"hi", r.hi}, {"count", r.count}});
        }
        write_text(cfg.out_dir / (stem + ".json"), json_text(arr));
        return;
    }
    std::ostringstream os;
    os << "variant,row,col,bin,lo,hi,count\n";
    for (const auto& r : rows) {
        os << r.variant << ',' << r.row << ',' << r.col << ',' << r.bin << ',' << format_double(r.lo) << ','
           << format_double(r.hi) << ',' << r.count << '\n';
    }
    write_text(cfg.out_dir / (stem + ".csv"), os.str());
}

PsdMatrix load_sigma(const RunConfig& cfg) {
    if (cfg.sigma_path) {
        const PsdMatrix s(read_csv_matrix(*cfg.sigma_path));
        return s;
    }
    if (cfg.p < 1) throw Error(ErrorCode::InvalidSize, "--p must be >= 1");
    return PsdMatrix(toeplitz_inverse_distance(cfg.p));
}

bool check_reps(const RunConfig& cfg, std::ostream& log) {
    if (cfg.reps < 1000) {
        log << "error: --reps " << cfg.reps
            << " is too small; the asymptotic 1% KS critical value needs at least 1000 replications\n";
        return false;
    }
    return true;
}

void report_grid(std::ostream& log, const std::string& label, const MarginalGrid& g) {
    log << label << ": " << g.failures() << " of " << (g.rows * g.cols - g.degenerate())
        << " cells fail KS at per-cell level " << g.cell_alpha;
    if (g.degenerate() > 0) log << " (" << g.degenerate() << " degenerate cells skipped)";
    log << '\n';
}

}  // namespace

std::vector<double> parse_lambda_grid(const std::string& spec) {
    if (spec == "default") return default_lambda_grid();
    std::vector<double> grid;
    std::string_view rest = spec;
    while (true) {
        const auto comma = rest.find(',');
        const std::string_view field = rest.substr(0, comma);
        double v = 0.0;
        const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
        if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size()) {
            throw Error(ErrorCode::Parse, "bad lambda grid entry '" + std::string(field) + "'");
        }
        grid.push_back(v);
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] >= 0.0) || (i > 0 && !(grid[i] > grid[i - 1]))) {
            throw Error(ErrorCode::Parse, "lambda grid must be nonnegative and strictly increasing");
        }
    }
    return grid;
}

Eigen::MatrixXd three_block_precision() {
    Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(10, 10);
    omega.block(0, 0, 4, 4) = 0.5 * Eigen::MatrixXd::Identity(4, 4) + 0.5 * Eigen::MatrixXd::Ones(4, 4);
    omega.block(4, 4, 4, 4) = 0.75 * Eigen::MatrixXd::Identity(4, 4) + 0.25 * Eigen::MatrixXd::Ones(4, 4);
    omega.block(8, 8, 2, 2) = Eigen::MatrixXd::Identity(2, 2);
    return omega;
}

std::vector<RealizationCurves> simulate_glasso_cv(std::uint64_t seed, int realizations, Eigen::Index n, int folds,
                                                  const std::vector<double>& lambdas, const GlassoOptions& opts) {
    const Eigen::MatrixXd omega = three_block_precision();
    const PsdMatrix sigma(SymmetricMatrix(omega.inverse()).matrix());
    const Eigen::VectorXd mu = Eigen::VectorXd::Zero(sigma.dim());
    std::vector<RealizationCurves> out;
    for (int r = 0; r < realizations; ++r) {
        RngStream rng(seed, static_cast<std::uint64_t>(r));
        const DataMatrix z = sample_matrix_normal(rng, mu, n, sigma);
        const PsdMatrix s_n(sample_covariance(z));
        RealizationCurves rc{r, cv_sample_split(z, folds, lambdas, opts), cv_thinned(s_n, n, folds, lambdas, rng, opts)};
        out.push_back(std::move(rc));
    }
    return out;
}

int cmd_verify_alg1(const RunConfig& cfg, std::ostream& log) {
    if (!check_reps(cfg, log)) return kExitFailure;
    if (cfg.n < 1) {
        log << "error: --n must be >= 1\n";
        return kExitFailure;
    }
    const PsdMatrix sigma = load_sigma(cfg);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(sigma.dim());
    ensure_dir(cfg.out_dir);

    const auto haar = collect_alg1(cfg.reps, cfg.n, sigma, cfg.seed, RootKind::Haar);
    const auto control = collect_alg1(cfg.reps, cfg.n, sigma, cfg.seed, RootKind::EigenRoot);
    const MarginalGrid haar_grid = marginal_grid(haar, zero, sigma);
    const MarginalGrid control_grid = marginal_grid(control, zero, sigma);

    write_grid(cfg, "alg1_haar_marginals", haar_grid);
    write_grid(cfg, "alg1_eigenroot_marginals", control_grid);
    std::vector<HistogramRow> hist;
    append_histograms("haar", haar, zero, sigma, cfg.histogram_bins, hist);
    append_histograms("eigenroot", control, zero, sigma, cfg.histogram_bins, hist);
    write_histograms(cfg, "alg1_histograms", hist);

    report_grid(log, "haar root", haar_grid);
    report_grid(log, "eigen root D V^T (negative control)", control_grid);
    const bool ok = haar_grid.all_pass() && control_grid.failures() > 0;
    log << (ok ? "PASS" : "FAIL") << ": Haar root marginals "
        << (haar_grid.all_pass() ? "all normal" : "NOT all normal") << "; negative control "
        << (control_grid.failures() > 0 ? "rejected" : "NOT rejected") << '\n';
    return ok ? kExitOk : kExitFailure;
}

int cmd_verify_alg2(const RunConfig& cfg, std::ostream& log) {
    if (!check_reps(cfg, log)) return kExitFailure;
    if (cfg.n < 2) {
        log << "error: --n must be >= 2; the mean-preserving decomposition centres n rows and needs n > rank\n";
        return kExitFailure;
    }
    const PsdMatrix sigma = load_sigma(cfg);
    Eigen::VectorXd mu(sigma.dim());
    if (cfg.mu_path) {
        mu = read_csv_vector(*cfg.mu_path);
        if (mu.size() != sigma.dim()) {
            log << "error: --mu has length " << mu.size() << " but Sigma is " << sigma.dim() << "x" << sigma.dim()
                << '\n';
            return kExitFailure;
        }
    } else {
        for (Eigen::Index j = 0; j < mu.size(); ++j) mu(j) = static_cast<double>(j + 1);
    }
    ensure_dir(cfg.out_dir);

    const auto samples = collect_alg2(cfg.reps, cfg.n, mu, sigma, cfg.seed);
    const MarginalGrid grid = marginal_grid(samples, mu, sigma);
    write_grid(cfg, "alg2_marginals", grid);
    std::vector<HistogramRow> hist;
    append_histograms("alg2", samples, mu, sigma, cfg.histogram_bins, hist);
    write_histograms(cfg, "alg2_histograms", hist);

    report_grid(log, "mean-preserving root", grid);
    const bool ok = grid.all_pass();
    log << (ok ? "PASS" : "FAIL") << '\n';
    return ok ? kExitOk : kExitFailure;
}

int cmd_glasso_cv(const RunConfig& cfg, std::ostream& log) {
    const auto lambdas = parse_lambda_grid(cfg.lambda_grid);
    if (cfg.realizations < 1) {
        log << "error: --realizations must be >= 1\n";
        return kExitFailure;
    }
    const int sources = int(cfg.simulate_paper) + int(cfg.data_path.has_value()) + int(cfg.cov_path.has_value());
    if (sources != 1) {
        log << "error: supply exactly one of --simulate-paper, --data, or --cov (with --n)\n";
        return kExitFailure;
    }

    std::vector<RealizationCurves> runs;
    if (cfg.simulate_paper) {
        if (cfg.n - 1 < 2 * static_cast<Eigen::Index>(cfg.folds)) {
            log << "error: K = " << cfg.folds << " too large for n = " << cfg.n << " (need n - 1 >= 2K)\n";
            return kExitFailure;
        }
        runs = simulate_glasso_cv(cfg.seed, cfg.realizations, cfg.n, cfg.folds, lambdas, cfg.glasso);
    } else {
        std::optional<DataMatrix> z;
        std::optional<PsdMatrix> s_n;
        Eigen::Index n = cfg.n;
        if (cfg.data_path) {
            z = read_csv_matrix(*cfg.data_path);
            n = z->rows();
            if (n < 2) {
                log << "error: --data needs at least two rows\n";
                return kExitFailure;
            }
            s_n.emplace(sample_covariance(*z));
        } else {
            s_n.emplace(read_csv_matrix(*cfg.cov_path));
        }
        if (n - 1 < 2 * static_cast<Eigen::Index>(cfg.folds)) {
            log << "error: K = " << cfg.folds << " too large for n = " << n << " (need n - 1 >= 2K)\n";
            return kExitFailure;
        }
        std::optional<CvCurve> ss;
        if (z) ss = cv_sample_split(*z, cfg.folds, lambdas, cfg.glasso);
        for (int r = 0; r < cfg.realizations; ++r) {
            RngStream rng(cfg.seed, static_cast<std::uint64_t>(r));
            runs.push_back({r, ss, cv_thinned(*s_n, n, cfg.folds, lambdas, rng, cfg.glasso)});
        }
    }

    ensure_dir(cfg.out_dir);
    int fits = 0;
    int nonconverged = 0;
    json curves = json::array();
    std::ostringstream csv;
    csv << "mode,realization,lambda,loss,selected\n";
    auto emit = [&](const char* mode, int realization, const CvCurve& c) {
        fits += c.fits;
        nonconverged += c.nonconverged;
        for (std::size_t i = 0; i < c.lambdas.size(); ++i) {
            csv << mode << ',' << realization + 1 << ',' << format_double(c.lambdas[i]) << ','
                << format_double(c.losses[i]) << ',' << (i == c.selected ? 1 : 0) << '\n';
        }
        curves.push_back({{"mode", mode},
                          {"realization", realization + 1},
                          {"lambdas", c.lambdas},
                          {"losses", c.losses},
                          {"selected_index", c.selected},
                          {"selected_lambda", c.selected_lambda()}});
        log << mode << " realization " << realization + 1 << ": argmin lambda = " << c.selected_lambda() << '\n';
    };
    for (const auto& run : runs) {
        if (run.sample_split) emit("SS", run.realization, *run.sample_split);
        emit("DT", run.realization, run.thinned);
    }
    if (cfg.format == OutputFormat::Json) write_text(cfg.out_dir / "glasso_cv.json", json_text(curves));
    else write_text(cfg.out_dir / "glasso_cv.csv", csv.str());

    log << nonconverged << " of " << fits << " graphical lasso fits did not converge\n";
    if (20 * nonconverged > fits) {
        log << "FAIL: more than 5% of fits did not converge\n";
        return kExitFailure;
    }
    return kExitOk;
}

int cmd_thin(const RunConfig& cfg, std::ostream& log) {
    if (!cfg.cov_path) {
        log << "error: --cov is required\n";
        return kExitFailure;
    }
    const Eigen::Index n = cfg.n;
    const bool unknown_mean = cfg.mean_path.has_value();
    const PsdMatrix cov(read_csv_matrix(*cfg.cov_path));
    std::optional<Eigen::VectorXd> mean;
    if (unknown_mean) {
        mean = read_csv_vector(*cfg.mean_path);
        if (mean->size() != cov.dim()) {
            log << "error: --mean has length " << mean->size() << " but --cov is " << cov.dim() << "x" << cov.dim()
                << '\n';
            return kExitFailure;
        }
    }
    if (n < 1 || (unknown_mean && n < 2)) {
        log << "error: --n must be >= " << (unknown_mean ? 2 : 1) << '\n';
        return kExitFailure;
    }
    if (unknown_mean && cov.rank() > n - 1) {
        log << "error: precondition violated: rank(cov) = " << cov.rank() << " exceeds n - 1 = " << n - 1
            << "; the mean-preserving decomposition needs n > rank((n-1) S_n)\n";
        return kExitFailure;
    }
    if (!unknown_mean && cov.rank() > n) {
        log << "error: precondition violated: rank(cov) = " << cov.rank() << " exceeds n = " << n << '\n';
        return kExitFailure;
    }

    RngStream rng(cfg.seed, 0);
    const double scale = unknown_mean ? static_cast<double>(n - 1) : static_cast<double>(n);
    const PsdMatrix w(scale * cov.matrix(), cov.rank_tol());
    std::optional<RngStream> shuffle_rng;
    if (cfg.shuffle) shuffle_rng.emplace(cfg.seed, 1);
    const Partition part = partition_folds(n, cfg.folds, std::nullopt, shuffle_rng ? &*shuffle_rng : nullptr);

    std::vector<FoldStatistics> folds;
    double cov_err = 0.0;
    double mean_err = 0.0;
    if (unknown_mean) {
        const DataMatrix x = decompose_with_mean(w, *mean, n, rng);
        folds = fold_statistics_unknown_mean(x, part);
        const SummaryStats back = recombine(folds);
        cov_err = (back.covariance.matrix() - cov.matrix()).norm() / std::max(cov.matrix().norm(), 1e-300);
        mean_err = (back.mean - *mean).cwiseAbs().maxCoeff();
    } else {
        const DataMatrix x = decompose_psd(w, n, rng);
        folds = fold_statistics_known_mean(x, part);
        const Eigen::MatrixXd back = recombine_known_mean(folds);
        cov_err = (back - cov.matrix()).norm() / std::max(cov.matrix().norm(), 1e-300);
    }

    ensure_dir(cfg.out_dir);
    std::vector<Eigen::Index> sizes;
    json folds_json = json::array();
    for (const auto& f : folds) {
        sizes.push_back(f.count);
        const std::string stem = "fold_" + std::to_string(f.fold_id + 1);
        if (cfg.format == OutputFormat::Json) {
            json entry{{"fold", f.fold_id + 1}, {"count", f.count}};
            std::vector<std::vector<double>> rows;
            for (Eigen::Index i = 0; i < f.covariance.rows(); ++i) {
                auto& row = rows.emplace_back();
                for (Eigen::Index j = 0; j < f.covariance.cols(); ++j) row.push_back(f.covariance(i, j));
            }
            entry["covariance"] = rows;
            if (f.mean) entry["mean"] = std::vector<double>(f.mean->data(), f.mean->data() + f.mean->size());
            folds_json.push_back(std::move(entry));
        } else {
            write_csv_matrix(cfg.out_dir / (stem + "_cov.csv"), f.covariance);
            if (f.mean) write_csv_matrix(cfg.out_dir / (stem + "_mean.csv"), f.mean->transpose());
        }
    }
    if (cfg.format == OutputFormat::Json) write_text(cfg.out_dir / "folds.json", json_text(folds_json));

    json manifest{
        {"version", kManifestVersion},
        {"subcommand", "thin"},
        {"seed", cfg.seed},
        {"params",
         {{"n", n},
          {"p", cov.dim()},
          {"K", cfg.folds},
          {"mode", unknown_mean ? "unknown-mean" : "known-mean"},
          {"partition", cfg.shuffle ? "shuffled (stream 1)" : "contiguous"},
          {"decomposition_stream", 0},
          {"format", cfg.format == OutputFormat::Json ? "json" : "csv"}}},
        {"fold_sizes", sizes},
        {"divisor_convention",
         unknown_mean ? "input cov is S_n with divisor n-1 and is scaled by n-1; fold cov uses divisor |C_k|-1 "
                        "around the fold mean"
                      : "input cov is the known-mean second moment with divisor n and is scaled by n; fold cov is "
                        "sum X_i X_i^T / |C_k| (uncentred)"},
        {"recombination", {{"cov_relative_frobenius_error", cov_err}, {"mean_max_abs_error", mean_err}}},
    };
    write_text(cfg.out_dir / "manifest.json", json_text(manifest));

    log << "wrote " << folds.size() << " folds to " << cfg.out_dir.string() << "; recombination error " << cov_err
        << '\n';
    if (cov_err > 1e-8 || mean_err > 1e-8) {
        log << "FAIL: recombination check exceeded 1e-8\n";
        return kExitFailure;
    }
    return kExitOk;
}

int run(const RunConfig& cfg, std::ostream& log) {
    try {
        if (cfg.subcommand == "verify-alg1") return cmd_verify_alg1(cfg, log);
        if (cfg.subcommand == "verify-alg2") return cmd_verify_alg2(cfg, log);
        if (cfg.subcommand == "glasso-cv") return cmd_glasso_cv(cfg, log);
        if (cfg.subcommand == "thin") return cmd_thin(cfg, log);
        log << "error: unknown subcommand '" << cfg.subcommand << "'\n";
        return kExitEnvironment;
    } catch (const Error& e) {
        log << "error: " << e.what() << '\n';
        return (e.code() == ErrorCode::Io || e.code() == ErrorCode::Parse) ? kExitEnvironment : kExitFailure;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        return kExitEnvironment;
    }
}

}  // namespace wthin::cli
