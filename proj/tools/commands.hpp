#pragma once

#include "wthin/glasso.hpp"
#include "wthin/linalg.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace wthin::cli {

enum class OutputFormat { Csv, Json };

/// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;      // statistical, convergence or precondition failure
inline constexpr int kExitEnvironment = 2;  // I/O or malformed input

struct RunConfig {
    std::string subcommand;
    std::uint64_t seed = 1;
    int reps = 10000;
    Eigen::Index n = 3;
    Eigen::Index p = 5;
    int folds = 10;
    std::string lambda_grid = "default";
    std::filesystem::path out_dir = ".";
    OutputFormat format = OutputFormat::Csv;

    std::optional<std::filesystem::path> sigma_path;
    std::optional<std::filesystem::path> mu_path;
    std::optional<std::filesystem::path> data_path;
    std::optional<std::filesystem::path> cov_path;
    std::optional<std::filesystem::path> mean_path;

    bool simulate_paper = false;
    int realizations = 10;
    bool shuffle = false;
    int histogram_bins = 40;
    GlassoOptions glasso;
};

/// "default" or a comma-separated strictly increasing list.
std::vector<double> parse_lambda_grid(const std::string& spec);

/// Precision matrix with diagonal blocks 0.5 I_4 + 0.5 11^T, 0.75 I_4 + 0.25 11^T
/// and I_2 (p = 10).
Eigen::MatrixXd three_block_precision();

struct RealizationCurves {
    int realization = 0;
    std::optional<CvCurve> sample_split;
    CvCurve thinned;
};

/// Simulated CV study: for each realization r (stream id r) draw n rows from
/// N(0, three_block_precision()^{-1}), then compute both loss curves.
std::vector<RealizationCurves> simulate_glasso_cv(std::uint64_t seed, int realizations, Eigen::Index n, int folds,
                                                  const std::vector<double>& lambdas, const GlassoOptions& opts);

int cmd_verify_alg1(const RunConfig& cfg, std::ostream& log);
int cmd_verify_alg2(const RunConfig& cfg, std::ostream& log);
int cmd_glasso_cv(const RunConfig& cfg, std::ostream& log);
int cmd_thin(const RunConfig& cfg, std::ostream& log);

/// Dispatches on cfg.subcommand and maps library errors onto exit codes.
int run(const RunConfig& cfg, std::ostream& log);

}  // namespace wthin::cli
