#include "commands.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

void add_common(CLI::App* sub, wthin::cli::RunConfig& cfg) {
    sub->add_option("--seed", cfg.seed, "Base seed; replication r uses stream id r")->capture_default_str();
    sub->add_option("--out", cfg.out_dir, "Output directory")->capture_default_str();
    sub->add_option("--format", cfg.format, "Report format")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, wthin::cli::OutputFormat>{{"csv", wthin::cli::OutputFormat::Csv},
                                                            {"json", wthin::cli::OutputFormat::Json}},
            CLI::ignore_case))
        ->default_str("csv");
}

void add_verify(CLI::App* sub, wthin::cli::RunConfig& cfg) {
    sub->add_option("--reps", cfg.reps, "Replications (>= 1000)")->capture_default_str();
    sub->add_option("--n", cfg.n, "Rows of each decomposed matrix")->capture_default_str();
    sub->add_option("--p", cfg.p, "Dimension of the default Toeplitz Sigma_ij = 1/(1+|i-j|)")->capture_default_str();
    sub->add_option("--sigma", cfg.sigma_path, "Headerless CSV covariance (overrides --p)");
    sub->add_option("--bins", cfg.histogram_bins, "Histogram bins per cell over mu_j +- 5 sd")->capture_default_str();
}

void add_glasso(CLI::App* sub, wthin::cli::RunConfig& cfg) {
    sub->add_option("--tol", cfg.glasso.tol, "Graphical lasso convergence tolerance")->capture_default_str();
    sub->add_option("--max-iter", cfg.glasso.max_iter, "Graphical lasso outer sweeps")->capture_default_str();
    sub->add_flag("!--no-penalize-diagonal", cfg.glasso.penalize_diagonal,
                  "Exclude the diagonal from the l1 penalty (default: penalised)");
    sub->add_flag("!--no-warm-start", cfg.glasso.warm_start, "Fit every (fold, lambda) from scratch");
}

}  // namespace

int main(int argc, char** argv) {
    using wthin::cli::RunConfig;
    CLI::App app{"Gaussian summary-statistic thinning: Wishart square roots, fold statistics and CV"};
    app.require_subcommand(1);

    RunConfig alg1_cfg;
    alg1_cfg.subcommand = "verify-alg1";
    auto* alg1 = app.add_subcommand("verify-alg1", "Marginal KS check of the Haar square root with a D V^T control");
    add_common(alg1, alg1_cfg);
    add_verify(alg1, alg1_cfg);

    RunConfig alg2_cfg;
    alg2_cfg.subcommand = "verify-alg2";
    auto* alg2 = app.add_subcommand("verify-alg2", "Marginal KS check of the mean-preserving square root");
    add_common(alg2, alg2_cfg);
    add_verify(alg2, alg2_cfg);
    alg2->add_option("--mu", alg2_cfg.mu_path, "Headerless CSV mean vector (default mu_j = j)");

    RunConfig cv_cfg;
    cv_cfg.subcommand = "glasso-cv";
    cv_cfg.n = 250;
    auto* cv = app.add_subcommand("glasso-cv", "Sample-splitting and thinned CV curves for the graphical lasso");
    add_common(cv, cv_cfg);
    add_glasso(cv, cv_cfg);
    cv->add_option("--n", cv_cfg.n, "Sample size (simulation, or the n behind --cov)")->capture_default_str();
    cv->add_option("--K", cv_cfg.folds, "Folds")->capture_default_str();
    cv->add_option("--lambdas", cv_cfg.lambda_grid,
                   "'default' (0 plus 41 log-spaced points on [1e-3, 0.2]) or a comma list")
        ->capture_default_str();
    cv->add_option("--data", cv_cfg.data_path, "Headerless CSV of observations (rows)");
    cv->add_option("--cov", cv_cfg.cov_path, "Headerless CSV sample covariance S_n (divisor n-1)");
    cv->add_flag("--simulate-paper", cv_cfg.simulate_paper,
                 "Simulate n rows, p = 10, three-block precision, zero mean");
    cv->add_option("--realizations", cv_cfg.realizations, "Repetitions; realization r uses stream id r")
        ->capture_default_str();

    RunConfig thin_cfg;
    thin_cfg.subcommand = "thin";
    auto* thin = app.add_subcommand("thin", "Split summary statistics into K independent fold statistics");
    add_common(thin, thin_cfg);
    thin->add_option("--cov", thin_cfg.cov_path,
                     "Headerless CSV covariance: S_n (divisor n-1) with --mean, otherwise the known-mean "
                     "second moment (divisor n)")
        ->required();
    thin->add_option("--n", thin_cfg.n, "Sample size behind --cov")->required();
    thin->add_option("--mean", thin_cfg.mean_path, "Headerless CSV sample mean; selects unknown-mean mode");
    thin->add_option("--K", thin_cfg.folds, "Folds")->capture_default_str();
    thin->add_flag("--shuffle", thin_cfg.shuffle, "Shuffle rows into folds (default: contiguous blocks)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return e.get_exit_code() == 0 ? code : wthin::cli::kExitEnvironment;
    }

    if (alg1->parsed()) return wthin::cli::run(alg1_cfg, std::cout);
    if (alg2->parsed()) return wthin::cli::run(alg2_cfg, std::cout);
    if (cv->parsed()) return wthin::cli::run(cv_cfg, std::cout);
    return wthin::cli::run(thin_cfg, std::cout);
}
