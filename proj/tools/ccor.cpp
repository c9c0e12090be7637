// Command-line front door: reconstruct pseudo-counts, assemble within-study
// covariance matrices, fit dose-response trends, run the reference-group
// simulation, and diagnose solvability.
//
// Exit codes: 0 success, 1 validation/IO error, 2 infeasible problem.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ccor/ccor.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitInfeasible = 2;

struct StudyFlags {
    std::string measure = "or";
    double total_cases = -1.0;
    double p = -1.0;
    double z = -1.0;
    bool se = false;
    bool ratios = false;
};

void add_study_flags(CLI::App* cmd, StudyFlags& f) {
    cmd->add_option("--measure", f.measure, "Effect measure: or|rr (CSV inputs)")
        ->check(CLI::IsMember({"or", "rr"}));
    cmd->add_option("--total-cases", f.total_cases, "Total cases (CSV inputs)");
    cmd->add_option("--p", f.p, "Unexposed controls : total controls (CSV inputs)");
    cmd->add_option("--z", f.z, "Total controls : total cases (CSV inputs)");
    cmd->add_flag("--se", f.se, "Variance column/array holds standard errors");
    cmd->add_flag("--ratios", f.ratios, "Estimate column holds OR/RR instead of logs (CSV)");
}

ccor::io::CsvOptions csv_options(const StudyFlags& f) {
    ccor::io::CsvOptions o;
    o.measure = ccor::io::measure_from_string(f.measure);
    if (f.total_cases > 0) o.total_cases = f.total_cases;
    if (f.p > 0) o.p = f.p;
    if (f.z > 0) o.z = f.z;
    o.variances_are_se = f.se;
    o.estimates_are_ratios = f.ratios;
    return o;
}

void emit(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-")
        std::cout << content;
    else
        ccor::io::write_file(path, content);
}

std::vector<double> exposure_differences(const ccor::StudyInput& s) {
    const std::size_t n = s.n_levels();
    if (s.exposures.size() == n + 1) {
        std::vector<double> x(n);
        for (std::size_t i = 0; i < n; ++i) x[i] = s.exposures[i + 1] - s.exposures[0];
        return x;
    }
    if (s.exposures.size() == n) return s.exposures;
    throw ccor::ValidationError({{"MissingRequiredField",
                                  "trend fitting requires exposures (reference first)", -1}});
}

void print_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Within-study correlation correction for dose-response meta-analysis"};
    app.require_subcommand(1);

    // ---- gl ----
    auto* gl_cmd = app.add_subcommand("gl", "Reconstruct pseudo-counts from group totals");
    std::string gl_input, gl_output, gl_solver = "convex";
    double gl_tol = 1e-10;
    int gl_maxit = 100;
    StudyFlags gl_flags;
    gl_cmd->add_option("--input", gl_input, "Study JSON/CSV")->required();
    gl_cmd->add_option("--output", gl_output, "Counts JSON path (default stdout)");
    gl_cmd->add_option("--solver", gl_solver, "convex|classic")
        ->check(CLI::IsMember({"convex", "classic"}));
    gl_cmd->add_option("--tol", gl_tol, "Gradient tolerance (convex solver)");
    gl_cmd->add_option("--max-iter", gl_maxit, "Iteration cap");
    add_study_flags(gl_cmd, gl_flags);

    // ---- hamling ----
    auto* ham_cmd = app.add_subcommand("hamling", "Reconstruct pseudo-counts from variances, p, z");
    std::string ham_input, ham_output;
    double ham_tol = 1e-10;
    int ham_maxit = 500;
    std::vector<double> ham_init;
    StudyFlags ham_flags;
    ham_cmd->add_option("--input", ham_input, "Study JSON/CSV")->required();
    ham_cmd->add_option("--output", ham_output, "Counts JSON path (default stdout)");
    ham_cmd->add_option("--tol", ham_tol, "Residual tolerance");
    ham_cmd->add_option("--max-iter", ham_maxit, "Iteration cap");
    ham_cmd->add_option("--init", ham_init, "Override initialization a0 b0")->expected(2);
    add_study_flags(ham_cmd, ham_flags);

    // ---- cov ----
    auto* cov_cmd = app.add_subcommand("cov", "Assemble a within-study covariance matrix");
    std::string cov_input, cov_counts, cov_output, cov_format = "json";
    StudyFlags cov_flags;
    cov_cmd->add_option("--input", cov_input, "Study JSON/CSV (variances, labels)")->required();
    cov_cmd->add_option("--counts", cov_counts, "Counts JSON from gl/hamling")->required();
    cov_cmd->add_option("--output", cov_output, "Output path (default stdout)");
    cov_cmd->add_option("--format", cov_format, "json|csv")->check(CLI::IsMember({"json", "csv"}));
    add_study_flags(cov_cmd, cov_flags);

    // ---- fit ----
    auto* fit_cmd = app.add_subcommand("fit", "Fit the dose-response slope");
    std::string fit_input, fit_cov, fit_counts, fit_output, fit_method = "gls";
    bool fit_intercept = false;
    StudyFlags fit_flags;
    fit_cmd->add_option("--input", fit_input, "Study JSON/CSV")->required();
    fit_cmd->add_option("--method", fit_method, "gls|wls|ols")
        ->check(CLI::IsMember({"gls", "wls", "ols"}));
    fit_cmd->add_option("--cov", fit_cov, "Covariance JSON (gls)");
    fit_cmd->add_option("--counts", fit_counts, "Counts JSON; builds the matrix (gls)");
    fit_cmd->add_option("--output", fit_output, "Fit JSON path (default stdout)");
    fit_cmd->add_flag("--intercept", fit_intercept, "Free intercept instead of through-origin");
    add_study_flags(fit_cmd, fit_flags);

    // ---- simulate ----
    auto* sim_cmd = app.add_subcommand("simulate", "Reference-group correlation simulation");
    ccor::sim::SimConfig cfg;
    std::string sim_out, sim_samples;
    sim_cmd->add_option("--seed", cfg.seed, "RNG seed");
    sim_cmd->add_option("--replications", cfg.replications, "Replications");
    sim_cmd->add_option("--beta", cfg.beta_true, "True slope");
    sim_cmd->add_option("--n0", cfg.n0, "Reference group size");
    sim_cmd->add_option("--group-sizes", cfg.group_sizes, "Alternative group sizes");
    sim_cmd->add_option("--sigma", cfg.sigma, "Group standard deviations, reference first");
    sim_cmd->add_option("--exposures", cfg.exposures, "Exposure levels");
    sim_cmd->add_option("--out", sim_out, "Summary JSON path (default stdout)");
    sim_cmd->add_option("--samples", sim_samples, "Per-replication CSV path");

    // ---- check ----
    auto* chk_cmd = app.add_subcommand("check", "Solvability diagnostics");
    std::string chk_input, chk_output;
    StudyFlags chk_flags;
    chk_cmd->add_option("--input", chk_input, "Study JSON/CSV")->required();
    chk_cmd->add_option("--output", chk_output, "Diagnostics JSON path (default stdout)");
    add_study_flags(chk_cmd, chk_flags);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gl_cmd) {
            std::vector<std::string> warnings;
            ccor::StudyInput study = ccor::validate_study(
                ccor::io::load_study(gl_input, csv_options(gl_flags)), ccor::Method::gl,
                &warnings);
            print_warnings(warnings);
            ccor::gl::GlOptions opts;
            opts.tol_grad = gl_tol;
            opts.max_iter = gl_maxit;
            const ccor::gl::GlSolve r = gl_solver == "classic"
                                            ? ccor::gl::solve_classic(study, opts)
                                            : ccor::gl::solve_convex(study, opts);
            if (r.report.termination != ccor::Termination::converged) {
                std::cerr << "gl: " << to_string(r.report.termination) << ": "
                          << r.report.diagnostic << "\n";
                return kExitInfeasible;
            }
            emit(gl_output, ccor::io::counts_to_json(*r.counts, r.report).dump(1) + "\n");
            return kExitOk;
        }

        if (*ham_cmd) {
            std::vector<std::string> warnings;
            ccor::StudyInput study = ccor::validate_study(
                ccor::io::load_study(ham_input, csv_options(ham_flags)), ccor::Method::hamling,
                &warnings);
            print_warnings(warnings);
            ccor::hamling::HamlingOptions opts;
            opts.tol_residual = ham_tol;
            opts.max_iter = ham_maxit;
            if (ham_init.size() == 2) opts.init = {ham_init[0], ham_init[1]};
            const ccor::hamling::HamlingSolve r = ccor::hamling::solve(study, opts);
            if (r.report.termination != ccor::Termination::converged) {
                std::cerr << "hamling: " << to_string(r.report.termination) << ": "
                          << r.report.diagnostic << "\n"
                          << "  last iterate a0=" << r.a0 << " b0=" << r.b0
                          << " residual=(" << r.f1 << ", " << r.f2 << ")\n";
                return kExitInfeasible;
            }
            emit(ham_output, ccor::io::counts_to_json(*r.counts, r.report).dump(1) + "\n");
            return kExitOk;
        }

        if (*cov_cmd) {
            const ccor::StudyInput study = ccor::validate_study(
                ccor::io::load_study(cov_input, csv_options(cov_flags)));
            std::ifstream cf(cov_counts);
            if (!cf) throw std::runtime_error("cannot open counts file: " + cov_counts);
            ccor::io::json cj;
            cf >> cj;
            const ccor::PseudoCounts counts = ccor::io::counts_from_json(cj);
            const auto cov = ccor::covariance::covariance_matrix(counts, study.variances);
            std::vector<double> labels = study.exposures;
            if (labels.size() == study.n_levels() + 1) labels.erase(labels.begin());
            if (cov_format == "csv")
                emit(cov_output, ccor::io::covariance_to_csv(cov.matrix, labels));
            else
                emit(cov_output, ccor::io::covariance_to_json(cov, labels).dump(1) + "\n");
            return kExitOk;
        }

        if (*fit_cmd) {
            const ccor::StudyInput study = ccor::validate_study(
                ccor::io::load_study(fit_input, csv_options(fit_flags)));
            const std::vector<double> x = exposure_differences(study);
            ccor::trend::TrendFit fit;
            if (fit_method == "wls") {
                fit = ccor::trend::wls_fit(x, study.log_estimates, study.variances,
                                           fit_intercept);
            } else if (fit_method == "ols") {
                fit = ccor::trend::ols_fit(x, study.log_estimates, fit_intercept);
            } else {
                ccor::Matrix C;
                if (!fit_cov.empty()) {
                    std::ifstream vf(fit_cov);
                    if (!vf) throw std::runtime_error("cannot open covariance file: " + fit_cov);
                    ccor::io::json vj;
                    vf >> vj;
                    const auto rows = vj.at("covariance").get<std::vector<std::vector<double>>>();
                    C = ccor::Matrix(rows.size(), rows.size());
                    for (std::size_t i = 0; i < rows.size(); ++i)
                        for (std::size_t j = 0; j < rows.size(); ++j) C(i, j) = rows[i][j];
                } else if (!fit_counts.empty()) {
                    std::ifstream cf(fit_counts);
                    if (!cf) throw std::runtime_error("cannot open counts file: " + fit_counts);
                    ccor::io::json cj;
                    cf >> cj;
                    const auto counts = ccor::io::counts_from_json(cj);
                    C = ccor::covariance::covariance_matrix(counts, study.variances).matrix;
                } else {
                    throw ccor::ValidationError({{"MissingRequiredField",
                                                  "gls needs --cov or --counts", -1}});
                }
                fit = ccor::trend::gls_fit(x, study.log_estimates, C, fit_intercept);
            }
            emit(fit_output, ccor::io::fit_to_json(fit).dump(1) + "\n");
            return kExitOk;
        }

        if (*sim_cmd) {
            cfg.keep_samples = true;
            const ccor::sim::SimSummary s = ccor::sim::run_trend_simulation(cfg);
            if (!sim_samples.empty())
                ccor::io::write_file(sim_samples, ccor::io::samples_to_csv(s));
            emit(sim_out, ccor::io::sim_to_json(cfg, s).dump(1) + "\n");
            return kExitOk;
        }

        if (*chk_cmd) {
            std::vector<std::string> warnings;
            const ccor::StudyInput study = ccor::validate_study(
                ccor::io::load_study(chk_input, csv_options(chk_flags)), ccor::Method::hamling,
                &warnings);
            print_warnings(warnings);
            const auto in = ccor::hamling::input_from_study(study);
            double vbar = 0.0, vmin = in.variances[0], vmax = in.variances[0];
            for (double v : in.variances) {
                vbar += v / static_cast<double>(in.n_levels());
                vmin = std::min(vmin, v);
                vmax = std::max(vmax, v);
            }
            const bool equivariant = (vmax - vmin) <= 1e-12 * vmax;
            const auto summary = ccor::hamling::summarize(in.ratios, vbar);

            ccor::io::json j;
            j["measure"] = to_string(in.measure);
            j["n"] = summary.n;
            j["r1"] = ccor::io::round_sig(summary.r1);
            j["r2"] = ccor::io::round_sig(summary.r2);
            j["p"] = ccor::io::round_sig(in.p);
            j["z"] = ccor::io::round_sig(in.z);
            j["equivariant"] = equivariant;

            bool infeasible = false;
            if (in.measure == ccor::EffectMeasure::odds_ratio) {
                const auto cf = ccor::hamling::equivariant_or(summary.n, in.p, in.z,
                                                              summary.r1, summary.r2, vbar);
                j["D"] = ccor::io::round_sig(cf.D);
                j["solvable"] = true;
                j["note"] = "the odds-ratio system has a positive solution for any "
                            "positive variances";
                if (equivariant) {
                    j["closed_form"] = {{"a0", ccor::io::round_sig(cf.a0)},
                                        {"b0", ccor::io::round_sig(cf.b0)},
                                        {"c", ccor::io::round_sig(cf.c)}};
                }
            } else {
                const auto rr = ccor::hamling::equivariant_rr(summary.n, in.p, in.z,
                                                              summary.r1, summary.r2, vbar);
                j["D"] = ccor::io::round_sig(rr.D);
                j["condition_z"] = rr.cond_z_ge_one;
                j["condition_r2"] = rr.cond_r2_bound;
                if (rr.solution) {
                    j["solvable"] = true;
                    if (equivariant)
                        j["closed_form"] = {{"a0", ccor::io::round_sig(rr.solution->a0)},
                                            {"b0", ccor::io::round_sig(rr.solution->b0)},
                                            {"c", ccor::io::round_sig(rr.solution->c)}};
                } else {
                    j["solvable"] = false;
                    j["note"] = rr.reason + "; check the inputs R, V, p, z or use the "
                                "group-total reconstruction";
                    infeasible = true;
                }
                if (!equivariant)
                    j["note_equivariance"] =
                        "variances differ; the discriminant uses their mean and is "
                        "advisory rather than a certificate";
            }
            emit(chk_output, j.dump(1) + "\n");
            if (infeasible) {
                std::cerr << "check: infeasible: D = " << ccor::io::round_sig(j["D"].get<double>())
                          << "\n";
                return kExitInfeasible;
            }
            return kExitOk;
        }
    } catch (const ccor::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}
