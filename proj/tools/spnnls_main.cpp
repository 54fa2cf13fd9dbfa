// Command-line front end: solve NNLS problems from Matrix Market files,
// generate test-problem families, and sweep condition numbers recording the
// relative solution error of the normal-equations and LSQR-refined paths.

#include <CLI11.hpp>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "spnnls/spnnls.hpp"

namespace {

constexpr int kExitUsage = 2;      // parse/IO/flag/spec errors
constexpr int kExitIteration = 3;  // pivoting hit its iteration budget
constexpr int kExitDimension = 4;

spnnls::SolveMode parse_mode(const std::string& name) {
    if (name == "normal") return spnnls::SolveMode::NormalEquationsOnly;
    if (name == "adaptive") return spnnls::SolveMode::Adaptive;
    return spnnls::SolveMode::LsqrFinal;
}

std::string format_double(double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

int run_solve(const std::string& matrix_path, const std::string& rhs_path,
              const std::string& mode_name, double zero_tol, std::size_t max_iter,
              const std::string& out_path, bool report) {
    const spnnls::SparseMatrix A = spnnls::read_matrix_market(matrix_path);
    const spnnls::DenseVector b = spnnls::read_vector(rhs_path);

    spnnls::SolverOptions opts;
    opts.mode = parse_mode(mode_name);
    opts.zero_tolerance = zero_tol;
    opts.max_iterations = max_iter;

    const spnnls::SolverResult result = spnnls::bpp_solve({A, b}, opts);

    if (!out_path.empty()) {
        spnnls::write_vector(out_path, result.x);
    } else {
        for (double e : result.x) std::cout << format_double(e) << "\n";
    }
    if (report) {
        std::cout << "objective            " << format_double(result.objective) << "\n";
        std::cout << "min_x                " << format_double(result.kkt.min_x) << "\n";
        std::cout << "min_y                " << format_double(result.kkt.min_y) << "\n";
        std::cout << "max_complementarity  " << format_double(result.kkt.max_complementarity)
                  << "\n";
        if (result.condition)
            std::cout << "condition_estimate   " << format_double(result.condition->kappa)
                      << "\n";
        else
            std::cout << "condition_estimate   n/a\n";
        std::cout << "pivot_iterations     " << result.pivot_iterations << "\n";
        std::cout << "refined_with_lsqr    " << (result.refined_with_lsqr ? "yes" : "no")
                  << "\n";
    }
    return 0;
}

int run_gen(const std::string& family, std::size_t m, std::size_t n, std::size_t dup,
            double cond, double density, std::uint64_t seed, const std::string& prefix) {
    spnnls::GeneratorSpec spec;
    spec.m = m;
    spec.n = n;
    spec.d = dup;
    spec.cond_target = cond;
    spec.density = density;
    spec.seed = seed;

    spnnls::GeneratedProblem generated;
    if (family == "p") {
        generated = spnnls::gen_p(spec);
    } else if (family == "sparse") {
        generated = spnnls::gen_random_sparse(spec);
    } else {
        throw spnnls::InvalidSpec("--family must be p or sparse");
    }

    spnnls::write_matrix_market(prefix + ".mtx", generated.problem.A);
    spnnls::write_vector(prefix + "_b.vec", generated.problem.b);
    if (generated.has_x_true) spnnls::write_vector(prefix + "_xtrue.vec", generated.x_true);
    return 0;
}

double relative_error_2norm(const spnnls::DenseVector& x, const spnnls::DenseVector& x_true) {
    double diff = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        diff += (x[i] - x_true[i]) * (x[i] - x_true[i]);
        ref += x_true[i] * x_true[i];
    }
    return std::sqrt(diff) / std::sqrt(ref);
}

/// One sweep measurement; missing errors mean the solver failed at that
/// conditioning and are written as empty CSV fields.
struct SweepRow {
    double cond = 0.0;
    std::optional<double> rel_err_normal;
    std::optional<double> rel_err_lsqr;
    std::size_t pivots = 0;
    std::uint64_t seed = 0;
};

std::string to_csv(const SweepRow& row) {
    std::string line = format_double(row.cond);
    line += ',';
    if (row.rel_err_normal) line += format_double(*row.rel_err_normal);
    line += ',';
    if (row.rel_err_lsqr) line += format_double(*row.rel_err_lsqr);
    line += ',';
    line += std::to_string(row.pivots);
    line += ',';
    line += std::to_string(row.seed);
    line += '\n';
    return line;
}

int run_sweep(std::size_t m, std::size_t n, std::size_t dup, double cond_min, double cond_max,
              std::size_t points, std::size_t seeds_per_point, const std::string& out_path) {
    if (points < 1) throw spnnls::InvalidSpec("--points must be >= 1");
    if (seeds_per_point < 1) throw spnnls::InvalidSpec("--seeds-per-point must be >= 1");
    if (!(cond_min >= 1.0) || cond_max < cond_min)
        throw spnnls::InvalidSpec("need 1 <= cond-min <= cond-max");

    std::string csv = "cond,rel_err_normal,rel_err_lsqr,pivots,seed\n";
    for (std::size_t k = 0; k < points; ++k) {
        const double t = points > 1 ? static_cast<double>(k) / static_cast<double>(points - 1)
                                    : 0.0;
        const double cond =
            std::exp(std::log(cond_min) + t * (std::log(cond_max) - std::log(cond_min)));
        for (std::size_t j = 0; j < seeds_per_point; ++j) {
            SweepRow row;
            row.cond = cond;
            row.seed = k * seeds_per_point + j + 1;
            spnnls::GeneratorSpec spec;
            spec.m = m;
            spec.n = n;
            spec.d = dup;
            spec.cond_target = cond;
            spec.seed = row.seed;
            const spnnls::GeneratedProblem generated = spnnls::gen_p(spec);

            {
                spnnls::SolverOptions opts;
                opts.mode = spnnls::SolveMode::NormalEquationsOnly;
                try {
                    const spnnls::SolverResult r = spnnls::bpp_solve(generated.problem, opts);
                    row.rel_err_normal = relative_error_2norm(r.x, generated.x_true);
                    row.pivots = r.pivot_iterations;
                } catch (const spnnls::Error&) {
                    // breakdown at extreme conditioning is recorded, not fatal
                }
            }
            {
                spnnls::SolverOptions opts;
                opts.mode = spnnls::SolveMode::LsqrFinal;
                try {
                    const spnnls::SolverResult r = spnnls::bpp_solve(generated.problem, opts);
                    row.rel_err_lsqr = relative_error_2norm(r.x, generated.x_true);
                    row.pivots = r.pivot_iterations;
                } catch (const spnnls::Error&) {
                }
            }
            csv += to_csv(row);
        }
    }

    if (out_path.empty()) {
        std::cout << csv;
    } else {
        std::ofstream out(out_path);
        if (!out) throw spnnls::IoError("cannot open '" + out_path + "' for writing");
        out << csv;
        if (!out) throw spnnls::IoError("write failed for '" + out_path + "'");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse nonnegative least squares by block principal pivoting"};
    app.require_subcommand(1);

    // solve
    std::string matrix_path, rhs_path, out_path;
    std::string mode_name = "lsqr";
    double zero_tol = 1e-12;
    std::size_t max_iter = 0;
    bool report = false;
    CLI::App* solve = app.add_subcommand("solve", "solve an NNLS problem from files");
    solve->add_option("--matrix", matrix_path, "Matrix Market file")->required();
    solve->add_option("--rhs", rhs_path, "right-hand side vector file")->required();
    solve->add_option("--mode", mode_name, "normal|lsqr|adaptive (default lsqr)")
        ->check(CLI::IsMember({"normal", "lsqr", "adaptive"}));
    solve->add_option("--zero-tol", zero_tol, "degeneracy clamp tolerance");
    solve->add_option("--max-iter", max_iter, "pivot iteration budget (0 = 10n)");
    solve->add_option("--out", out_path, "output vector file (default: stdout)");
    solve->add_flag("--report", report, "print a KKT report");

    // gen
    std::string family, prefix;
    std::size_t gm = 0, gn = 0, gdup = 1;
    double gcond = 1.0, gdensity = 1.0;
    std::uint64_t gseed = 1;
    CLI::App* gen = app.add_subcommand("gen", "generate a test problem family");
    gen->add_option("--family", family, "p|sparse")->required();
    gen->add_option("--m", gm, "rows")->required();
    gen->add_option("--n", gn, "columns")->required();
    gen->add_option("--dup", gdup, "singular value duplication factor (p family)");
    gen->add_option("--cond", gcond, "target condition number (p family)");
    gen->add_option("--density", gdensity, "expected density (sparse family)");
    gen->add_option("--seed", gseed, "RNG seed");
    gen->add_option("--out-prefix", prefix, "output file prefix")->required();

    // sweep
    std::size_t sm = 80, sn = 70, sdup = 4, points = 8, seeds_per_point = 1;
    double cond_min = 1e1, cond_max = 1e8;
    std::string sweep_out;
    CLI::App* sweep = app.add_subcommand("sweep", "condition number sweep, CSV output");
    sweep->add_option("--m", sm, "rows");
    sweep->add_option("--n", sn, "columns");
    sweep->add_option("--dup", sdup, "singular value duplication factor");
    sweep->add_option("--cond-min", cond_min, "smallest condition number");
    sweep->add_option("--cond-max", cond_max, "largest condition number");
    sweep->add_option("--points", points, "log-spaced condition numbers");
    sweep->add_option("--seeds-per-point", seeds_per_point, "problems per condition number");
    sweep->add_option("--out", sweep_out, "CSV output file (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (solve->parsed())
            return run_solve(matrix_path, rhs_path, mode_name, zero_tol, max_iter, out_path,
                             report);
        if (gen->parsed()) return run_gen(family, gm, gn, gdup, gcond, gdensity, gseed, prefix);
        if (sweep->parsed())
            return run_sweep(sm, sn, sdup, cond_min, cond_max, points, seeds_per_point,
                             sweep_out);
    } catch (const spnnls::DimensionMismatch& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDimension;
    } catch (const spnnls::IterationLimit& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIteration;
    } catch (const spnnls::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const spnnls::UnsupportedFormat& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const spnnls::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const spnnls::InvalidSpec& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const spnnls::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
