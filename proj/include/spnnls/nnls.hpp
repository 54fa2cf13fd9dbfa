#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spnnls/cholesky.hpp"
#include "spnnls/errors.hpp"
#include "spnnls/lsqr.hpp"
#include "spnnls/sparse_matrix.hpp"

namespace spnnls {

/// Least-squares data: minimize 0.5*||Ax - b||^2 subject to x >= 0.
/// A is m x n with m >= n >= 1 and is assumed to have full column rank.
struct Problem {
    SparseMatrix A;
    DenseVector b;
};

/// Complementary index sets over the columns: F (free) and G (bound at zero).
struct Partition {
    ColumnSelection F;
    ColumnSelection G;
};

enum class ExchangeRule { All, SingleLargestIndex };

enum class SolveMode {
    NormalEquationsOnly,  // accept the last normal-equations solution
    LsqrFinal,            // always recompute the final solution with LSQR
    Adaptive,             // recompute only when the condition estimate predicts
                          // error above adaptive_error_threshold
};

struct SolverOptions {
    double zero_tolerance = 1e-12;  // 0 disables the clamp
    std::size_t p_max = 3;
    std::size_t max_iterations = 0;  // 0 means 10 * n
    SolveMode mode = SolveMode::LsqrFinal;
    double adaptive_error_threshold = 1e-8;
    LsqrOptions lsqr{};
};

/// Mutable state of the pivoting loop, exposed for the exchange operation.
struct IterationState {
    Partition partition;
    DenseVector xF;  // over partition.F
    DenseVector yG;  // over partition.G
    std::size_t p = 3;
    std::size_t best_infeasible = kNoIndex;  // N in the backoff scheme; kNoIndex = infinity
    std::size_t iteration = 0;
};

struct KktReport {
    double min_x = 0.0;
    double min_y = 0.0;
    double max_complementarity = 0.0;
    double primal_residual_norm = 0.0;  // ||y_reported - y_recomputed||_inf
};

struct SolverResult {
    DenseVector x;
    DenseVector y;
    double objective = 0.0;
    KktReport kkt;
    std::optional<ConditionEstimate> condition;
    std::size_t pivot_iterations = 0;
    std::size_t single_exchange_count = 0;
    bool refined_with_lsqr = false;
};

/// Entries strictly inside (-tol, tol) become exact zeros; boundary values
/// are kept. This is the workaround that stops near-zero variables from
/// ping-ponging between F and G when the unconstrained solver reports them
/// as slightly negative.
inline DenseVector zero_clamp(DenseVector v, double tol) {
    for (double& e : v)
        if (std::abs(e) < tol) e = 0.0;
    return v;
}

namespace detail {

inline bool partition_valid(const Partition& part, std::size_t n) {
    std::vector<bool> seen(n, false);
    for (std::size_t j : part.F) {
        if (j >= n || seen[j]) return false;
        seen[j] = true;
    }
    for (std::size_t j : part.G) {
        if (j >= n || seen[j]) return false;
        seen[j] = true;
    }
    if (part.F.size() + part.G.size() != n) return false;
    return std::is_sorted(part.F.begin(), part.F.end()) &&
           std::is_sorted(part.G.begin(), part.G.end());
}

}  // namespace detail

/// Result of a cached-Gram normal-equations subproblem solve.
struct UnconstrainedSolve {
    DenseVector xF;
    CholeskyFactor factor;
    double gram_norm1 = 0.0;  // ||A_F' A_F||_1, exact, for condition estimation
};

/// Solve the unconstrained least-squares problem on the selected columns via
/// the normal equations, reusing the cached Gram matrix: the system matrix is
/// the principal submatrix gramA[sel, sel], never recomputed from A.
/// NotPositiveDefinite propagates to the caller, which falls back to LSQR.
inline UnconstrainedSolve unconstrained_ls_normal_eq(const SparseMatrix& A,
                                                     const SparseMatrix& gramA,
                                                     const ColumnSelection& sel,
                                                     std::span<const double> b) {
    if (b.size() != A.nrows())
        throw DimensionMismatch("unconstrained_ls_normal_eq: rhs length != nrows");
    UnconstrainedSolve out;
    const SparseMatrix M = gram_submatrix(gramA, sel);
    out.gram_norm1 = norm1(M);
    out.factor = factorize(M);

    DenseVector rhs(sel.size(), 0.0);
    for (std::size_t k = 0; k < sel.size(); ++k) {
        double sum = 0.0;
        const std::size_t j = sel[k];
        for (std::size_t p = A.col_begin(j); p < A.col_end(j); ++p)
            sum += A.values()[p] * b[A.rowind()[p]];
        rhs[k] = sum;
    }
    out.xF = solve(out.factor, rhs);
    return out;
}

/// y_G = A_G' * residual, by dot products of the G-columns of A with the
/// residual A_F x_F - b formed by the caller.
inline DenseVector dual_vector(const SparseMatrix& A, const ColumnSelection& sel_G,
                               std::span<const double> residual) {
    if (residual.size() != A.nrows())
        throw DimensionMismatch("dual_vector: residual length != nrows");
    detail::check_selection(sel_G, A.ncols(), "dual_vector");
    DenseVector yG(sel_G.size(), 0.0);
    for (std::size_t k = 0; k < sel_G.size(); ++k) {
        double sum = 0.0;
        const std::size_t j = sel_G[k];
        for (std::size_t p = A.col_begin(j); p < A.col_end(j); ++p)
            sum += A.values()[p] * residual[A.rowind()[p]];
        yG[k] = sum;
    }
    return yG;
}

/// Move infeasible variables between F and G.
///
/// All: every index with negative xF leaves F and every index with negative
/// yG leaves G, from a snapshot of the state. SingleLargestIndex: only the
/// infeasible variable with the largest original column index moves (Murty's
/// finite-termination fallback).
inline Partition exchange_infeasible(const IterationState& state, ExchangeRule rule) {
    const Partition& part = state.partition;
    const std::size_t n = part.F.size() + part.G.size();

    std::vector<std::size_t> movers;
    for (std::size_t k = 0; k < part.F.size(); ++k)
        if (state.xF[k] < 0.0) movers.push_back(part.F[k]);
    for (std::size_t k = 0; k < part.G.size(); ++k)
        if (state.yG[k] < 0.0) movers.push_back(part.G[k]);
    if (movers.empty())
        throw NoInfeasible("exchange_infeasible: state is feasible");

    if (rule == ExchangeRule::SingleLargestIndex)
        movers.assign(1, *std::max_element(movers.begin(), movers.end()));

    std::vector<bool> in_F(n, false);
    for (std::size_t j : part.F) in_F[j] = true;
    for (std::size_t j : movers) in_F[j] = !in_F[j];

    Partition out;
    for (std::size_t j = 0; j < n; ++j) (in_F[j] ? out.F : out.G).push_back(j);
    return out;
}

/// KKT diagnostics for a candidate solution. The dual is recomputed from
/// scratch as y' = A'(Ax - b); min_y and the complementarity bound use y',
/// and primal_residual_norm reports how far the caller's y is from y'.
inline KktReport kkt_residuals(const Problem& problem, std::span<const double> x,
                               std::span<const double> y) {
    const std::size_t n = problem.A.ncols();
    if (x.size() != n || y.size() != n)
        throw DimensionMismatch("kkt_residuals: vector length != ncols");

    DenseVector residual = matvec(problem.A, x);
    for (std::size_t i = 0; i < residual.size(); ++i) residual[i] -= problem.b[i];
    const DenseVector y_check = rmatvec(problem.A, residual);

    KktReport report;
    report.min_x = std::numeric_limits<double>::infinity();
    report.min_y = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        report.min_x = std::min(report.min_x, x[i]);
        report.min_y = std::min(report.min_y, y_check[i]);
        report.max_complementarity =
            std::max(report.max_complementarity, std::abs(x[i] * y_check[i]));
        report.primal_residual_norm =
            std::max(report.primal_residual_norm, std::abs(y[i] - y_check[i]));
    }
    return report;
}

namespace detail {

struct BasicSolution {
    DenseVector xF;
    DenseVector yG;
    std::optional<ConditionEstimate> condition;
};

// Complementary basic solution for the given partition: xF by cached-Gram
// normal equations (LSQR on A_F when the factorization breaks down), then
// yG from the residual. Both clamped.
inline BasicSolution compute_basic_solution(const Problem& problem, const SparseMatrix& gramA,
                                            const Partition& part, const SolverOptions& opts) {
    BasicSolution out;
    DenseVector residual;
    if (part.F.empty()) {
        residual.assign(problem.b.size(), 0.0);
        for (std::size_t i = 0; i < residual.size(); ++i) residual[i] = -problem.b[i];
    } else {
        const SparseMatrix A_F = select_columns(problem.A, part.F);
        try {
            UnconstrainedSolve ls =
                unconstrained_ls_normal_eq(problem.A, gramA, part.F, problem.b);
            out.condition = condest_1norm(ls.factor, ls.gram_norm1);
            out.xF = std::move(ls.xF);
        } catch (const NotPositiveDefinite&) {
            // kappa^2*eps has reached breakdown; degrade to the iterative
            // solver for this subproblem instead of aborting.
            try {
                out.xF = lsqr_solve(A_F, problem.b, opts.lsqr).x;
            } catch (const Error&) {
                throw NotPositiveDefinite(
                    "bpp_solve: normal equations broke down and the LSQR fallback "
                    "failed on the subproblem");
            }
            out.condition.reset();
        }
        residual = matvec(A_F, out.xF);
        for (std::size_t i = 0; i < residual.size(); ++i) residual[i] -= problem.b[i];
    }
    out.yG = dual_vector(problem.A, part.G, residual);
    out.xF = zero_clamp(std::move(out.xF), opts.zero_tolerance);
    out.yG = zero_clamp(std::move(out.yG), opts.zero_tolerance);
    return out;
}

inline std::size_t count_infeasible(const IterationState& state) {
    std::size_t count = 0;
    for (double e : state.xF)
        if (e < 0.0) ++count;
    for (double e : state.yG)
        if (e < 0.0) ++count;
    return count;
}

}  // namespace detail

/// Block principal pivoting for the nonnegative least-squares problem.
///
/// Starts from F empty, x = 0, y = -A'b and walks through complementary
/// basic solutions: while any variable is infeasible, exchange all infeasible
/// variables between F and G as long as their count keeps dropping, allow p
/// backoff rounds when it does not, then fall back to moving only the
/// infeasible variable of largest index. After every exchange the pair
/// (xF, yG) is recomputed through the cached Gram matrix and both vectors are
/// clamped to exact zeros inside (-zero_tolerance, zero_tolerance).
///
/// The Gram matrix of A is evaluated exactly once per call. Intermediate
/// solutions only need correct signs; the returned solution is recomputed
/// with LSQR on the final support in LsqrFinal mode (default), or in Adaptive
/// mode when the condition estimate predicts a relative error above
/// adaptive_error_threshold. If refinement flips a sign at clamp scale, the
/// pivoting loop resumes from the refined state.
inline SolverResult bpp_solve(const Problem& problem, const SolverOptions& opts = {}) {
    const std::size_t m = problem.A.nrows();
    const std::size_t n = problem.A.ncols();
    if (problem.b.size() != m)
        throw DimensionMismatch("bpp_solve: rhs length != nrows");
    if (n < 1 || m < n)
        throw DimensionMismatch("bpp_solve: need m >= n >= 1");

    const std::size_t max_iterations = opts.max_iterations > 0 ? opts.max_iterations : 10 * n;
    const SparseMatrix gramA = gram(problem.A);

    // F empty, x = 0, y = -A'b.
    IterationState state;
    state.p = opts.p_max;
    state.partition.G.resize(n);
    for (std::size_t j = 0; j < n; ++j) state.partition.G[j] = j;
    {
        detail::BasicSolution initial =
            detail::compute_basic_solution(problem, gramA, state.partition, opts);
        state.xF = std::move(initial.xF);
        state.yG = std::move(initial.yG);
    }

    SolverResult result;
    std::optional<ConditionEstimate> last_condition;
    int refine_attempts = 0;
    constexpr int kMaxRefineAttempts = 3;
    bool accepted_refined = false;

    while (true) {
        assert(detail::partition_valid(state.partition, n));
        const std::size_t infeasible = detail::count_infeasible(state);

        if (infeasible == 0) {
            const bool want_refine =
                opts.mode == SolveMode::LsqrFinal ||
                (opts.mode == SolveMode::Adaptive && last_condition &&
                 last_condition->predicted_relative_error > opts.adaptive_error_threshold);
            if (!want_refine || state.partition.F.empty() ||
                refine_attempts >= kMaxRefineAttempts)
                break;

            ++refine_attempts;
            const SparseMatrix A_F = select_columns(problem.A, state.partition.F);
            const LsqrOutcome refined = lsqr_solve(A_F, problem.b, opts.lsqr);
            DenseVector residual = matvec(A_F, refined.x);
            for (std::size_t i = 0; i < m; ++i) residual[i] -= problem.b[i];
            DenseVector xF = zero_clamp(refined.x, opts.zero_tolerance);
            DenseVector yG = zero_clamp(dual_vector(problem.A, state.partition.G, residual),
                                        opts.zero_tolerance);

            const bool feasible =
                std::none_of(xF.begin(), xF.end(), [](double e) { return e < 0.0; }) &&
                std::none_of(yG.begin(), yG.end(), [](double e) { return e < 0.0; });
            state.xF = std::move(xF);
            state.yG = std::move(yG);
            if (feasible) {
                accepted_refined = true;
                break;
            }
            continue;  // resume pivoting from the refined state
        }

        ++state.iteration;
        if (state.iteration > max_iterations)
            throw IterationLimit("bpp_solve: no feasible solution within " +
                                 std::to_string(max_iterations) + " iterations");

        ExchangeRule rule;
        if (infeasible < state.best_infeasible) {
            state.best_infeasible = infeasible;
            state.p = opts.p_max;
            rule = ExchangeRule::All;
        } else if (state.p > 0) {
            --state.p;
            rule = ExchangeRule::All;
        } else {
            rule = ExchangeRule::SingleLargestIndex;
            ++result.single_exchange_count;
        }

        state.partition = exchange_infeasible(state, rule);
        detail::BasicSolution basic =
            detail::compute_basic_solution(problem, gramA, state.partition, opts);
        state.xF = std::move(basic.xF);
        state.yG = std::move(basic.yG);
        if (basic.condition) last_condition = basic.condition;
    }

    result.x.assign(n, 0.0);
    result.y.assign(n, 0.0);
    for (std::size_t k = 0; k < state.partition.F.size(); ++k)
        result.x[state.partition.F[k]] = state.xF[k];
    for (std::size_t k = 0; k < state.partition.G.size(); ++k)
        result.y[state.partition.G[k]] = state.yG[k];

    DenseVector residual = matvec(problem.A, result.x);
    double objective = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        residual[i] -= problem.b[i];
        objective += residual[i] * residual[i];
    }
    result.objective = 0.5 * objective;
    result.kkt = kkt_residuals(problem, result.x, result.y);
    result.condition = last_condition;
    result.pivot_iterations = state.iteration;
    result.refined_with_lsqr = accepted_refined;
    return result;
}

/// Exhaustive-enumeration reference solver. Tries every support set with a
/// self-contained dense normal-equations solve and returns the feasible
/// complementary solution, which is unique under full column rank. Shares no
/// code path with bpp_solve beyond the matrix type.
inline SolverResult oracle_nnls(const Problem& problem) {
    const std::size_t m = problem.A.nrows();
    const std::size_t n = problem.A.ncols();
    if (problem.b.size() != m)
        throw DimensionMismatch("oracle_nnls: rhs length != nrows");
    if (n > 20)
        throw TooLarge("oracle_nnls: enumeration guard allows at most 20 columns");

    // Dense Gram and A'b computed directly from the columns.
    std::vector<double> dense(m * n, 0.0);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t p = problem.A.col_begin(j); p < problem.A.col_end(j); ++p)
            dense[j * m + problem.A.rowind()[p]] = problem.A.values()[p];

    std::vector<double> G(n * n, 0.0);
    DenseVector c(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double sum = 0.0;
            for (std::size_t r = 0; r < m; ++r) sum += dense[i * m + r] * dense[j * m + r];
            G[i * n + j] = sum;
        }
        double sum = 0.0;
        for (std::size_t r = 0; r < m; ++r) sum += dense[i * m + r] * problem.b[r];
        c[i] = sum;
    }

    // Dense Cholesky solve of G[S,S] z = c[S]; returns false on breakdown.
    const auto solve_support = [&](const std::vector<std::size_t>& S, DenseVector& z) {
        const std::size_t k = S.size();
        std::vector<double> M(k * k);
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t bcol = 0; bcol < k; ++bcol) M[a * k + bcol] = G[S[a] * n + S[bcol]];
        std::vector<double> L(k * k, 0.0);
        for (std::size_t a = 0; a < k; ++a) {
            for (std::size_t bcol = 0; bcol <= a; ++bcol) {
                double sum = M[a * k + bcol];
                for (std::size_t t = 0; t < bcol; ++t) sum -= L[a * k + t] * L[bcol * k + t];
                if (a == bcol) {
                    if (!(sum > 0.0) || !std::isfinite(sum)) return false;
                    L[a * k + a] = std::sqrt(sum);
                } else {
                    L[a * k + bcol] = sum / L[bcol * k + bcol];
                }
            }
        }
        z.assign(k, 0.0);
        for (std::size_t a = 0; a < k; ++a) {
            double sum = c[S[a]];
            for (std::size_t t = 0; t < a; ++t) sum -= L[a * k + t] * z[t];
            z[a] = sum / L[a * k + a];
        }
        for (std::size_t a = k; a-- > 0;) {
            double sum = z[a];
            for (std::size_t t = a + 1; t < k; ++t) sum -= L[t * k + a] * z[t];
            z[a] = sum / L[a * k + a];
        }
        return true;
    };

    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        std::vector<std::size_t> S;
        for (std::size_t j = 0; j < n; ++j)
            if (mask & (std::size_t{1} << j)) S.push_back(j);

        DenseVector z;
        if (!S.empty() && !solve_support(S, z)) continue;

        DenseVector x(n, 0.0);
        for (std::size_t a = 0; a < S.size(); ++a) x[S[a]] = z[a];
        DenseVector y(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double sum = -c[i];
            for (std::size_t j = 0; j < n; ++j) sum += G[i * n + j] * x[j];
            y[i] = sum;
        }

        double xmax = 0.0, ymax = 0.0;
        for (double e : x) xmax = std::max(xmax, std::abs(e));
        for (double e : y) ymax = std::max(ymax, std::abs(e));
        const double tol_x = 1e-10 * (1.0 + xmax);
        const double tol_y = 1e-10 * (1.0 + ymax);

        bool feasible = true;
        for (std::size_t a = 0; a < S.size() && feasible; ++a)
            if (z[a] < -tol_x) feasible = false;
        for (std::size_t i = 0; i < n && feasible; ++i)
            if (!(mask & (std::size_t{1} << i)) && y[i] < -tol_y) feasible = false;
        if (!feasible) continue;

        SolverResult result;
        result.x = std::move(x);
        for (double& e : result.x)
            if (e < 0.0) e = 0.0;  // degenerate coordinates solved as -eps
        result.y = std::move(y);
        for (std::size_t a = 0; a < S.size(); ++a) result.y[S[a]] = 0.0;
        for (double& e : result.y)
            if (e < 0.0 && e > -tol_y) e = 0.0;

        DenseVector residual = matvec(problem.A, result.x);
        double objective = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            residual[i] -= problem.b[i];
            objective += residual[i] * residual[i];
        }
        result.objective = 0.5 * objective;
        result.kkt = kkt_residuals(problem, result.x, result.y);
        return result;
    }
    throw NoFeasibleBasis("oracle_nnls: every support failed; input likely rank deficient");
}

}  // namespace spnnls
