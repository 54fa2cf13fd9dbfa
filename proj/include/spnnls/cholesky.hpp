#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spnnls/errors.hpp"
#include "spnnls/sparse_matrix.hpp"

namespace spnnls {

/// Lower-triangular Cholesky factor L with L*L' equal to the (optionally
/// symmetrically permuted) input. Columns are sorted with the diagonal entry
/// first. Immutable after factorize().
struct CholeskyFactor {
    SparseMatrix L;
    std::size_t dimension = 0;
    std::vector<std::size_t> perm;  // empty = natural ordering
};

/// 1-norm condition estimate of the factored matrix.
struct ConditionEstimate {
    double kappa = 1.0;
    double predicted_relative_error = 0.0;  // kappa * 2^-52
};

inline constexpr double kMachineEpsilon = 0x1p-52;

namespace detail {

// Elimination tree of a structurally symmetric matrix (upper triangle read).
inline std::vector<std::size_t> elimination_tree(const SparseMatrix& C) {
    const std::size_t n = C.ncols();
    std::vector<std::size_t> parent(n, kNoIndex);
    std::vector<std::size_t> ancestor(n, kNoIndex);
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t p = C.col_begin(k); p < C.col_end(k); ++p) {
            std::size_t i = C.rowind()[p];
            while (i != kNoIndex && i < k) {
                const std::size_t next = ancestor[i];
                ancestor[i] = k;  // path compression
                if (next == kNoIndex) parent[i] = k;
                i = next;
            }
        }
    }
    return parent;
}

// Nonzero pattern of row k of L in topological order, written to
// stack[top..n-1]. visited[] must hold values < k on entry for this k.
inline std::size_t etree_reach(const SparseMatrix& C, std::size_t k,
                               const std::vector<std::size_t>& parent,
                               std::vector<std::size_t>& stack,
                               std::vector<std::size_t>& visited, std::size_t stamp) {
    const std::size_t n = C.ncols();
    std::size_t top = n;
    visited[k] = stamp;
    for (std::size_t p = C.col_begin(k); p < C.col_end(k); ++p) {
        std::size_t i = C.rowind()[p];
        if (i > k) continue;
        std::size_t len = 0;
        while (visited[i] != stamp) {
            stack[len++] = i;
            visited[i] = stamp;
            i = parent[i];  // reaches a visited node before running off the tree
        }
        while (len > 0) stack[--top] = stack[--len];
    }
    return top;
}

// M(perm, perm) rebuilt through triplets; used only when an ordering is given.
inline SparseMatrix symmetric_permutation(const SparseMatrix& M,
                                          const std::vector<std::size_t>& perm) {
    const std::size_t n = M.ncols();
    if (perm.size() != n)
        throw DimensionMismatch("factorize: permutation length != dimension");
    std::vector<std::size_t> inverse(n, kNoIndex);
    for (std::size_t i = 0; i < n; ++i) {
        if (perm[i] >= n || inverse[perm[i]] != kNoIndex)
            throw IndexOutOfRange("factorize: not a permutation");
        inverse[perm[i]] = i;
    }
    std::vector<Triplet> entries = to_triplets(M);
    for (Triplet& t : entries) {
        t.row = inverse[t.row];
        t.col = inverse[t.col];
    }
    return from_triplets(n, n, entries);
}

}  // namespace detail

/// Up-looking sparse Cholesky factorization M = L*L'.
///
/// A symbolic pass computes the elimination tree and per-column counts of L,
/// then the numeric pass solves one sparse triangular system per row. The
/// caller guarantees M is symmetric with both triangles stored; an optional
/// fill-reducing permutation may be supplied (natural ordering by default).
///
/// Throws NotPositiveDefinite when a pivot is <= 0, below 1e-300, or not
/// finite. For a Gram matrix this signals rank deficiency of the selected
/// columns or a condition number past the breakdown point of the normal
/// equations.
inline CholeskyFactor factorize(const SparseMatrix& M, std::vector<std::size_t> perm = {}) {
    if (M.nrows() != M.ncols())
        throw DimensionMismatch("factorize: matrix not square");
    const std::size_t n = M.ncols();
    const SparseMatrix C = perm.empty() ? M : detail::symmetric_permutation(M, perm);

    const std::vector<std::size_t> parent = detail::elimination_tree(C);

    // Symbolic pass: column counts of L via row patterns.
    std::vector<std::size_t> count(n, 0);
    std::vector<std::size_t> stack(n), visited(n, kNoIndex);
    for (std::size_t k = 0; k < n; ++k) {
        ++count[k];  // diagonal
        const std::size_t top = detail::etree_reach(C, k, parent, stack, visited, k);
        for (std::size_t t = top; t < n; ++t) ++count[stack[t]];
    }
    std::vector<std::size_t> colptr(n + 1, 0);
    for (std::size_t j = 0; j < n; ++j) colptr[j + 1] = colptr[j] + count[j];

    const std::size_t nnz = colptr[n];
    std::vector<std::size_t> rowind(nnz, 0);
    std::vector<double> values(nnz, 0.0);
    std::vector<std::size_t> fill(colptr.begin(), colptr.end() - 1);  // next free slot

    // Numeric pass.
    std::vector<double> x(n, 0.0);
    std::fill(visited.begin(), visited.end(), kNoIndex);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t top = detail::etree_reach(C, k, parent, stack, visited, k);
        double d = 0.0;
        for (std::size_t p = C.col_begin(k); p < C.col_end(k); ++p) {
            const std::size_t r = C.rowind()[p];
            if (r < k)
                x[r] = C.values()[p];
            else if (r == k)
                d = C.values()[p];
        }
        for (std::size_t t = top; t < n; ++t) {
            const std::size_t i = stack[t];
            const double lki = x[i] / values[colptr[i]];
            x[i] = 0.0;
            for (std::size_t p = colptr[i] + 1; p < fill[i]; ++p)
                x[rowind[p]] -= values[p] * lki;
            d -= lki * lki;
            rowind[fill[i]] = k;
            values[fill[i]] = lki;
            ++fill[i];
        }
        if (!(d > 0.0) || d < 1e-300 || !std::isfinite(d))
            throw NotPositiveDefinite("factorize: nonpositive pivot at column " +
                                      std::to_string(k));
        rowind[fill[k]] = k;
        values[fill[k]] = std::sqrt(d);
        ++fill[k];
    }

    CholeskyFactor out;
    out.L = SparseMatrix(n, n, std::move(colptr), std::move(rowind), std::move(values));
    out.dimension = n;
    out.perm = std::move(perm);
    return out;
}

/// Solve L*L'*x = rhs by forward then back substitution.
inline DenseVector solve(const CholeskyFactor& factor, std::span<const double> rhs) {
    const std::size_t n = factor.dimension;
    if (rhs.size() != n)
        throw DimensionMismatch("solve: rhs length " + std::to_string(rhs.size()) +
                                " != dimension " + std::to_string(n));
    const SparseMatrix& L = factor.L;

    DenseVector x(n);
    if (factor.perm.empty()) {
        std::copy(rhs.begin(), rhs.end(), x.begin());
    } else {
        for (std::size_t i = 0; i < n; ++i) x[i] = rhs[factor.perm[i]];
    }

    for (std::size_t j = 0; j < n; ++j) {
        x[j] /= L.values()[L.col_begin(j)];
        for (std::size_t p = L.col_begin(j) + 1; p < L.col_end(j); ++p)
            x[L.rowind()[p]] -= L.values()[p] * x[j];
    }
    for (std::size_t j = n; j-- > 0;) {
        for (std::size_t p = L.col_begin(j) + 1; p < L.col_end(j); ++p)
            x[j] -= L.values()[p] * x[L.rowind()[p]];
        x[j] /= L.values()[L.col_begin(j)];
    }

    if (factor.perm.empty()) return x;
    DenseVector out(n);
    for (std::size_t i = 0; i < n; ++i) out[factor.perm[i]] = x[i];
    return out;
}

/// Hager/Higham iterative 1-norm condition estimate driven by triangular
/// solves with the factor, mirroring the contract of LAPACK's dpocon.
///
/// The estimate of ||M^-1||_1 is a lower bound up to the round-off of the
/// solves: every candidate is ||M^-1 w||_1 / ||w||_1 for an explicit w. At
/// most 5 outer iterations; on stagnation or a repeated sign pattern the best
/// estimate so far is kept. norm1_M must be the exact 1-norm of the
/// factored matrix.
inline ConditionEstimate condest_1norm(const CholeskyFactor& factor, double norm1_M) {
    const std::size_t n = factor.dimension;
    ConditionEstimate out;
    if (n == 0) {
        out.kappa = 1.0;
        out.predicted_relative_error = kMachineEpsilon;
        return out;
    }

    const auto asum = [](const DenseVector& v) {
        double s = 0.0;
        for (double e : v) s += std::abs(e);
        return s;
    };
    const auto argmax_abs = [](const DenseVector& v) {
        std::size_t j = 0;
        for (std::size_t i = 1; i < v.size(); ++i)
            if (std::abs(v[i]) > std::abs(v[j])) j = i;
        return j;
    };

    DenseVector x(n, 1.0 / static_cast<double>(n));
    DenseVector v = solve(factor, x);
    double est = asum(v);

    if (n > 1) {
        DenseVector sign(n);
        for (std::size_t i = 0; i < n; ++i) sign[i] = v[i] < 0.0 ? -1.0 : 1.0;
        DenseVector z = solve(factor, sign);
        std::size_t j = argmax_abs(z);

        for (int iter = 2; iter <= 5; ++iter) {
            std::fill(x.begin(), x.end(), 0.0);
            x[j] = 1.0;
            v = solve(factor, x);
            const double est_new = asum(v);
            if (est_new <= est) break;  // no progress; keep the best bound
            est = est_new;

            bool same_signs = true;
            for (std::size_t i = 0; i < n; ++i) {
                const double s = v[i] < 0.0 ? -1.0 : 1.0;
                if (s != sign[i]) same_signs = false;
                sign[i] = s;
            }
            if (same_signs) break;

            z = solve(factor, sign);
            const std::size_t j_last = j;
            j = argmax_abs(z);
            if (std::abs(z[j_last]) == std::abs(z[j])) break;
        }

        // Higham's alternative probe guards against adversarial patterns.
        for (std::size_t i = 0; i < n; ++i) {
            const double magnitude =
                1.0 + static_cast<double>(i) / static_cast<double>(n > 1 ? n - 1 : 1);
            x[i] = (i % 2 == 0) ? magnitude : -magnitude;
        }
        v = solve(factor, x);
        est = std::max(est, 2.0 * asum(v) / (3.0 * static_cast<double>(n)));
    }

    out.kappa = std::max(1.0, norm1_M * est);
    out.predicted_relative_error = out.kappa * kMachineEpsilon;
    return out;
}

}  // namespace spnnls
