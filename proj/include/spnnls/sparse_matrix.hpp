#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spnnls/errors.hpp"

namespace spnnls {

using DenseVector = std::vector<double>;

/// Strictly increasing list of 0-based column indices.
using ColumnSelection = std::vector<std::size_t>;

inline constexpr std::size_t kNoIndex = std::numeric_limits<std::size_t>::max();

/// One coordinate-format entry. Duplicates are summed on ingestion.
struct Triplet {
    std::size_t row = 0;
    std::size_t col = 0;
    double value = 0.0;
};

/// Immutable compressed-sparse-column matrix of doubles.
///
/// Within each column the row indices are strictly increasing and
/// duplicate-free; colptr is nondecreasing with colptr[0] == 0 and
/// colptr[ncols] == nnz.
class SparseMatrix {
public:
    SparseMatrix() : colptr_(1, 0) {}

    SparseMatrix(std::size_t nrows, std::size_t ncols,
                 std::vector<std::size_t> colptr,
                 std::vector<std::size_t> rowind,
                 std::vector<double> values)
        : nrows_(nrows),
          ncols_(ncols),
          colptr_(std::move(colptr)),
          rowind_(std::move(rowind)),
          values_(std::move(values)) {
        check_structure();
    }

    std::size_t nrows() const { return nrows_; }
    std::size_t ncols() const { return ncols_; }
    std::size_t nnz() const { return rowind_.size(); }

    std::span<const std::size_t> colptr() const { return colptr_; }
    std::span<const std::size_t> rowind() const { return rowind_; }
    std::span<const double> values() const { return values_; }

    /// Start/end offsets of column j in rowind()/values().
    std::size_t col_begin(std::size_t j) const { return colptr_[j]; }
    std::size_t col_end(std::size_t j) const { return colptr_[j + 1]; }

private:
    void check_structure() const {
        if (colptr_.size() != ncols_ + 1 || colptr_.front() != 0)
            throw IndexOutOfRange("SparseMatrix: bad column pointer array");
        if (colptr_.back() != rowind_.size() || rowind_.size() != values_.size())
            throw IndexOutOfRange("SparseMatrix: array length mismatch");
        for (std::size_t j = 0; j < ncols_; ++j) {
            if (colptr_[j] > colptr_[j + 1])
                throw IndexOutOfRange("SparseMatrix: decreasing column pointers");
            for (std::size_t p = colptr_[j]; p < colptr_[j + 1]; ++p) {
                if (rowind_[p] >= nrows_)
                    throw IndexOutOfRange("SparseMatrix: row index out of range");
                if (p > colptr_[j] && rowind_[p - 1] >= rowind_[p])
                    throw IndexOutOfRange("SparseMatrix: unsorted or duplicate rows");
            }
        }
    }

    std::size_t nrows_ = 0;
    std::size_t ncols_ = 0;
    std::vector<std::size_t> colptr_;
    std::vector<std::size_t> rowind_;
    std::vector<double> values_;
};

/// Counts gram() evaluations process-wide. The pivoting solver caches the
/// Gram matrix, so exactly one evaluation per solve is expected; tests
/// assert on the counter.
inline std::atomic<std::uint64_t>& gram_call_counter() {
    static std::atomic<std::uint64_t> count{0};
    return count;
}

/// Build a CSC matrix from coordinate entries; duplicate positions are summed.
inline SparseMatrix from_triplets(std::size_t nrows, std::size_t ncols,
                                  std::span<const Triplet> triplets) {
    for (const Triplet& t : triplets) {
        if (t.row >= nrows || t.col >= ncols)
            throw IndexOutOfRange("from_triplets: entry (" + std::to_string(t.row) + "," +
                                  std::to_string(t.col) + ") outside " +
                                  std::to_string(nrows) + "x" + std::to_string(ncols));
    }

    std::vector<std::size_t> count(ncols, 0);
    for (const Triplet& t : triplets) ++count[t.col];

    std::vector<std::size_t> start(ncols + 1, 0);
    for (std::size_t j = 0; j < ncols; ++j) start[j + 1] = start[j] + count[j];

    // Bucket by column, then sort each column slice by row and fold duplicates.
    std::vector<std::pair<std::size_t, double>> bucket(triplets.size());
    {
        std::vector<std::size_t> next(start.begin(), start.end() - 1);
        for (const Triplet& t : triplets) bucket[next[t.col]++] = {t.row, t.value};
    }

    std::vector<std::size_t> colptr(ncols + 1, 0);
    std::vector<std::size_t> rowind;
    std::vector<double> values;
    rowind.reserve(triplets.size());
    values.reserve(triplets.size());

    for (std::size_t j = 0; j < ncols; ++j) {
        auto first = bucket.begin() + static_cast<std::ptrdiff_t>(start[j]);
        auto last = bucket.begin() + static_cast<std::ptrdiff_t>(start[j + 1]);
        std::sort(first, last, [](const auto& a, const auto& b) { return a.first < b.first; });
        for (auto it = first; it != last;) {
            std::size_t row = it->first;
            double sum = 0.0;
            for (; it != last && it->first == row; ++it) sum += it->second;
            rowind.push_back(row);
            values.push_back(sum);
        }
        colptr[j + 1] = rowind.size();
    }

    return SparseMatrix(nrows, ncols, std::move(colptr), std::move(rowind), std::move(values));
}

inline std::vector<Triplet> to_triplets(const SparseMatrix& A) {
    std::vector<Triplet> out;
    out.reserve(A.nnz());
    for (std::size_t j = 0; j < A.ncols(); ++j)
        for (std::size_t p = A.col_begin(j); p < A.col_end(j); ++p)
            out.push_back({A.rowind()[p], j, A.values()[p]});
    return out;
}

/// y = A * v.
inline DenseVector matvec(const SparseMatrix& A, std::span<const double> v) {
    if (v.size() != A.ncols())
        throw DimensionMismatch("matvec: vector length " + std::to_string(v.size()) +
                                " != ncols " + std::to_string(A.ncols()));
    DenseVector y(A.nrows(), 0.0);
    for (std::size_t j = 0; j < A.ncols(); ++j) {
        const double vj = v[j];
        if (vj == 0.0) continue;
        for (std::size_t p = A.col_begin(j); p < A.col_end(j); ++p)
            y[A.rowind()[p]] += A.values()[p] * vj;
    }
    return y;
}

/// y = A' * u, computed by column dot products; A' is never formed.
inline DenseVector rmatvec(const SparseMatrix& A, std::span<const double> u) {
    if (u.size() != A.nrows())
        throw DimensionMismatch("rmatvec: vector length " + std::to_string(u.size()) +
                                " != nrows " + std::to_string(A.nrows()));
    DenseVector y(A.ncols(), 0.0);
    for (std::size_t j = 0; j < A.ncols(); ++j) {
        double sum = 0.0;
        for (std::size_t p = A.col_begin(j); p < A.col_end(j); ++p)
            sum += A.values()[p] * u[A.rowind()[p]];
        y[j] = sum;
    }
    return y;
}

/// Maximum absolute column sum.
inline double norm1(const SparseMatrix& A) {
    double best = 0.0;
    for (std::size_t j = 0; j < A.ncols(); ++j) {
        double sum = 0.0;
        for (std::size_t p = A.col_begin(j); p < A.col_end(j); ++p)
            sum += std::abs(A.values()[p]);
        best = std::max(best, sum);
    }
    return best;
}

namespace detail {

inline void check_selection(const ColumnSelection& sel, std::size_t ncols, const char* what) {
    for (std::size_t k = 0; k < sel.size(); ++k) {
        if (sel[k] >= ncols)
            throw IndexOutOfRange(std::string(what) + ": column index " +
                                  std::to_string(sel[k]) + " out of range");
        if (k > 0 && sel[k - 1] >= sel[k])
            throw IndexOutOfRange(std::string(what) + ": selection not strictly increasing");
    }
}

}  // namespace detail

/// Columns of A indexed by sel, in selection order.
inline SparseMatrix select_columns(const SparseMatrix& A, const ColumnSelection& sel) {
    detail::check_selection(sel, A.ncols(), "select_columns");
    std::vector<std::size_t> colptr(sel.size() + 1, 0);
    std::vector<std::size_t> rowind;
    std::vector<double> values;
    for (std::size_t k = 0; k < sel.size(); ++k) {
        const std::size_t j = sel[k];
        for (std::size_t p = A.col_begin(j); p < A.col_end(j); ++p) {
            rowind.push_back(A.rowind()[p]);
            values.push_back(A.values()[p]);
        }
        colptr[k + 1] = rowind.size();
    }
    return SparseMatrix(A.nrows(), sel.size(), std::move(colptr), std::move(rowind),
                        std::move(values));
}

/// A' * A with both triangles stored. Each entry is the dot product of two
/// columns of A against a scatter workspace; entries with no structural
/// overlap are omitted, exact numerical zeros from cancellation are kept.
/// Symmetry is exact because each off-diagonal value is computed once and
/// mirrored.
inline SparseMatrix gram(const SparseMatrix& A) {
    gram_call_counter().fetch_add(1, std::memory_order_relaxed);
    const std::size_t n = A.ncols();
    std::vector<std::size_t> mark(A.nrows(), kNoIndex);
    std::vector<double> work(A.nrows(), 0.0);
    std::vector<Triplet> entries;

    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t p = A.col_begin(j); p < A.col_end(j); ++p) {
            mark[A.rowind()[p]] = j;
            work[A.rowind()[p]] = A.values()[p];
        }
        for (std::size_t i = 0; i <= j; ++i) {
            double sum = 0.0;
            bool touched = false;
            for (std::size_t p = A.col_begin(i); p < A.col_end(i); ++p) {
                const std::size_t r = A.rowind()[p];
                if (mark[r] == j) {
                    sum += A.values()[p] * work[r];
                    touched = true;
                }
            }
            if (touched) {
                entries.push_back({i, j, sum});
                if (i != j) entries.push_back({j, i, sum});
            }
        }
    }
    return from_triplets(n, n, entries);
}

/// Principal submatrix G[sel, sel] of a symmetric matrix G. When G = gram(A)
/// this equals gram(select_columns(A, sel)) without touching A again.
inline SparseMatrix gram_submatrix(const SparseMatrix& G, const ColumnSelection& sel) {
    if (G.nrows() != G.ncols())
        throw DimensionMismatch("gram_submatrix: matrix not square");
    detail::check_selection(sel, G.ncols(), "gram_submatrix");

    std::vector<std::size_t> position(G.nrows(), kNoIndex);
    for (std::size_t k = 0; k < sel.size(); ++k) position[sel[k]] = k;

    std::vector<std::size_t> colptr(sel.size() + 1, 0);
    std::vector<std::size_t> rowind;
    std::vector<double> values;
    for (std::size_t k = 0; k < sel.size(); ++k) {
        const std::size_t j = sel[k];
        for (std::size_t p = G.col_begin(j); p < G.col_end(j); ++p) {
            const std::size_t r = position[G.rowind()[p]];
            if (r == kNoIndex) continue;
            rowind.push_back(r);  // stays sorted: sel is increasing
            values.push_back(G.values()[p]);
        }
        colptr[k + 1] = rowind.size();
    }
    return SparseMatrix(sel.size(), sel.size(), std::move(colptr), std::move(rowind),
                        std::move(values));
}

}  // namespace spnnls
