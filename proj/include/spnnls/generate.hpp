#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "spnnls/errors.hpp"
#include "spnnls/nnls.hpp"
#include "spnnls/sparse_matrix.hpp"

namespace spnnls {

/// Parameters of a generated test problem. d is the duplication factor for
/// the singular values; cond_target is the requested condition number of A;
/// density applies only to the random-sparse family.
struct GeneratorSpec {
    std::size_t m = 0;
    std::size_t n = 0;
    std::size_t d = 1;
    double cond_target = 1.0;
    std::uint64_t seed = 0;
    double density = 1.0;
};

struct GeneratedProblem {
    Problem problem;
    DenseVector x_true;  // known NNLS solution; all-zeros placeholder when absent
    bool has_x_true = false;
    std::vector<double> singular_values;  // empty for the random-sparse family
    double achieved_cond = 0.0;           // 0 when not controlled
};

namespace detail {

// Applies H(v) = I - 2 v v'/v'v on the left of a dense column-major matrix.
inline void reflect_left(std::vector<double>& A, std::size_t m, std::size_t n,
                         const std::vector<double>& v) {
    double vtv = 0.0;
    for (double e : v) vtv += e * e;
    if (vtv == 0.0) return;
    const double two_over = 2.0 / vtv;
    for (std::size_t j = 0; j < n; ++j) {
        double q = 0.0;
        for (std::size_t i = 0; i < m; ++i) q += v[i] * A[j * m + i];
        q *= two_over;
        for (std::size_t i = 0; i < m; ++i) A[j * m + i] -= v[i] * q;
    }
}

inline void reflect_vector(std::vector<double>& w, const std::vector<double>& v) {
    double vtv = 0.0, q = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        vtv += v[i] * v[i];
        q += v[i] * w[i];
    }
    if (vtv == 0.0) return;
    q *= 2.0 / vtv;
    for (std::size_t i = 0; i < v.size(); ++i) w[i] -= v[i] * q;
}

// Applies H(u) on the right: A <- A - (A u) (2 u'/u'u).
inline void reflect_right(std::vector<double>& A, std::size_t m, std::size_t n,
                          const std::vector<double>& u) {
    double utu = 0.0;
    for (double e : u) utu += e * e;
    if (utu == 0.0) return;
    const double two_over = 2.0 / utu;
    std::vector<double> p(m, 0.0);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < m; ++i) p[i] += A[j * m + i] * u[j];
    for (std::size_t j = 0; j < n; ++j) {
        const double scale = two_over * u[j];
        for (std::size_t i = 0; i < m; ++i) A[j * m + i] -= p[i] * scale;
    }
}

inline SparseMatrix dense_to_csc(const std::vector<double>& A, std::size_t m, std::size_t n) {
    std::vector<Triplet> entries;
    entries.reserve(A.size());
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < m; ++i)
            if (A[j * m + i] != 0.0) entries.push_back({i, j, A[j * m + i]});
    return from_triplets(m, n, entries);
}

}  // namespace detail

/// Controlled-condition problem family with a known strictly positive NNLS
/// solution.
///
/// A = Y D Z' where Y and Z are products of seeded Householder reflections
/// and D carries ceil(n/d) distinct singular values geometrically spaced
/// between 1 and 1/cond_target, each repeated d times (last group
/// truncated). x_true_j = 1 + j/n, and b = A x_true + r with r built in the
/// orthogonal complement of range(A) at norm ||A x_true||/400, so A'r = 0 and
/// x_true is the exact NNLS solution. The residual must stay well below the
/// signal: an iterative least-squares solve carries a kappa^2 error term
/// proportional to ||r||/(||A|| ||x||), which would otherwise bury the
/// kappa-scaling of the refined solution path.
inline GeneratedProblem gen_p(const GeneratorSpec& spec) {
    if (spec.n < 1 || spec.m <= spec.n)
        throw InvalidSpec("gen_p: need m > n >= 1");
    if (spec.d < 1) throw InvalidSpec("gen_p: need d >= 1");
    if (!(spec.cond_target >= 1.0)) throw InvalidSpec("gen_p: need cond_target >= 1");

    const std::size_t m = spec.m, n = spec.n;
    const std::size_t groups = (n + spec.d - 1) / spec.d;

    GeneratedProblem out;
    out.singular_values.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t g = j / spec.d;
        const double exponent =
            groups > 1 ? -static_cast<double>(g) / static_cast<double>(groups - 1) : 0.0;
        out.singular_values[j] = std::pow(spec.cond_target, exponent);
    }
    out.achieved_cond = out.singular_values.front() / out.singular_values.back();

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<double> A(m * n, 0.0);
    for (std::size_t j = 0; j < n; ++j) A[j * m + j] = out.singular_values[j];

    // Residual direction in the orthogonal complement of range(D).
    std::vector<double> w(m, 0.0);
    for (std::size_t i = n; i < m; ++i) w[i] = gauss(rng);

    std::vector<double> v(m);
    for (std::size_t t = 0; t < m; ++t) {
        for (std::size_t i = 0; i < m; ++i) v[i] = gauss(rng);
        detail::reflect_left(A, m, n, v);
        detail::reflect_vector(w, v);
    }
    std::vector<double> u(n);
    for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t i = 0; i < n; ++i) u[i] = gauss(rng);
        detail::reflect_right(A, m, n, u);
    }

    out.x_true.resize(n);
    for (std::size_t j = 0; j < n; ++j)
        out.x_true[j] = 1.0 + static_cast<double>(j) / static_cast<double>(n);
    out.has_x_true = true;

    DenseVector b(m, 0.0);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < m; ++i) b[i] += A[j * m + i] * out.x_true[j];

    double signal_norm = 0.0, w_norm = 0.0;
    for (double e : b) signal_norm += e * e;
    for (double e : w) w_norm += e * e;
    signal_norm = std::sqrt(signal_norm);
    w_norm = std::sqrt(w_norm);
    const double residual_scale = w_norm > 0.0 ? signal_norm / (400.0 * w_norm) : 0.0;
    for (std::size_t i = 0; i < m; ++i) b[i] += residual_scale * w[i];

    out.problem.A = detail::dense_to_csc(A, m, n);
    out.problem.b = std::move(b);
    return out;
}

/// Random sparse full-rank problem: Bernoulli(density) standard-normal
/// entries plus a unit identity block in the top n rows as a rank guard.
/// b is standard normal. No known solution. Deterministic per seed.
inline GeneratedProblem gen_random_sparse(const GeneratorSpec& spec) {
    if (spec.n < 1 || spec.m <= spec.n)
        throw InvalidSpec("gen_random_sparse: need m > n >= 1");
    if (!(spec.density > 0.0) || spec.density > 1.0)
        throw InvalidSpec("gen_random_sparse: need density in (0, 1]");

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    std::vector<Triplet> entries;
    for (std::size_t j = 0; j < spec.n; ++j) {
        for (std::size_t i = 0; i < spec.m; ++i)
            if (uniform(rng) < spec.density) entries.push_back({i, j, gauss(rng)});
        entries.push_back({j, j, 1.0});
    }

    GeneratedProblem out;
    out.problem.A = from_triplets(spec.m, spec.n, entries);
    out.problem.b.resize(spec.m);
    for (double& e : out.problem.b) e = gauss(rng);
    out.x_true.assign(spec.n, 0.0);
    out.has_x_true = false;
    return out;
}

}  // namespace spnnls
