#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "spnnls/errors.hpp"
#include "spnnls/sparse_matrix.hpp"

namespace spnnls {

/// Stopping parameters for lsqr_solve. itn_limit == 0 means 4 * ncols.
struct LsqrOptions {
    double atol = 1e-15;
    double btol = 1e-15;
    double conlim = 1e8;
    std::size_t itn_limit = 0;
};

enum class LsqrStop {
    RhsSolved,              // ||Ax - b|| small enough given atol/btol
    LeastSquaresConverged,  // ||A'r|| / (||A|| ||r||) <= atol
    ConditionLimit,         // estimated cond(A) exceeded conlim
    IterationLimit,
};

struct LsqrOutcome {
    DenseVector x;
    std::size_t iterations = 0;
    LsqrStop stop_reason = LsqrStop::RhsSolved;
    double residual_norm = 0.0;          // ||b - Ax||
    double normal_eq_residual_norm = 0.0;  // ||A'(b - Ax)||
    std::vector<double> residual_norms;  // per-iteration ||r_k||, nonincreasing
};

/// Least-squares solve min ||Ax - b||_2 by Golub-Kahan bidiagonalization,
/// after Paige & Saunders, ACM TOMS 8 (1982). Undamped, no preconditioning,
/// no reorthogonalization; ||A|| and cond(A) are the accumulating estimates
/// from the bidiagonalization. Deterministic for identical inputs.
inline LsqrOutcome lsqr_solve(const SparseMatrix& A, std::span<const double> b,
                              const LsqrOptions& opts = {}) {
    const std::size_t m = A.nrows();
    const std::size_t n = A.ncols();
    if (b.size() != m)
        throw DimensionMismatch("lsqr_solve: rhs length " + std::to_string(b.size()) +
                                " != nrows " + std::to_string(m));
    if (norm1(A) == 0.0) throw ZeroMatrix("lsqr_solve: matrix has 1-norm zero");

    const std::size_t itn_limit = opts.itn_limit > 0 ? opts.itn_limit : 4 * n;
    const double ctol = opts.conlim > 0.0 ? 1.0 / opts.conlim : 0.0;

    const auto norm2 = [](std::span<const double> v) {
        double s = 0.0;
        for (double e : v) s += e * e;
        return std::sqrt(s);
    };
    const auto scale = [](DenseVector& v, double a) {
        for (double& e : v) e *= a;
    };

    LsqrOutcome out;
    out.x.assign(n, 0.0);

    // beta*u = b, alpha*v = A'u.
    DenseVector u(b.begin(), b.end());
    double beta = norm2(u);
    double alpha = 0.0;
    DenseVector v(n, 0.0);
    if (beta > 0.0) {
        scale(u, 1.0 / beta);
        v = rmatvec(A, u);
        alpha = norm2(v);
        if (alpha > 0.0) scale(v, 1.0 / alpha);
    }

    out.residual_norm = beta;
    out.normal_eq_residual_norm = alpha * beta;
    if (out.normal_eq_residual_norm == 0.0) {
        // x = 0 is exact: either b = 0 or A'b = 0.
        out.stop_reason = beta == 0.0 ? LsqrStop::RhsSolved : LsqrStop::LeastSquaresConverged;
        return out;
    }

    DenseVector w = v;
    double rhobar = alpha;
    double phibar = beta;
    const double bnorm = beta;
    double rnorm = beta;
    double anorm = 0.0;   // running Frobenius-style estimate of ||A||
    double acond = 0.0;
    double ddnorm = 0.0;
    double xnorm = 0.0;
    double xxnorm = 0.0;
    double cs2 = -1.0;
    double sn2 = 0.0;
    double z = 0.0;

    while (out.iterations < itn_limit) {
        ++out.iterations;

        // Continue the bidiagonalization:
        //   beta*u = A*v - alpha*u,  alpha*v = A'*u - beta*v.
        {
            DenseVector Av = matvec(A, v);
            for (std::size_t i = 0; i < m; ++i) u[i] = Av[i] - alpha * u[i];
        }
        beta = norm2(u);
        anorm = std::sqrt(anorm * anorm + alpha * alpha + beta * beta);
        if (beta > 0.0) {
            scale(u, 1.0 / beta);
            DenseVector Atu = rmatvec(A, u);
            for (std::size_t i = 0; i < n; ++i) v[i] = Atu[i] - beta * v[i];
            alpha = norm2(v);
            if (alpha > 0.0) scale(v, 1.0 / alpha);
        }

        // Plane rotation to zero the subdiagonal of the bidiagonal matrix.
        const double rho = std::hypot(rhobar, beta);
        const double cs = rhobar / rho;
        const double sn = beta / rho;
        const double theta = sn * alpha;
        rhobar = -cs * alpha;
        const double phi = cs * phibar;
        phibar = sn * phibar;
        const double tau = sn * phi;

        const double t1 = phi / rho;
        const double t2 = -theta / rho;
        for (std::size_t i = 0; i < n; ++i) {
            const double wi = w[i];
            out.x[i] += t1 * wi;
            ddnorm += (wi / rho) * (wi / rho);
            w[i] = v[i] + t2 * wi;
        }

        // Rotation on the right to estimate ||x||.
        const double delta = sn2 * rho;
        const double gambar = -cs2 * rho;
        const double rhs = phi - delta * z;
        const double zbar = rhs / gambar;
        xnorm = std::sqrt(xxnorm + zbar * zbar);
        const double gamma = std::hypot(gambar, theta);
        cs2 = gambar / gamma;
        sn2 = theta / gamma;
        z = rhs / gamma;
        xxnorm += z * z;

        acond = anorm * std::sqrt(ddnorm);
        rnorm = phibar;
        out.residual_norms.push_back(rnorm);
        const double arnorm = alpha * std::abs(tau);

        const double test1 = rnorm / bnorm;
        const double test2 = rnorm > 0.0 ? arnorm / (anorm * rnorm) : 0.0;
        const double test3 = 1.0 / acond;
        const double rtol = opts.btol + opts.atol * anorm * xnorm / bnorm;
        const double t1rel = test1 / (1.0 + anorm * xnorm / bnorm);

        out.residual_norm = rnorm;
        out.normal_eq_residual_norm = arnorm;

        // User tolerances, then the same tests at machine precision.
        if (test1 <= rtol) {
            out.stop_reason = LsqrStop::RhsSolved;
            return out;
        }
        if (test2 <= opts.atol) {
            out.stop_reason = LsqrStop::LeastSquaresConverged;
            return out;
        }
        if (ctol > 0.0 && test3 <= ctol) {
            out.stop_reason = LsqrStop::ConditionLimit;
            return out;
        }
        if (1.0 + t1rel <= 1.0) {
            out.stop_reason = LsqrStop::RhsSolved;
            return out;
        }
        if (1.0 + test2 <= 1.0) {
            out.stop_reason = LsqrStop::LeastSquaresConverged;
            return out;
        }
        if (1.0 + test3 <= 1.0) {
            out.stop_reason = LsqrStop::ConditionLimit;
            return out;
        }
    }
    out.stop_reason = LsqrStop::IterationLimit;
    return out;
}

}  // namespace spnnls
