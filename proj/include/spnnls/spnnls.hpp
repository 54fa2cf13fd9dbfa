#pragma once

// Sparse nonnegative least squares by block principal pivoting, with a
// cached-Gram normal-equations fast path, 1-norm condition estimation, and
// LSQR recomputation of the final solution.

#include "spnnls/cholesky.hpp"
#include "spnnls/errors.hpp"
#include "spnnls/generate.hpp"
#include "spnnls/lsqr.hpp"
#include "spnnls/matrix_market.hpp"
#include "spnnls/nnls.hpp"
#include "spnnls/sparse_matrix.hpp"
