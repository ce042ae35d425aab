#pragma once

// Procrustes distance between equivalence classes [X] = {QX : Q in O(d)}.
// Inputs are plain d x k matrices: the distance is defined for any pair of
// equally shaped matrices, full rank or not.

#include "procrustes/model.hpp"

namespace procrustes {

struct Alignment {
    Matrix rotation;        ///< Q maximizing <X1, Q X2> over O(d)
    double distance = 0.0;  ///< ||X1 - Q X2||_F
};

/// Q = U V^T from the SVD X1 X2^T = U S V^T (the polar factor). With repeated
/// singular values any valid SVD is accepted; only the objective value is unique.
Alignment optimal_rotation(const Matrix& x1, const Matrix& x2);

/// rho(X1, X2) = sqrt(max(0, ||X1||^2 + ||X2||^2 - 2 * nuclear_norm(X1 X2^T))).
double procrustes_distance(const Matrix& x1, const Matrix& x2);

/// rho(X, Xhat) / ||X||.
double relative_error(const Matrix& x, const Matrix& x_hat);

/// Unique representative R = Q^T X of [X]: upper trapezoidal, nonnegative diagonal.
/// Requires the leading d x d block of X to be nonsingular (no column pivoting).
Matrix canonical_representative(const Matrix& x);

}  // namespace procrustes
