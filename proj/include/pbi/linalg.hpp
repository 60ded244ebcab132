#pragma once

#include "pbi/common.hpp"

namespace pbi {

// Dense square matrix, row-major.  Everything in this project is d x d with
// d of a few dozen at most, so plain loops are all we need.
struct Matrix {
    int n{0};
    Vec a;

    Matrix() = default;
    explicit Matrix(int n_) : n(n_), a(static_cast<std::size_t>(n_) * n_, 0.0) {}
    double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
    double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }

    static Matrix identity(int n);
};

// Lower-triangular Cholesky factor; throws ConfigError if A is not SPD.
Matrix cholesky(const Matrix& A);

// Cyclic Jacobi eigendecomposition of a symmetric matrix.
// Returns eigenvalues (ascending) and the matrix of column eigenvectors.
void sym_eigen(const Matrix& A, Vec& eigenvalues, Matrix& eigenvectors);

// Projects a symmetric matrix to SPD by flooring eigenvalues at
// floor_rel * trace / n (with an absolute fallback when the trace vanishes).
Matrix spd_floor(const Matrix& A, double floor_rel);

// y = L * z for lower-triangular L.
void lower_tri_matvec(const Matrix& L, std::span<const double> z, std::span<double> y);

}  // namespace pbi
