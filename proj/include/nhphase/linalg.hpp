#pragma once

#include <Eigen/Dense>
#include <complex>

#include "nhphase/errors.hpp"

namespace nhphase {

using Complex = std::complex<double>;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;

inline constexpr Complex kImag{0.0, 1.0};

/// ⟨u|v⟩ = Σ conj(u_k) v_k, conjugate-linear in the first argument.
Complex inner(const ComplexVector& u, const ComplexVector& v);

struct SpectralDecomposition {
    ComplexVector eigenvalues;    // sorted by (Re, Im), ascending
    ComplexMatrix right_vectors;  // columns, unit norm, first significant entry real positive
    double condition_estimate;    // reciprocal condition of the eigenvector matrix
};

double default_gap_tolerance(const ComplexMatrix& H);  // 1e-8 * frobenius(H)

// Dense nonsymmetric eigendecomposition with a nondegeneracy guard.
// tol_gap <= 0 selects default_gap_tolerance(H).
SpectralDecomposition eigendecompose(const ComplexMatrix& H, double tol_gap = -1.0,
                                     double tol_eig = 1e-10);

// X with M X = B; the reciprocal condition of M must exceed 1e-14.
ComplexMatrix solve(const ComplexMatrix& M, const ComplexMatrix& B);

}  // namespace nhphase
