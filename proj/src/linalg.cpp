#include "nhphase/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

namespace nhphase {

Complex inner(const ComplexVector& u, const ComplexVector& v) {
    if (u.size() != v.size()) {
        std::ostringstream os;
        os << "vector dimensions differ (" << u.size() << " vs " << v.size() << ")";
        throw DimensionError("inner", os.str());
    }
    return u.dot(v);
}

double default_gap_tolerance(const ComplexMatrix& H) {
    return std::max(1e-8 * H.norm(), std::numeric_limits<double>::min());
}

namespace {

// Rotate so the first entry above 1e-12 * max|v_k| is real positive.
void fix_representative(Eigen::Ref<ComplexVector> v) {
    v.normalize();
    const double floor = 1e-12 * v.cwiseAbs().maxCoeff();
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        const double a = std::abs(v[k]);
        if (a > floor) {
            v *= std::conj(v[k]) / a;
            break;
        }
    }
}

}  // namespace

SpectralDecomposition eigendecompose(const ComplexMatrix& H, double tol_gap,
                                     double tol_eig) {
    if (H.rows() == 0) throw DimensionError("eigendecompose", "empty matrix");
    if (H.rows() != H.cols()) {
        std::ostringstream os;
        os << "matrix is " << H.rows() << "x" << H.cols() << ", expected square";
        throw DimensionError("eigendecompose", os.str());
    }
    if (tol_gap <= 0.0) tol_gap = default_gap_tolerance(H);

    Eigen::ComplexEigenSolver<ComplexMatrix> es(H);
    if (es.info() != Eigen::Success) {
        throw NumericalError("eigendecompose", "eigenvalue iteration did not converge");
    }

    const Eigen::Index n = H.rows();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    const auto& ev = es.eigenvalues();
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        if (ev[a].real() != ev[b].real()) return ev[a].real() < ev[b].real();
        return ev[a].imag() < ev[b].imag();
    });

    SpectralDecomposition out;
    out.eigenvalues.resize(n);
    out.right_vectors.resize(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        out.eigenvalues[k] = ev[order[static_cast<std::size_t>(k)]];
        out.right_vectors.col(k) = es.eigenvectors().col(order[static_cast<std::size_t>(k)]);
        fix_representative(out.right_vectors.col(k));
    }

    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double sep = std::abs(out.eigenvalues[i] - out.eigenvalues[j]);
            if (sep <= tol_gap) {
                std::ostringstream os;
                os << "eigenvalue separation " << sep << " at or below tol_gap " << tol_gap
                   << " (exceptional point or true degeneracy)";
                throw DegenerateSpectrumError("eigendecompose", os.str());
            }
        }
    }

    const double scale = std::max(H.norm(), std::numeric_limits<double>::min());
    for (Eigen::Index k = 0; k < n; ++k) {
        const double res =
            (H * out.right_vectors.col(k) - out.eigenvalues[k] * out.right_vectors.col(k))
                .norm();
        if (res > tol_eig * scale) {
            std::ostringstream os;
            os << "eigenpair residual " << res << " exceeds " << tol_eig << " * ||H||";
            throw NumericalError("eigendecompose", os.str());
        }
    }

    Eigen::JacobiSVD<ComplexMatrix> svd(out.right_vectors);
    const auto& sv = svd.singularValues();
    out.condition_estimate = sv[n - 1] > 0.0 ? sv[n - 1] / sv[0] : 0.0;
    return out;
}

ComplexMatrix solve(const ComplexMatrix& M, const ComplexMatrix& B) {
    if (M.rows() != M.cols()) throw DimensionError("solve", "matrix must be square");
    if (M.rows() != B.rows()) throw DimensionError("solve", "right-hand side row mismatch");

    Eigen::PartialPivLU<ComplexMatrix> lu(M);
    const double rcond = lu.rcond();
    if (!(rcond > 1e-14)) {
        std::ostringstream os;
        os << "reciprocal condition " << rcond << " below 1e-14";
        throw SingularMatrixError("solve", os.str());
    }
    ComplexMatrix X = lu.solve(B);
    const double tiny = std::numeric_limits<double>::min();
    const double bound = 1e-10 * (M.norm() * X.norm() + B.norm()) + tiny;
    if ((M * X - B).norm() > bound) {
        throw NumericalError("solve", "residual exceeds solver tolerance");
    }
    return X;
}

}  // namespace nhphase
