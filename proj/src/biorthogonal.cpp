#include "nhphase/biorthogonal.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

namespace nhphase {

double binorm_defect(const StatePair& pair) {
    return std::abs(inner(pair.dual, pair.state) - 1.0);
}

namespace {

void validate_frame(const BiorthonormalFrame& frame, const char* op) {
    const Eigen::Index n = frame.dim();
    const ComplexMatrix gram = frame.left.adjoint() * frame.right;
    const double bi_res = (gram - ComplexMatrix::Identity(n, n)).cwiseAbs().maxCoeff();
    if (bi_res > 1e-10) {
        std::ostringstream os;
        os << "biorthonormality residual " << bi_res << " exceeds 1e-10";
        throw NumericalError(op, os.str());
    }
    const double comp_res =
        (frame.right * frame.left.adjoint() - ComplexMatrix::Identity(n, n)).norm();
    if (comp_res > 1e-9) {
        std::ostringstream os;
        os << "completeness residual " << comp_res << " exceeds 1e-9";
        throw NumericalError(op, os.str());
    }
}

void require_binormalized(const StatePair& pair, const char* op, double tol) {
    const double defect = binorm_defect(pair);
    if (defect > tol) {
        std::ostringstream os;
        os << "pair is not binormalized, |<dual|state> - 1| = " << defect;
        throw ValidationError(op, os.str());
    }
}

}  // namespace

BiorthonormalFrame build_frame(const ComplexMatrix& H, double source_time,
                               double tol_gap) {
    SpectralDecomposition sd = eigendecompose(H, tol_gap);
    const Eigen::Index n = H.rows();

    BiorthonormalFrame frame;
    frame.eigenvalues = sd.eigenvalues;
    frame.right = sd.right_vectors;
    // Left vectors are the conjugated rows of V^{-1}; biorthonormality then
    // holds to inversion accuracy and Σ|n⟩⟨ñ| = V V^{-1} = 1.
    frame.left = solve(sd.right_vectors, ComplexMatrix::Identity(n, n)).adjoint();
    frame.source_time = source_time;

    validate_frame(frame, "build_frame");
    return frame;
}

BiorthonormalFrame match_frames(const BiorthonormalFrame& prev,
                                const BiorthonormalFrame& next) {
    const Eigen::Index n = prev.dim();
    if (n != next.dim()) throw DimensionError("match_frames", "frame dimensions differ");

    Eigen::MatrixXd overlap(n, n);
    for (Eigen::Index m = 0; m < n; ++m)
        for (Eigen::Index k = 0; k < n; ++k)
            overlap(m, k) = std::abs(inner(prev.left.col(m), next.right.col(k)));

    // Greedy assignment on overlap magnitude; ambiguity means two conflicting
    // candidates (sharing a row or column) within 1e-12 of each other.
    std::vector<bool> row_used(static_cast<std::size_t>(n), false);
    std::vector<bool> col_used(static_cast<std::size_t>(n), false);
    std::vector<Eigen::Index> assign(static_cast<std::size_t>(n), -1);
    for (Eigen::Index step = 0; step < n; ++step) {
        Eigen::Index bm = -1, bk = -1;
        double best = -1.0;
        for (Eigen::Index m = 0; m < n; ++m) {
            if (row_used[static_cast<std::size_t>(m)]) continue;
            for (Eigen::Index k = 0; k < n; ++k) {
                if (col_used[static_cast<std::size_t>(k)]) continue;
                if (overlap(m, k) > best) {
                    best = overlap(m, k);
                    bm = m;
                    bk = k;
                }
            }
        }
        double rival = -1.0;
        for (Eigen::Index m = 0; m < n; ++m) {
            if (row_used[static_cast<std::size_t>(m)]) continue;
            for (Eigen::Index k = 0; k < n; ++k) {
                if (col_used[static_cast<std::size_t>(k)]) continue;
                if (m == bm && k == bk) continue;
                if (m == bm || k == bk) rival = std::max(rival, overlap(m, k));
            }
        }
        if (rival >= 0.0 && best - rival < 1e-12) {
            std::ostringstream os;
            os << "assignment ambiguous at slot " << bm << ": candidates " << best
               << " and " << rival << " within 1e-12";
            throw AmbiguousMatchError("match_frames", os.str());
        }
        row_used[static_cast<std::size_t>(bm)] = true;
        col_used[static_cast<std::size_t>(bk)] = true;
        assign[static_cast<std::size_t>(bm)] = bk;
    }

    BiorthonormalFrame out;
    out.eigenvalues.resize(n);
    out.right.resize(n, n);
    out.left.resize(n, n);
    out.source_time = next.source_time;
    for (Eigen::Index m = 0; m < n; ++m) {
        const Eigen::Index k = assign[static_cast<std::size_t>(m)];
        out.eigenvalues[m] = next.eigenvalues[k];
        out.right.col(m) = next.right.col(k);
        out.left.col(m) = next.left.col(k);
        const Complex c = inner(prev.left.col(m), out.right.col(m));
        if (std::abs(c) > 0.0) {
            // A common unit phase on right and left preserves biorthonormality.
            const Complex u = std::conj(c) / std::abs(c);
            out.right.col(m) *= u;
            out.left.col(m) *= u;
        }
    }
    return out;
}

StatePair dual_partner(const BiorthonormalFrame& frame, const ComplexVector& psi) {
    if (psi.size() != frame.dim())
        throw DimensionError("dual_partner", "state dimension does not match frame");
    if (psi.norm() == 0.0) throw ZeroVectorError("dual_partner", "state vector is zero");

    // c_n = ⟨ñ|ψ⟩, dual = Σ (c_n / Σ|c|²) |ñ⟩
    const ComplexVector c = frame.left.adjoint() * psi;
    const double s = c.squaredNorm();
    if (s <= std::numeric_limits<double>::min())
        throw ZeroVectorError("dual_partner", "state has no components in the frame");
    return StatePair{psi, frame.left * (c / s)};
}

std::vector<StatePair> biorthogonal_complement(const BiorthonormalFrame& frame,
                                               const StatePair& pair) {
    require_binormalized(pair, "biorthogonal_complement", 1e-8);
    const Eigen::Index n = frame.dim();
    if (pair.state.size() != n)
        throw DimensionError("biorthogonal_complement", "pair dimension does not match frame");

    std::vector<StatePair> out;
    out.reserve(static_cast<std::size_t>(n - 1));
    for (Eigen::Index k = 0; k < n; ++k) {
        // Project the frame triple off the pair, then off what is already kept.
        ComplexVector u = frame.right.col(k) - inner(pair.dual, frame.right.col(k)) * pair.state;
        ComplexVector w =
            frame.left.col(k) - std::conj(inner(frame.left.col(k), pair.state)) * pair.dual;
        for (const StatePair& kept : out) {
            u -= inner(kept.dual, u) * kept.state;
            w -= std::conj(inner(w, kept.state)) * kept.dual;
        }
        const Complex s = inner(w, u);
        const double scale = u.norm() * w.norm();
        if (std::abs(s) <= 1e-10 * scale + std::numeric_limits<double>::min()) continue;
        const double un = u.norm();
        out.push_back(StatePair{u / un, w * (un / std::conj(s))});
        if (out.size() == static_cast<std::size_t>(n - 1)) break;
    }
    if (out.size() != static_cast<std::size_t>(n - 1)) {
        throw NumericalError("biorthogonal_complement",
                             "could not biorthogonalize N-1 complement pairs");
    }
    return out;
}

StatePair apply_gauge(const StatePair& pair, const GaugeTransform& g) {
    require_binormalized(pair, "apply_gauge", 1e-6);
    const Complex fs = std::exp(kImag * g.zeta);
    const Complex fd = std::exp(kImag * std::conj(g.zeta));
    return StatePair{pair.state * fs, pair.dual * fd};
}

}  // namespace nhphase
