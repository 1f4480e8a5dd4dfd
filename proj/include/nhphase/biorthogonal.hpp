#pragma once

#include <vector>

#include "nhphase/linalg.hpp"

namespace nhphase {

// Matched triples (E_n, |n⟩, |ñ⟩) with ⟨m̃|n⟩ = δ_mn and Σ |n⟩⟨ñ| = 1.
// Right vectors carry unit Euclidean norm; the left vectors absorb all
// remaining complex scale.
struct BiorthonormalFrame {
    ComplexVector eigenvalues;
    ComplexMatrix right;  // columns |n⟩
    ComplexMatrix left;   // columns |ñ⟩
    double source_time = 0.0;

    Eigen::Index dim() const { return right.rows(); }
};

// A state vector with its explicit dual, ⟨ψ̃|ψ⟩ = 1.
struct StatePair {
    ComplexVector state;
    ComplexVector dual;
};

// Joint rescaling state ← e^{iζ} state, dual ← e^{iζ*} dual.
struct GaugeTransform {
    Complex zeta;
};

double binorm_defect(const StatePair& pair);  // |⟨ψ̃|ψ⟩ − 1|

BiorthonormalFrame build_frame(const ComplexMatrix& H, double source_time = 0.0,
                               double tol_gap = -1.0);

// Permutes and phase-aligns next's triples to follow prev along a parameter path.
BiorthonormalFrame match_frames(const BiorthonormalFrame& prev,
                                const BiorthonormalFrame& next);

// The unique binormalized dual of psi within the frame's dual span.
StatePair dual_partner(const BiorthonormalFrame& frame, const ComplexVector& psi);

// N−1 pairs (φ_k, φ̃_k) with ⟨φ̃_k|ψ⟩ = 0 and ⟨φ̃_k|φ_k⟩ = 1.
std::vector<StatePair> biorthogonal_complement(const BiorthonormalFrame& frame,
                                               const StatePair& pair);

StatePair apply_gauge(const StatePair& pair, const GaugeTransform& g);

}  // namespace nhphase
