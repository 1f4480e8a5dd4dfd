#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "nhphase/biorthogonal.hpp"
#include "nhphase/dynamics.hpp"
#include "nhphase/phase_geometry.hpp"

namespace nhphase {

// Auxiliary state used to define the phase between biorthogonal endpoints.
struct AnchorState {
    StatePair pair;
    double min_overlap = 0.0;  // smallest overlap magnitude it must support
};

enum class PhaseMode { direct, anchored };

struct PhaseResult {
    PhaseValue pancharatnam;                  // θ^GP term
    Complex dynamical{0.0, 0.0};              // γ^dyn = −∫⟨ψ̃|H|ψ⟩dt
    Complex geometric{0.0, 0.0};              // pancharatnam.value − dynamical
    std::optional<StatePair> anchor_used;
    Complex endpoint_overlap{0.0, 0.0};       // ⟨ψ̃(0)|ψ(t)⟩
    PhaseMode mode = PhaseMode::direct;
    // Difference from the direct evaluation, reported when the endpoints
    // are not biorthogonal and an anchor was used anyway.
    std::optional<Complex> direct_discrepancy;
};

// Non-biorthogonal endpoints: θ^GP from the endpoint overlap ratio with
// continuity unwrapping along the trajectory, minus the dynamical phase.
PhaseResult geometric_phase(const Trajectory& traj, const HamiltonianPath& path,
                            double tol_bio = 1e-6);

// Endpoints bridged through an anchor:
// θ = −(i/2)·log[⟨ψ̃(0)|a⟩⟨ã|ψ(t)⟩ / (⟨ψ̃(t)|a⟩⟨ã|ψ(0)⟩)], principal branch.
PhaseResult geometric_phase_anchored(const Trajectory& traj,
                                     const HamiltonianPath& path,
                                     const AnchorState& anchor,
                                     double tol_bio = 1e-6);

// Deterministic anchor search: frame triples (or the standard basis), then
// discrete-Fourier superpositions, then seeded random self-dual states.
AnchorState auto_anchor(std::span<const StatePair> endpoints, std::uint64_t seed,
                        double tol_bio = 1e-6, std::size_t budget = 1000,
                        const BiorthonormalFrame* frame = nullptr);

// −(i/2)·log of the anchored three-vertex ratio
//   ⟨x̃|a⟩⟨ã|y⟩⟨ỹ|x⟩ / (⟨ã|x⟩⟨ỹ|a⟩⟨x̃|y⟩).
Complex bargmann_bracket(const StatePair& x, const StatePair& a, const StatePair& y,
                         double tol_bio = 1e-6);

struct OffdiagonalPhase {
    Complex value{0.0, 0.0};       // γ_jk
    Complex bracket_jk{0.0, 0.0};  // bracket over (j(0), a, k(t))
    Complex bracket_kj{0.0, 0.0};  // bracket over (k(0), a, j(t))
    PhaseResult gamma_j;
    PhaseResult gamma_k;
};

// γ_jk = bracket_jk + bracket_kj + γ^geo_j(0,t) + γ^geo_k(0,t).
OffdiagonalPhase offdiagonal_phase(const Trajectory& traj_j, const Trajectory& traj_k,
                                   const HamiltonianPath& path,
                                   const AnchorState& anchor, double tol_bio = 1e-6);

}  // namespace nhphase
