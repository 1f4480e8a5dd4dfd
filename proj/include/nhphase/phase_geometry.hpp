#pragma once

#include <array>
#include <span>
#include <vector>

#include "nhphase/biorthogonal.hpp"
#include "nhphase/dynamics.hpp"
#include "nhphase/linalg.hpp"

namespace nhphase {

// A complex phase: real part is an ordinary phase in radians, imaginary part
// a log-modulus change. branch_offset counts the multiples of π separating
// value from its principal representative in (−π/2, π/2].
struct PhaseValue {
    Complex value{0.0, 0.0};
    int branch_offset = 0;
};

// −(i/2)·log(ratio) on the principal branch; a ratio exactly on the negative
// real axis takes real part +π/2.
PhaseValue principal_half_log(Complex ratio);

// Continuity-unwrapped −(i/2)·log over a sequence of ratios starting at 1.
PhaseValue unwrap_half_log(std::span<const Complex> ratios);

// In-phase representative of the ray of pair: both members rotated by −θ.
StatePair phase_shifted(const StatePair& pair, Complex theta);

struct GeodesicPath {
    std::vector<StatePair> samples;  // uniform s ∈ [0, 1]
    std::array<StatePair, 2> endpoints;

    double spacing() const {
        return 1.0 / static_cast<double>(samples.size() - 1);
    }
};

struct ConnectionSample {
    double s = 0.0;
    Complex value{0.0, 0.0};
};

// ⟨ψ̃₁e^{−iθ} + ψ̃₂ | ψ₁e^{iθ} + ψ₂⟩ = 2 + e^{iθ}⟨ψ̃₂|ψ₁⟩ + e^{−iθ}⟨ψ̃₁|ψ₂⟩
Complex interference_intensity(const StatePair& p1, const StatePair& p2, Complex theta);

// √(⟨ψ̃₁|ψ₂⟩/⟨ψ̃₂|ψ₁⟩) − 1; zero means the pairs are in phase.
Complex in_phase_residual(const StatePair& p1, const StatePair& p2,
                          double tol_bio = 1e-6);

// θ^GP = −(i/2)·log(⟨ψ̃₁|ψ₂⟩/⟨ψ̃₂|ψ₁⟩), principal branch.
PhaseValue pancharatnam_phase(const StatePair& p1, const StatePair& p2,
                              double tol_bio = 1e-6);

// Sampled-curve operations; h is the uniform parameter spacing. Second-order
// finite differences, one-sided at the ends.
ConnectionSample connection_sample(std::span<const StatePair> samples, double h,
                                   std::size_t index);
ComplexVector covariant_derivative(std::span<const StatePair> samples, double h,
                                   std::size_t index);
Complex metric_element(std::span<const StatePair> samples, double h,
                       std::size_t index);
Complex path_length(std::span<const StatePair> samples, double h);

ConnectionSample connection_sample(const Trajectory& traj, std::size_t index);
ComplexVector covariant_derivative(const Trajectory& traj, std::size_t index);
Complex metric_element(const Trajectory& traj, std::size_t index);

ConnectionSample connection_sample(const GeodesicPath& path, std::size_t index);
ComplexVector covariant_derivative(const GeodesicPath& path, std::size_t index);
Complex metric_element(const GeodesicPath& path, std::size_t index);
Complex path_length(const GeodesicPath& path);

// Parallel-gauge geodesic between the rays of p1 and p2: every sample is
// binormalized, in phase with p1, and carries vanishing connection.
GeodesicPath geodesic_between(const StatePair& p1, const StatePair& p2,
                              std::size_t sample_count, double tol_bio = 1e-6);

// Max ray-space geodesic-equation residual over interior samples (state and
// dual equations both); vanishes as O(h²) on geodesic_between output.
double geodesic_residual(std::span<const StatePair> samples, double h);
double geodesic_residual(const GeodesicPath& path);

// −i ∫ A^GP ds by composite quadrature of finite-difference samples.
PhaseValue connection_line_integral(std::span<const StatePair> samples, double h);
PhaseValue connection_line_integral(const GeodesicPath& path);

// Accumulated per-edge Pancharatnam phase over the vertex list.
PhaseValue polygon_phase(std::span<const StatePair> vertices, bool closed,
                         double tol_bio = 1e-6);

// Continuum limit of the closed polygon over a sampled trajectory:
// −(i/2)·log(⟨ψ̃(1)|ψ(0)⟩/⟨ψ̃(0)|ψ(1)⟩) − i∫⟨ψ̃|dψ/ds⟩ ds.
PhaseValue polygon_limit_phase(const Trajectory& traj, double tol_bio = 1e-6);

}  // namespace nhphase
