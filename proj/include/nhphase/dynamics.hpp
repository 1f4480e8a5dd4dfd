#pragma once

#include <cstddef>
#include <vector>

#include "nhphase/biorthogonal.hpp"
#include "nhphase/linalg.hpp"

namespace nhphase {

// Scalar time profile: polynomial plus a Fourier series on a base frequency,
//   c(t) = Σ_k poly[k] t^k + Σ_j cosine[j-1] cos(j ω t) + sine[j-1] sin(j ω t).
struct CoefficientFunction {
    std::vector<double> poly;
    double omega = 0.0;
    std::vector<double> cosine;
    std::vector<double> sine;

    double operator()(double t) const;
};

struct HamiltonianTerm {
    ComplexMatrix matrix;
    CoefficientFunction coeff;
};

// H(t) = Σ terms coeff(t) * matrix over the domain [t0, t1], ħ = 1.
struct HamiltonianPath {
    Eigen::Index dim = 0;
    std::vector<HamiltonianTerm> terms;
    double t0 = 0.0;
    double t1 = 1.0;

    ComplexMatrix at(double t) const;
};

struct TimeGrid {
    double t0 = 0.0;
    double t1 = 1.0;
    std::size_t steps = 1;

    double spacing() const { return (t1 - t0) / static_cast<double>(steps); }
    double time(std::size_t i) const {
        return t0 + (t1 - t0) * (static_cast<double>(i) / static_cast<double>(steps));
    }
};

struct Trajectory {
    TimeGrid grid;
    std::vector<StatePair> pairs;  // one per grid sample
    double max_binorm_drift = 0.0;
};

// Joint fixed-step RK4 on dψ/dt = −iH(t)ψ and dψ̃/dt = −iH†(t)ψ̃.
// No renormalization is applied; the binormalization drift is recorded and
// failures above drift_fail raise DriftError.
Trajectory evolve_pair(const HamiltonianPath& path, const StatePair& initial,
                       const TimeGrid& grid, double drift_fail = 1e-4);

// ∫ ⟨ψ̃(t)| H(t) |ψ(t)⟩ dt by composite Simpson on the trajectory grid.
Complex expectation_integral(const Trajectory& traj, const HamiltonianPath& path);

// γ^dyn = −expectation_integral.
Complex dynamical_phase(const Trajectory& traj, const HamiltonianPath& path);

double drift_report(const Trajectory& traj);

Trajectory slice(const Trajectory& traj, std::size_t first, std::size_t last);
Trajectory reversed(const Trajectory& traj);

// Composite Simpson weights for an arbitrary sample count >= 3 (odd interval
// counts close with a 3/8 segment).
Complex simpson(const std::vector<Complex>& f, double h);

}  // namespace nhphase
