#include "nhphase/dynamics.hpp"

#include <cmath>
#include <sstream>

namespace nhphase {

double CoefficientFunction::operator()(double t) const {
    double value = 0.0;
    for (std::size_t k = poly.size(); k-- > 0;) value = value * t + poly[k];
    for (std::size_t j = 0; j < cosine.size(); ++j)
        value += cosine[j] * std::cos(static_cast<double>(j + 1) * omega * t);
    for (std::size_t j = 0; j < sine.size(); ++j)
        value += sine[j] * std::sin(static_cast<double>(j + 1) * omega * t);
    return value;
}

ComplexMatrix HamiltonianPath::at(double t) const {
    ComplexMatrix H = ComplexMatrix::Zero(dim, dim);
    for (const HamiltonianTerm& term : terms) H += term.coeff(t) * term.matrix;
    return H;
}

Trajectory evolve_pair(const HamiltonianPath& path, const StatePair& initial,
                       const TimeGrid& grid, double drift_fail) {
    if (initial.state.size() != path.dim || initial.dual.size() != path.dim)
        throw DimensionError("evolve_pair", "initial pair does not match Hamiltonian dimension");
    if (grid.t1 <= grid.t0) throw GridError("evolve_pair", "grid requires t1 > t0");
    const double slack = 1e-12 * (path.t1 - path.t0);
    if (grid.t0 < path.t0 - slack || grid.t1 > path.t1 + slack)
        throw ValidationError("evolve_pair", "grid lies outside the Hamiltonian domain");
    {
        const double defect = binorm_defect(initial);
        if (defect > 1e-12) {
            std::ostringstream os;
            os << "initial pair not binormalized, defect " << defect;
            throw ValidationError("evolve_pair", os.str());
        }
    }

    const double h = grid.spacing();
    Trajectory traj;
    traj.grid = grid;
    traj.pairs.reserve(grid.steps + 1);
    traj.pairs.push_back(initial);
    traj.max_binorm_drift = binorm_defect(initial);

    ComplexVector psi = initial.state;
    ComplexVector dual = initial.dual;
    const Complex mi{0.0, -1.0};
    for (std::size_t i = 0; i < grid.steps; ++i) {
        const double t = grid.time(i);
        const ComplexMatrix Ha = path.at(t);
        const ComplexMatrix Hb = path.at(t + 0.5 * h);
        const ComplexMatrix Hc = path.at(t + h);
        const ComplexMatrix HaT = Ha.adjoint();
        const ComplexMatrix HbT = Hb.adjoint();
        const ComplexMatrix HcT = Hc.adjoint();

        const ComplexVector k1s = mi * (Ha * psi);
        const ComplexVector k1d = mi * (HaT * dual);
        const ComplexVector k2s = mi * (Hb * (psi + 0.5 * h * k1s));
        const ComplexVector k2d = mi * (HbT * (dual + 0.5 * h * k1d));
        const ComplexVector k3s = mi * (Hb * (psi + 0.5 * h * k2s));
        const ComplexVector k3d = mi * (HbT * (dual + 0.5 * h * k2d));
        const ComplexVector k4s = mi * (Hc * (psi + h * k3s));
        const ComplexVector k4d = mi * (HcT * (dual + h * k3d));

        psi += (h / 6.0) * (k1s + 2.0 * k2s + 2.0 * k3s + k4s);
        dual += (h / 6.0) * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);

        traj.pairs.push_back(StatePair{psi, dual});
        const double defect = binorm_defect(traj.pairs.back());
        // Negated comparison also catches a blow-up turning the defect NaN.
        if (!(defect <= drift_fail)) {
            std::ostringstream os;
            os << "binormalization drift " << defect << " exceeds " << drift_fail
               << " at t = " << grid.time(i + 1) << "; reduce the step size";
            throw DriftError("evolve_pair", os.str());
        }
        traj.max_binorm_drift = std::max(traj.max_binorm_drift, defect);
    }
    return traj;
}

Complex simpson(const std::vector<Complex>& f, double h) {
    const std::size_t m = f.size() - 1;  // interval count
    Complex total{0.0, 0.0};
    std::size_t even_end = m;  // intervals handled by the 1/3 rule
    if (m % 2 != 0) even_end = m - 3;
    for (std::size_t i = 0; i + 2 <= even_end; i += 2)
        total += (h / 3.0) * (f[i] + 4.0 * f[i + 1] + f[i + 2]);
    if (m % 2 != 0) {
        const std::size_t b = even_end;
        total += (3.0 * h / 8.0) * (f[b] + 3.0 * f[b + 1] + 3.0 * f[b + 2] + f[b + 3]);
    }
    return total;
}

Complex expectation_integral(const Trajectory& traj, const HamiltonianPath& path) {
    if (traj.grid.steps < 2)
        throw GridError("dynamical_phase", "composite Simpson needs at least 2 steps");
    std::vector<Complex> f;
    f.reserve(traj.pairs.size());
    for (std::size_t i = 0; i < traj.pairs.size(); ++i) {
        const double t = traj.grid.time(i);
        f.push_back(inner(traj.pairs[i].dual, path.at(t) * traj.pairs[i].state));
    }
    return simpson(f, traj.grid.spacing());
}

Complex dynamical_phase(const Trajectory& traj, const HamiltonianPath& path) {
    return -expectation_integral(traj, path);
}

double drift_report(const Trajectory& traj) { return traj.max_binorm_drift; }

Trajectory slice(const Trajectory& traj, std::size_t first, std::size_t last) {
    if (last <= first || last >= traj.pairs.size())
        throw GridError("slice", "invalid sample range");
    Trajectory out;
    out.grid = TimeGrid{traj.grid.time(first), traj.grid.time(last), last - first};
    out.pairs.assign(traj.pairs.begin() + static_cast<std::ptrdiff_t>(first),
                     traj.pairs.begin() + static_cast<std::ptrdiff_t>(last) + 1);
    out.max_binorm_drift = 0.0;
    for (const StatePair& p : out.pairs)
        out.max_binorm_drift = std::max(out.max_binorm_drift, binorm_defect(p));
    return out;
}

Trajectory reversed(const Trajectory& traj) {
    Trajectory out;
    out.grid = traj.grid;
    out.pairs.assign(traj.pairs.rbegin(), traj.pairs.rend());
    out.max_binorm_drift = traj.max_binorm_drift;
    return out;
}

}  // namespace nhphase
