#include "nhphase/phase_geometry.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace nhphase {

namespace {

constexpr double kPi = std::numbers::pi;

Complex fold_negative_axis(Complex z) {
    // Puts −x − 0i onto the +π side of the log branch cut.
    if (z.imag() == 0.0 && z.real() < 0.0) return Complex{z.real(), 0.0};
    return z;
}

int offset_of(Complex value) {
    // value = principal + k·π with Re(principal) ∈ (−π/2, π/2]
    return static_cast<int>(std::lround(std::ceil(value.real() / kPi - 0.5)));
}

void check_overlap(Complex overlap, const char* op, const char* label, double tol_bio) {
    if (std::abs(overlap) <= tol_bio) {
        std::ostringstream os;
        os << "overlap " << label << " has magnitude " << std::abs(overlap)
           << " at or below tol_bio " << tol_bio;
        throw BiorthogonalError(op, os.str());
    }
}

void require_binormalized(const StatePair& pair, const char* op, double tol) {
    const double defect = binorm_defect(pair);
    if (defect > tol) {
        std::ostringstream os;
        os << "pair is not binormalized, defect " << defect;
        throw ValidationError(op, os.str());
    }
}

enum class Side { state, dual };

const ComplexVector& member(const StatePair& p, Side side) {
    return side == Side::state ? p.state : p.dual;
}

// d/ds by central differences, one-sided second-order stencils at the ends.
ComplexVector fd_derivative(std::span<const StatePair> samples, double h,
                            std::size_t i, Side side) {
    const std::size_t n = samples.size();
    if (i == 0)
        return (-3.0 * member(samples[0], side) + 4.0 * member(samples[1], side) -
                member(samples[2], side)) /
               (2.0 * h);
    if (i == n - 1)
        return (3.0 * member(samples[n - 1], side) - 4.0 * member(samples[n - 2], side) +
                member(samples[n - 3], side)) /
               (2.0 * h);
    return (member(samples[i + 1], side) - member(samples[i - 1], side)) / (2.0 * h);
}

void check_curve(std::span<const StatePair> samples, std::size_t minimum,
                 const char* op) {
    if (samples.size() < minimum) {
        std::ostringstream os;
        os << "need at least " << minimum << " samples, got " << samples.size();
        throw GridError(op, os.str());
    }
}

}  // namespace

PhaseValue principal_half_log(Complex ratio) {
    const Complex value = Complex{0.0, -0.5} * std::log(fold_negative_axis(ratio));
    return PhaseValue{value, 0};
}

PhaseValue unwrap_half_log(std::span<const Complex> ratios) {
    Complex total{0.0, 0.0};
    Complex prev{1.0, 0.0};
    for (const Complex& r : ratios) {
        total += principal_half_log(r / prev).value;
        prev = r;
    }
    return PhaseValue{total, offset_of(total)};
}

StatePair phase_shifted(const StatePair& pair, Complex theta) {
    return StatePair{pair.state * std::exp(-kImag * theta),
                     pair.dual * std::exp(-kImag * std::conj(theta))};
}

Complex interference_intensity(const StatePair& p1, const StatePair& p2,
                               Complex theta) {
    require_binormalized(p1, "interference_intensity", 1e-8);
    require_binormalized(p2, "interference_intensity", 1e-8);
    return 2.0 + std::exp(kImag * theta) * inner(p2.dual, p1.state) +
           std::exp(-kImag * theta) * inner(p1.dual, p2.state);
}

Complex in_phase_residual(const StatePair& p1, const StatePair& p2, double tol_bio) {
    const Complex a = inner(p1.dual, p2.state);
    const Complex b = inner(p2.dual, p1.state);
    check_overlap(a, "in_phase_residual", "<dual_1|state_2>", tol_bio);
    check_overlap(b, "in_phase_residual", "<dual_2|state_1>", tol_bio);
    // exp(i·θ^GP) is the principal square root with the same cut convention.
    return std::exp(kImag * principal_half_log(a / b).value) - 1.0;
}

PhaseValue pancharatnam_phase(const StatePair& p1, const StatePair& p2,
                              double tol_bio) {
    const Complex a = inner(p1.dual, p2.state);
    const Complex b = inner(p2.dual, p1.state);
    check_overlap(a, "pancharatnam_phase", "<dual_1|state_2>", tol_bio);
    check_overlap(b, "pancharatnam_phase", "<dual_2|state_1>", tol_bio);
    return principal_half_log(a / b);
}

ConnectionSample connection_sample(std::span<const StatePair> samples, double h,
                                   std::size_t index) {
    check_curve(samples, 3, "connection_sample");
    const ComplexVector dpsi = fd_derivative(samples, h, index, Side::state);
    return ConnectionSample{static_cast<double>(index) * h,
                            inner(samples[index].dual, dpsi)};
}

ComplexVector covariant_derivative(std::span<const StatePair> samples, double h,
                                   std::size_t index) {
    check_curve(samples, 3, "covariant_derivative");
    const ComplexVector dpsi = fd_derivative(samples, h, index, Side::state);
    const Complex a = inner(samples[index].dual, dpsi);
    return dpsi - a * samples[index].state;
}

Complex metric_element(std::span<const StatePair> samples, double h,
                       std::size_t index) {
    check_curve(samples, 3, "metric_element");
    const ComplexVector dpsi = fd_derivative(samples, h, index, Side::state);
    const ComplexVector ddual = fd_derivative(samples, h, index, Side::dual);
    const Complex a = inner(samples[index].dual, dpsi);
    const Complex at = inner(samples[index].state, ddual);
    const ComplexVector cov_state = dpsi - a * samples[index].state;
    const ComplexVector cov_dual = ddual - at * samples[index].dual;
    return inner(cov_dual, cov_state);
}

Complex path_length(std::span<const StatePair> samples, double h) {
    check_curve(samples, 3, "path_length");
    std::vector<Complex> f(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
        f[i] = std::sqrt(metric_element(samples, h, i));
    return simpson(f, h);
}

ConnectionSample connection_sample(const Trajectory& traj, std::size_t index) {
    ConnectionSample cs = connection_sample(std::span<const StatePair>(traj.pairs),
                                            traj.grid.spacing(), index);
    cs.s = traj.grid.time(index);
    return cs;
}

ComplexVector covariant_derivative(const Trajectory& traj, std::size_t index) {
    return covariant_derivative(std::span<const StatePair>(traj.pairs),
                                traj.grid.spacing(), index);
}

Complex metric_element(const Trajectory& traj, std::size_t index) {
    return metric_element(std::span<const StatePair>(traj.pairs),
                          traj.grid.spacing(), index);
}

ConnectionSample connection_sample(const GeodesicPath& path, std::size_t index) {
    return connection_sample(std::span<const StatePair>(path.samples), path.spacing(),
                             index);
}

ComplexVector covariant_derivative(const GeodesicPath& path, std::size_t index) {
    return covariant_derivative(std::span<const StatePair>(path.samples),
                                path.spacing(), index);
}

Complex metric_element(const GeodesicPath& path, std::size_t index) {
    return metric_element(std::span<const StatePair>(path.samples), path.spacing(),
                          index);
}

Complex path_length(const GeodesicPath& path) {
    return path_length(std::span<const StatePair>(path.samples), path.spacing());
}

GeodesicPath geodesic_between(const StatePair& p1, const StatePair& p2,
                              std::size_t sample_count, double tol_bio) {
    if (sample_count < 2)
        throw GridError("geodesic_between", "need at least 2 samples");
    require_binormalized(p1, "geodesic_between", 1e-8);
    require_binormalized(p2, "geodesic_between", 1e-8);

    const Complex a = inner(p1.dual, p2.state);
    const Complex b = inner(p2.dual, p1.state);
    check_overlap(a, "geodesic_between", "<dual_1|state_2>", tol_bio);
    check_overlap(b, "geodesic_between", "<dual_2|state_1>", tol_bio);

    GeodesicPath out;
    out.endpoints = {p1, p2};
    out.samples.reserve(sample_count);

    // In-phase representative of p2's ray; ⟨ψ̃₁|φ(1)⟩ = ⟨φ̃(1)|ψ₁⟩ then holds.
    const Complex theta = principal_half_log(a / b).value;
    const StatePair target = phase_shifted(p2, theta);

    // The parallel-transported interpolation
    //   φ(s)  = cos(sα) ψ₁ + sin(sα) n,          α = arccos⟨ψ̃₁|φ(1)⟩,
    //   φ̃(s) = cos(sα*) ψ̃₁ + sin(sα*) ñ,
    // is a complex-affine combination of the endpoints with A^GP(s) = 0,
    // ⟨φ̃(s)|φ(s)⟩ = 1 and q(s) = 0 along the whole curve.
    const Complex c = inner(p1.dual, target.state);
    const Complex alpha = std::acos(c);
    const Complex d = std::sin(alpha);

    if (std::abs(d) <= 1e-12) {
        if (c.real() < 0.0)
            throw DegeneratePathError("geodesic_between",
                                      "ray passes through a biorthogonal point");
        for (std::size_t i = 0; i < sample_count; ++i) out.samples.push_back(p1);
        return out;
    }
    // cos(sα) has an interior zero exactly when α is real with α > π/2; the
    // curve then crosses a ray biorthogonal to the first endpoint.
    if (std::abs(alpha.imag()) <= 1e-9 && alpha.real() >= kPi / 2.0 - 1e-12) {
        throw DegeneratePathError(
            "geodesic_between",
            "overlap with the first endpoint vanishes along the path");
    }

    const ComplexVector n = (target.state - c * p1.state) / d;
    const ComplexVector nd = (target.dual - std::conj(c) * p1.dual) / std::conj(d);
    for (std::size_t i = 0; i < sample_count; ++i) {
        const double s =
            static_cast<double>(i) / static_cast<double>(sample_count - 1);
        const Complex cs = std::cos(s * alpha);
        if (std::abs(cs) <= 1e-12) {
            std::ostringstream os;
            os << "interior overlap with the first endpoint vanishes at s = " << s;
            throw DegeneratePathError("geodesic_between", os.str());
        }
        out.samples.push_back(
            StatePair{cs * p1.state + std::sin(s * alpha) * n,
                      std::cos(s * std::conj(alpha)) * p1.dual +
                          std::sin(s * std::conj(alpha)) * nd});
    }
    return out;
}

double geodesic_residual(std::span<const StatePair> samples, double h) {
    check_curve(samples, 5, "geodesic_residual");
    const std::size_t n = samples.size();

    std::vector<ComplexVector> vs(n), vd(n);
    std::vector<Complex> as(n), ad(n);
    for (std::size_t i = 0; i < n; ++i) {
        const ComplexVector dpsi = fd_derivative(samples, h, i, Side::state);
        const ComplexVector ddual = fd_derivative(samples, h, i, Side::dual);
        as[i] = inner(samples[i].dual, dpsi);
        ad[i] = inner(samples[i].state, ddual);
        vs[i] = dpsi - as[i] * samples[i].state;
        vd[i] = ddual - ad[i] * samples[i].dual;
    }

    // Interior excludes two samples at each end where the one-sided first
    // derivatives would degrade the second difference to first order.
    double worst = 0.0;
    for (std::size_t i = 2; i + 2 < n; ++i) {
        const ComplexVector dvs = (vs[i + 1] - vs[i - 1]) / (2.0 * h);
        const ComplexVector dvd = (vd[i + 1] - vd[i - 1]) / (2.0 * h);
        ComplexVector rs = dvs - as[i] * vs[i];
        ComplexVector rd = dvd - ad[i] * vd[i];
        // Ray-space residual: the component along the pair itself is gauge.
        rs -= inner(samples[i].dual, rs) * samples[i].state;
        rd -= inner(samples[i].state, rd) * samples[i].dual;
        worst = std::max(worst, std::max(rs.norm(), rd.norm()));
    }
    return worst;
}

double geodesic_residual(const GeodesicPath& path) {
    return geodesic_residual(std::span<const StatePair>(path.samples), path.spacing());
}

PhaseValue connection_line_integral(std::span<const StatePair> samples, double h) {
    check_curve(samples, 3, "connection_line_integral");
    std::vector<Complex> f(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
        f[i] = inner(samples[i].dual, fd_derivative(samples, h, i, Side::state));
    const Complex value = -kImag * simpson(f, h);
    return PhaseValue{value, offset_of(value)};
}

PhaseValue connection_line_integral(const GeodesicPath& path) {
    return connection_line_integral(std::span<const StatePair>(path.samples),
                                    path.spacing());
}

PhaseValue polygon_phase(std::span<const StatePair> vertices, bool closed,
                         double tol_bio) {
    if (vertices.size() < 2)
        throw GridError("polygon_phase", "need at least 2 vertices");
    const std::size_t edges = closed ? vertices.size() : vertices.size() - 1;
    Complex total{0.0, 0.0};
    for (std::size_t e = 0; e < edges; ++e) {
        const std::size_t u = e;
        const std::size_t v = (e + 1) % vertices.size();
        const Complex num = inner(vertices[u].dual, vertices[v].state);
        const Complex den = inner(vertices[v].dual, vertices[u].state);
        if (std::abs(num) <= tol_bio || std::abs(den) <= tol_bio) {
            std::ostringstream os;
            os << "edge " << u << "->" << v << " is biorthogonal (overlaps "
               << std::abs(num) << ", " << std::abs(den) << ")";
            throw BiorthogonalError("polygon_phase", os.str());
        }
        total += principal_half_log(num / den).value;
    }
    return PhaseValue{total, offset_of(total)};
}

PhaseValue polygon_limit_phase(const Trajectory& traj, double tol_bio) {
    if (traj.pairs.size() < 3)
        throw GridError("polygon_limit_phase", "need at least 3 trajectory samples");
    const StatePair& first = traj.pairs.front();
    const StatePair& last = traj.pairs.back();
    const Complex closing_num = inner(last.dual, first.state);
    const Complex closing_den = inner(first.dual, last.state);
    check_overlap(closing_num, "polygon_limit_phase", "<dual(1)|state(0)>", tol_bio);
    check_overlap(closing_den, "polygon_limit_phase", "<dual(0)|state(1)>", tol_bio);

    const Complex closing = principal_half_log(closing_num / closing_den).value;
    const Complex integral =
        connection_line_integral(std::span<const StatePair>(traj.pairs),
                                 traj.grid.spacing())
            .value;
    const Complex value = closing + integral;
    return PhaseValue{value, offset_of(value)};
}

}  // namespace nhphase
