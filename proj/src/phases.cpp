#include "nhphase/phases.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

namespace nhphase {

namespace {

void check_anchor_overlap(Complex overlap, const char* label, double tol_bio,
                          const char* op) {
    if (std::abs(overlap) <= tol_bio) {
        std::ostringstream os;
        os << "anchor overlap " << label << " has magnitude " << std::abs(overlap)
           << " at or below tol_bio " << tol_bio;
        throw AnchorError(op, os.str());
    }
}

// Endpoint overlap ratio unwrapped along the trajectory; samples where either
// overlap collapses are skipped (the endpoint value does not depend on them).
PhaseValue unwrapped_endpoint_phase(const Trajectory& traj, double tol_bio) {
    const StatePair& start = traj.pairs.front();
    std::vector<Complex> ratios;
    ratios.reserve(traj.pairs.size());
    const double skip = tol_bio * 1e-3;
    for (std::size_t i = 0; i < traj.pairs.size(); ++i) {
        const Complex num = inner(start.dual, traj.pairs[i].state);
        const Complex den = inner(traj.pairs[i].dual, start.state);
        const bool endpoint = (i == 0 || i + 1 == traj.pairs.size());
        if (!endpoint && (std::abs(num) <= skip || std::abs(den) <= skip)) continue;
        ratios.push_back(num / den);
    }
    return unwrap_half_log(ratios);
}

}  // namespace

PhaseResult geometric_phase(const Trajectory& traj, const HamiltonianPath& path,
                            double tol_bio) {
    if (traj.pairs.size() < 3)
        throw GridError("geometric_phase", "need at least 3 trajectory samples");
    const StatePair& start = traj.pairs.front();
    const StatePair& end = traj.pairs.back();
    const Complex forward = inner(start.dual, end.state);
    const Complex backward = inner(end.dual, start.state);
    if (std::abs(forward) <= tol_bio || std::abs(backward) <= tol_bio) {
        std::ostringstream os;
        os << "endpoints are biorthogonal (overlaps " << std::abs(forward) << ", "
           << std::abs(backward) << "); use geometric_phase_anchored";
        throw BiorthogonalError("geometric_phase", os.str());
    }

    PhaseResult result;
    result.pancharatnam = unwrapped_endpoint_phase(traj, tol_bio);
    result.dynamical = dynamical_phase(traj, path);
    result.geometric = result.pancharatnam.value - result.dynamical;
    result.endpoint_overlap = forward;
    result.mode = PhaseMode::direct;
    return result;
}

PhaseResult geometric_phase_anchored(const Trajectory& traj,
                                     const HamiltonianPath& path,
                                     const AnchorState& anchor, double tol_bio) {
    if (traj.pairs.size() < 3)
        throw GridError("geometric_phase_anchored", "need at least 3 trajectory samples");
    const StatePair& start = traj.pairs.front();
    const StatePair& end = traj.pairs.back();
    const StatePair& a = anchor.pair;

    const Complex start_a = inner(start.dual, a.state);
    const Complex a_end = inner(a.dual, end.state);
    const Complex end_a = inner(end.dual, a.state);
    const Complex a_start = inner(a.dual, start.state);
    check_anchor_overlap(start_a, "<dual(0)|a>", tol_bio, "geometric_phase_anchored");
    check_anchor_overlap(a_end, "<a~|state(t)>", tol_bio, "geometric_phase_anchored");
    check_anchor_overlap(end_a, "<dual(t)|a>", tol_bio, "geometric_phase_anchored");
    check_anchor_overlap(a_start, "<a~|state(0)>", tol_bio, "geometric_phase_anchored");

    PhaseResult result;
    result.pancharatnam = principal_half_log((start_a * a_end) / (end_a * a_start));
    result.dynamical = dynamical_phase(traj, path);
    result.geometric = result.pancharatnam.value - result.dynamical;
    result.anchor_used = a;
    result.endpoint_overlap = inner(start.dual, end.state);
    result.mode = PhaseMode::anchored;

    const Complex backward = inner(end.dual, start.state);
    if (std::abs(result.endpoint_overlap) > tol_bio && std::abs(backward) > tol_bio) {
        const PhaseResult direct = geometric_phase(traj, path, tol_bio);
        result.direct_discrepancy = result.geometric - direct.geometric;
    }
    return result;
}

AnchorState auto_anchor(std::span<const StatePair> endpoints, std::uint64_t seed,
                        double tol_bio, std::size_t budget,
                        const BiorthonormalFrame* frame) {
    if (endpoints.empty())
        throw ValidationError("auto_anchor", "need at least one endpoint");
    const Eigen::Index n = endpoints.front().state.size();

    const auto score = [&](const StatePair& candidate) {
        double worst = std::numeric_limits<double>::infinity();
        for (const StatePair& e : endpoints) {
            worst = std::min(worst, std::abs(inner(e.dual, candidate.state)));
            worst = std::min(worst, std::abs(inner(candidate.dual, e.state)));
        }
        return worst;
    };

    AnchorState best;
    best.min_overlap = -1.0;
    const auto consider = [&](const StatePair& candidate) {
        const double s = score(candidate);
        if (s > best.min_overlap) best = AnchorState{candidate, s};
    };

    if (frame != nullptr && frame->dim() == n) {
        for (Eigen::Index k = 0; k < n; ++k)
            consider(StatePair{frame->right.col(k), frame->left.col(k)});
    } else {
        for (Eigen::Index k = 0; k < n; ++k) {
            ComplexVector e = ComplexVector::Zero(n);
            e[k] = 1.0;
            consider(StatePair{e, e});
        }
    }

    // Discrete-Fourier superpositions: uniform modulus, self-dual.
    for (Eigen::Index k = 0; k < n; ++k) {
        ComplexVector v(n);
        for (Eigen::Index j = 0; j < n; ++j) {
            const double arg =
                2.0 * std::numbers::pi * static_cast<double>(j * k) / static_cast<double>(n);
            v[j] = std::exp(kImag * arg) / std::sqrt(static_cast<double>(n));
        }
        consider(StatePair{v, v});
    }

    std::mt19937_64 rng(seed);
    const auto uniform = [&rng]() {
        return std::ldexp(static_cast<double>(rng()), -64);
    };
    for (std::size_t draw = 0; draw < budget; ++draw) {
        ComplexVector v(n);
        for (Eigen::Index j = 0; j < n; ++j) {
            // Box-Muller, explicit for bit-stable output across library versions.
            const double u1 = std::max(uniform(), 1e-300);
            const double u2 = uniform();
            const double r = std::sqrt(-2.0 * std::log(u1));
            v[j] = Complex{r * std::cos(2.0 * std::numbers::pi * u2),
                           r * std::sin(2.0 * std::numbers::pi * u2)};
        }
        v.normalize();
        consider(StatePair{v, v});
    }

    if (best.min_overlap <= tol_bio) {
        std::ostringstream os;
        os << "no candidate above tol_bio " << tol_bio << " after " << budget
           << " draws (best " << best.min_overlap << ")";
        throw AnchorSearchError("auto_anchor", os.str());
    }
    return best;
}

Complex bargmann_bracket(const StatePair& x, const StatePair& a, const StatePair& y,
                         double tol_bio) {
    struct Term {
        Complex value;
        const char* label;
    };
    const Term nums[] = {{inner(x.dual, a.state), "<x~|a>"},
                         {inner(a.dual, y.state), "<a~|y>"},
                         {inner(y.dual, x.state), "<y~|x>"}};
    const Term dens[] = {{inner(a.dual, x.state), "<a~|x>"},
                         {inner(y.dual, a.state), "<y~|a>"},
                         {inner(x.dual, y.state), "<x~|y>"}};
    Complex num{1.0, 0.0}, den{1.0, 0.0};
    for (const Term& t : nums) {
        if (std::abs(t.value) <= tol_bio) {
            std::ostringstream os;
            os << "overlap " << t.label << " has magnitude " << std::abs(t.value)
               << " at or below tol_bio";
            throw BiorthogonalError("bargmann_bracket", os.str());
        }
        num *= t.value;
    }
    for (const Term& t : dens) {
        if (std::abs(t.value) <= tol_bio) {
            std::ostringstream os;
            os << "overlap " << t.label << " has magnitude " << std::abs(t.value)
               << " at or below tol_bio";
            throw BiorthogonalError("bargmann_bracket", os.str());
        }
        den *= t.value;
    }
    return principal_half_log(num / den).value;
}

OffdiagonalPhase offdiagonal_phase(const Trajectory& traj_j, const Trajectory& traj_k,
                                   const HamiltonianPath& path,
                                   const AnchorState& anchor, double tol_bio) {
    if (traj_j.grid.t0 != traj_k.grid.t0 || traj_j.grid.t1 != traj_k.grid.t1 ||
        traj_j.grid.steps != traj_k.grid.steps) {
        throw GridError("offdiagonal_phase", "trajectories use different grids");
    }

    OffdiagonalPhase out;
    out.bracket_jk = bargmann_bracket(traj_j.pairs.front(), anchor.pair,
                                      traj_k.pairs.back(), tol_bio);
    out.bracket_kj = bargmann_bracket(traj_k.pairs.front(), anchor.pair,
                                      traj_j.pairs.back(), tol_bio);
    out.gamma_j = geometric_phase_anchored(traj_j, path, anchor, tol_bio);
    out.gamma_k = geometric_phase_anchored(traj_k, path, anchor, tol_bio);
    out.value = out.bracket_jk + out.bracket_kj + out.gamma_j.geometric +
                out.gamma_k.geometric;
    return out;
}

}  // namespace nhphase
