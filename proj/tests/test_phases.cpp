#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>
#include <string>

#include "nhphase/phases.hpp"
#include "test_helpers.hpp"

using namespace nhphase;
using nhtest::Rng;
using std::numbers::pi;

namespace {

ComplexVector vec2(Complex a, Complex b) {
    ComplexVector v(2);
    v << a, b;
    return v;
}

HamiltonianPath constant_path(const ComplexMatrix& h, double t1 = 1.0) {
    HamiltonianPath path;
    path.dim = h.rows();
    path.t0 = 0.0;
    path.t1 = t1;
    path.terms.push_back({h, CoefficientFunction{{1.0}, 0.0, {}, {}}});
    return path;
}

// Trajectory with prescribed ends under a zero Hamiltonian; the dynamical
// term then vanishes and only the endpoint data enter the phases.
Trajectory synthetic_flip(const StatePair& from, const StatePair& to) {
    Trajectory traj;
    traj.grid = TimeGrid{0.0, 1.0, 2};
    traj.pairs = {from, nhtest::self_dual(vec2(1, 1) / std::sqrt(2.0)), to};
    return traj;
}

StatePair e1_pair() { return {vec2(1, 0), vec2(1, 0)}; }
StatePair e2_pair() { return {vec2(0, 1), vec2(0, 1)}; }

// Rotating spin-half cone at polar angle theta.
HamiltonianPath cone_path(double costh, double period) {
    HamiltonianPath path;
    path.dim = 2;
    path.t0 = 0;
    path.t1 = period;
    const double sinth = std::sqrt(1.0 - costh * costh);
    const double w = 2.0 * pi / period;
    ComplexMatrix sx(2, 2), sy(2, 2), sz(2, 2);
    sx << 0, 1, 1, 0;
    sy << 0, Complex{0, -1}, Complex{0, 1}, 0;
    sz << 1, 0, 0, -1;
    path.terms.push_back({0.5 * sinth * sx, CoefficientFunction{{}, w, {1.0}, {}}});
    path.terms.push_back({0.5 * sinth * sy, CoefficientFunction{{}, w, {}, {1.0}}});
    path.terms.push_back({0.5 * costh * sz, CoefficientFunction{{1.0}, 0.0, {}, {}}});
    return path;
}

}  // namespace

TEST_CASE("geometric phase of a constant-H eigenstate vanishes") {
    ComplexMatrix h = ComplexMatrix::Zero(2, 2);
    h.diagonal() << Complex{1, -0.3}, Complex{2.5, 0.4};
    const HamiltonianPath path = constant_path(h, 2.0);
    const Trajectory traj =
        evolve_pair(path, e1_pair(), TimeGrid{0, 2, 2000});
    const PhaseResult r = geometric_phase(traj, path);
    // theta = -E t (unwrapped) cancels against the dynamical term.
    CHECK(std::abs(r.pancharatnam.value - Complex{-2, 0.6}) < 1e-9);
    CHECK(std::abs(r.geometric) < 1e-9);
    CHECK(r.mode == PhaseMode::direct);
    CHECK(std::abs(r.geometric - (r.pancharatnam.value - r.dynamical)) == 0.0);
}

TEST_CASE("zero Hamiltonian gives vanishing phase components") {
    const HamiltonianPath path = constant_path(ComplexMatrix::Zero(2, 2));
    const Trajectory traj = evolve_pair(path, e1_pair(), TimeGrid{0, 1, 10});
    const PhaseResult r = geometric_phase(traj, path);
    CHECK(std::abs(r.pancharatnam.value) == 0.0);
    CHECK(std::abs(r.dynamical) == 0.0);
    CHECK(std::abs(r.geometric) == 0.0);
}

TEST_CASE("closed-loop geometric phase is gauge invariant modulo pi") {
    Rng rng(401);
    const HamiltonianPath path = nhtest::random_smooth_path(rng, 3, 1.0, 2.0);
    const Trajectory traj =
        evolve_pair(path, nhtest::random_pair(rng, 3), TimeGrid{0, 1, 10000});
    const Complex base = polygon_limit_phase(traj).value;

    Trajectory gauged = traj;
    const Complex rate{0.25, 0.1};
    for (std::size_t i = 0; i < gauged.pairs.size(); ++i) {
        const double t = gauged.grid.time(i);
        gauged.pairs[i] = apply_gauge(gauged.pairs[i], GaugeTransform{rate * t});
    }
    const Complex shifted = polygon_limit_phase(gauged).value;
    CHECK(std::abs(std::remainder(shifted.real() - base.real(), pi)) < 1e-8);
    CHECK(std::abs(shifted.imag() - base.imag()) < 1e-8);
}

TEST_CASE("biorthogonal endpoints require the anchored route") {
    const Trajectory traj = synthetic_flip(e1_pair(), e2_pair());
    const HamiltonianPath path = constant_path(ComplexMatrix::Zero(2, 2));
    CHECK_THROWS_AS((void)geometric_phase(traj, path), BiorthogonalError);
}

TEST_CASE("anchored phase worked examples") {
    const Trajectory traj = synthetic_flip(e1_pair(), e2_pair());
    const HamiltonianPath path = constant_path(ComplexMatrix::Zero(2, 2));

    const AnchorState plus{nhtest::self_dual(vec2(1, 1) / std::sqrt(2.0)), 1 / std::sqrt(2.0)};
    const PhaseResult r1 = geometric_phase_anchored(traj, path, plus);
    CHECK(std::abs(r1.geometric) < 1e-12);
    CHECK(r1.mode == PhaseMode::anchored);
    CHECK(r1.anchor_used.has_value());

    const AnchorState circ{nhtest::self_dual(vec2(1, Complex{0, 1}) / std::sqrt(2.0)),
                           1 / std::sqrt(2.0)};
    const PhaseResult r2 = geometric_phase_anchored(traj, path, circ);
    CHECK(std::abs(r2.pancharatnam.value - Complex{pi / 2, 0}) < 1e-12);
}

TEST_CASE("anchored evaluation on open endpoints reports the discrepancy") {
    Rng rng(431);
    const HamiltonianPath path = nhtest::random_smooth_path(rng, 3, 1.0, 2.0);
    const Trajectory traj =
        evolve_pair(path, nhtest::random_pair(rng, 3), TimeGrid{0, 1, 200});
    const AnchorState anchor{nhtest::random_pair(rng, 3), 0.1};
    const PhaseResult anchored = geometric_phase_anchored(traj, path, anchor);
    const PhaseResult direct = geometric_phase(traj, path);
    REQUIRE(anchored.direct_discrepancy.has_value());
    CHECK(std::abs(*anchored.direct_discrepancy -
                   (anchored.geometric - direct.geometric)) < 1e-14);
}

TEST_CASE("anchor overlaps below tolerance raise AnchorError") {
    const HamiltonianPath path = constant_path(ComplexMatrix::Zero(2, 2));
    const Trajectory traj = evolve_pair(path, e1_pair(), TimeGrid{0, 1, 4});
    const AnchorState bad{e2_pair(), 0.0};
    try {
        (void)geometric_phase_anchored(traj, path, bad);
        FAIL("expected AnchorError");
    } catch (const AnchorError& e) {
        CHECK(std::string(e.what()).find("dual(0)|a") != std::string::npos);
    }
}

TEST_CASE("intermediate-state anchor reproduces the two-segment composition") {
    Rng rng(411);
    for (int trial = 0; trial < 20; ++trial) {
        const HamiltonianPath path = nhtest::random_smooth_path(rng, 3, 1.2, 3.0);
        const Trajectory traj =
            evolve_pair(path, nhtest::random_pair(rng, 3), TimeGrid{0, 1, 300});
        const std::size_t cut = 100;
        const AnchorState anchor{traj.pairs[cut], 1.0};

        const PhaseResult whole = geometric_phase_anchored(traj, path, anchor);
        const PhaseResult left = geometric_phase(slice(traj, 0, cut), path);
        const PhaseResult right = geometric_phase(slice(traj, cut, 300), path);

        const Complex composed = left.geometric + right.geometric;
        CHECK(std::abs(std::remainder(whole.geometric.real() - composed.real(), pi)) <
              1e-9);
        CHECK(std::abs(whole.geometric.imag() - composed.imag()) < 1e-9);
    }
}

TEST_CASE("auto_anchor finds superpositions and stays deterministic") {
    const StatePair single[] = {e1_pair()};
    const AnchorState a1 = auto_anchor(single, 9, 1e-6, 200);
    CHECK(a1.min_overlap >= 1 / std::sqrt(2.0) - 1e-12);

    const StatePair both[] = {e1_pair(), e2_pair()};
    const AnchorState a2 = auto_anchor(both, 9, 1e-6, 200);
    CHECK(a2.min_overlap >= 0.4);
    for (const StatePair& e : both) {
        CHECK(std::abs(inner(e.dual, a2.pair.state)) > 1e-6);
        CHECK(std::abs(inner(a2.pair.dual, e.state)) > 1e-6);
    }

    const AnchorState again = auto_anchor(both, 9, 1e-6, 200);
    CHECK((again.pair.state - a2.pair.state).norm() == 0.0);
    CHECK(again.min_overlap == a2.min_overlap);
}

TEST_CASE("auto_anchor reports failure when nothing can satisfy the bound") {
    // No state can be nearly parallel to two orthogonal endpoints at once.
    const StatePair both[] = {e1_pair(), e2_pair()};
    CHECK_THROWS_AS((void)auto_anchor(both, 9, 0.999, 50), AnchorSearchError);
}

TEST_CASE("off-diagonal swap configuration vanishes") {
    const Trajectory tj = synthetic_flip(e1_pair(), e2_pair());
    const Trajectory tk = synthetic_flip(e2_pair(), e1_pair());
    const HamiltonianPath path = constant_path(ComplexMatrix::Zero(2, 2));
    const AnchorState anchor{nhtest::self_dual(vec2(1, 1) / std::sqrt(2.0)), 1 / std::sqrt(2.0)};
    const OffdiagonalPhase od = offdiagonal_phase(tj, tk, path, anchor);
    CHECK(std::abs(od.value) < 1e-10);
    CHECK(std::abs(od.bracket_jk) < 1e-12);
    CHECK(std::abs(od.bracket_kj) < 1e-12);
}

TEST_CASE("off-diagonal phase with identical trajectories is the stated sum") {
    Rng rng(421);
    const HamiltonianPath path = nhtest::random_smooth_path(rng, 3, 1.0, 2.0);
    const Trajectory traj =
        evolve_pair(path, nhtest::random_pair(rng, 3), TimeGrid{0, 1, 200});
    const AnchorState anchor{nhtest::random_pair(rng, 3), 0.1};
    const OffdiagonalPhase od = offdiagonal_phase(traj, traj, path, anchor);
    const Complex bracket =
        bargmann_bracket(traj.pairs.front(), anchor.pair, traj.pairs.back());
    const Complex single = geometric_phase_anchored(traj, path, anchor).geometric;
    CHECK(std::abs(od.value - (2.0 * bracket + 2.0 * single)) < 1e-12);
}

TEST_CASE("off-diagonal phase rejects mismatched grids") {
    const HamiltonianPath path = constant_path(ComplexMatrix::Zero(2, 2));
    const Trajectory a = evolve_pair(path, e1_pair(), TimeGrid{0, 1, 4});
    const Trajectory b = evolve_pair(path, e1_pair(), TimeGrid{0, 1, 8});
    const AnchorState anchor{nhtest::self_dual(vec2(1, 1) / std::sqrt(2.0)), 0.7};
    CHECK_THROWS_AS((void)offdiagonal_phase(a, b, path, anchor), GridError);
}

TEST_CASE("Hermitian closed-loop phases have negligible imaginary part") {
    const HamiltonianPath path = cone_path(0.5, 100.0);
    const BiorthonormalFrame f = build_frame(path.at(0.0));
    const StatePair init{f.right.col(1), f.left.col(1)};
    const Trajectory traj = evolve_pair(path, init, TimeGrid{0, 100.0, 10000});
    const PhaseResult r = geometric_phase(traj, path);
    CHECK(std::abs(r.geometric.imag()) < 1e-7);
    CHECK(std::abs(polygon_limit_phase(traj).value.imag()) < 1e-7);
}
