#include "nhphase/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <future>
#include <numbers>
#include <random>
#include <sstream>

namespace nhphase {

using nlohmann::json;

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return std::string(buf);
}

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ParseError("parse_scenario", path + ": " + what);
}

const json& require_field(const json& doc, const char* key, const std::string& path) {
    if (!doc.is_object() || !doc.contains(key)) fail(path + "." + key, "missing field");
    return doc.at(key);
}

double as_number(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

Complex parse_complex(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        fail(path, "expected a [re, im] pair");
    return Complex{j[0].get<double>(), j[1].get<double>()};
}

ComplexVector parse_vector(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array");
    ComplexVector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t k = 0; k < j.size(); ++k)
        v[static_cast<Eigen::Index>(k)] = parse_complex(j[k], path + "[" + std::to_string(k) + "]");
    return v;
}

ComplexMatrix parse_matrix(const json& j, Eigen::Index n, const std::string& path) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n)
        fail(path, "expected " + std::to_string(n) + " rows");
    ComplexMatrix m(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const json& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n)
            fail(path, "expected " + std::to_string(n) + " columns in row " + std::to_string(r));
        for (Eigen::Index c = 0; c < n; ++c)
            m(r, c) = parse_complex(row[static_cast<std::size_t>(c)],
                                    path + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
    }
    return m;
}

std::vector<double> parse_real_array(const json& j, const std::string& path) {
    if (!j.is_array()) fail(path, "expected an array of numbers");
    std::vector<double> out;
    out.reserve(j.size());
    for (std::size_t k = 0; k < j.size(); ++k)
        out.push_back(as_number(j[k], path + "[" + std::to_string(k) + "]"));
    return out;
}

CoefficientFunction parse_coeff(const json& j, const std::string& path) {
    CoefficientFunction c;
    if (j.is_null()) {
        c.poly = {1.0};
        return c;
    }
    if (!j.is_object()) fail(path, "expected an object");
    if (j.contains("poly")) c.poly = parse_real_array(j.at("poly"), path + ".poly");
    if (j.contains("omega")) c.omega = as_number(j.at("omega"), path + ".omega");
    if (j.contains("cos")) c.cosine = parse_real_array(j.at("cos"), path + ".cos");
    if (j.contains("sin")) c.sine = parse_real_array(j.at("sin"), path + ".sin");
    if ((!c.cosine.empty() || !c.sine.empty()) && c.omega == 0.0)
        fail(path + ".omega", "Fourier coefficients require a nonzero omega");
    for (double v : c.poly)
        if (!std::isfinite(v)) fail(path + ".poly", "non-finite coefficient");
    if (c.poly.empty() && c.cosine.empty() && c.sine.empty()) c.poly = {1.0};
    return c;
}

json json_complex(Complex z) { return json::array({z.real(), z.imag()}); }

json json_vector(const ComplexVector& v) {
    json out = json::array();
    for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(json_complex(v[k]));
    return out;
}

json json_phase(const PhaseValue& p) {
    return json{{"re", p.value.real()}, {"im", p.value.imag()}, {"branch_offset", p.branch_offset}};
}

json json_phase_result(const PhaseResult& r) {
    json out{{"pancharatnam", json_phase(r.pancharatnam)},
             {"dynamical", {{"re", r.dynamical.real()}, {"im", r.dynamical.imag()}}},
             {"geometric", {{"re", r.geometric.real()}, {"im", r.geometric.imag()}}},
             {"endpoint_overlap", json_complex(r.endpoint_overlap)},
             {"mode", r.mode == PhaseMode::direct ? "direct" : "anchored"}};
    out["anchor_used"] = r.anchor_used ? json_vector(r.anchor_used->state) : json(nullptr);
    if (r.direct_discrepancy)
        out["direct_discrepancy"] = json_complex(*r.direct_discrepancy);
    return out;
}

// Scale the dual so the pair is exactly binormalized.
StatePair normalized_pair(const ComplexVector& state, const ComplexVector& dual,
                          const std::string& path) {
    const Complex overlap = inner(dual, state);
    if (std::abs(overlap) <= 1e-12 * (state.norm() * dual.norm()))
        fail(path, "dual is biorthogonal to the state");
    return StatePair{state, dual / std::conj(overlap)};
}

StatePair parse_pair(const json& j, Eigen::Index n, const std::string& path) {
    ComplexVector state, dual;
    if (j.is_object()) {
        state = parse_vector(require_field(j, "state", path), path + ".state");
        if (j.contains("dual"))
            dual = parse_vector(j.at("dual"), path + ".dual");
        else
            dual = state / state.squaredNorm();
    } else {
        state = parse_vector(j, path);
        dual = state / state.squaredNorm();
    }
    if (state.size() != n || dual.size() != n)
        throw DimensionError("parse_scenario", path + ": expected dimension " + std::to_string(n));
    return normalized_pair(state, dual, path);
}

bool wants_output(const Scenario& s, const std::string& token) {
    for (const std::string& o : s.outputs)
        if (o == token) return true;
    return false;
}

std::optional<BiorthonormalFrame> try_frame(const Scenario& s) {
    try {
        return build_frame(s.hamiltonian.at(s.grid.t0), s.grid.t0, s.tolerances.tol_gap);
    } catch (const Error&) {
        return std::nullopt;
    }
}

AnchorState resolve_anchor(const Scenario& s, std::span<const StatePair> endpoints) {
    if (s.anchor_spec == AnchorSpec::literal) {
        AnchorState a{*s.anchor_literal, std::numeric_limits<double>::infinity()};
        for (const StatePair& e : endpoints) {
            a.min_overlap = std::min(a.min_overlap, std::abs(inner(e.dual, a.pair.state)));
            a.min_overlap = std::min(a.min_overlap, std::abs(inner(a.pair.dual, e.state)));
        }
        return a;
    }
    const auto frame = try_frame(s);
    return auto_anchor(endpoints, s.seed, s.tolerances.tol_bio, 1000,
                       frame ? &*frame : nullptr);
}

json trajectory_samples(const Trajectory& traj) {
    json out = json::array();
    for (std::size_t i = 0; i < traj.pairs.size(); ++i) {
        out.push_back(json{{"t", traj.grid.time(i)},
                           {"state", json_vector(traj.pairs[i].state)},
                           {"dual", json_vector(traj.pairs[i].dual)},
                           {"binorm_defect", binorm_defect(traj.pairs[i])}});
    }
    return out;
}

std::vector<std::string> trajectory_csv_header(Eigen::Index n) {
    std::vector<std::string> h{"t"};
    for (Eigen::Index k = 0; k < n; ++k) h.push_back("re(psi_" + std::to_string(k) + ")");
    for (Eigen::Index k = 0; k < n; ++k) h.push_back("im(psi_" + std::to_string(k) + ")");
    for (Eigen::Index k = 0; k < n; ++k) h.push_back("re(dual_" + std::to_string(k) + ")");
    for (Eigen::Index k = 0; k < n; ++k) h.push_back("im(dual_" + std::to_string(k) + ")");
    h.push_back("binorm_defect");
    return h;
}

std::vector<std::string> trajectory_csv_row(const Trajectory& traj, std::size_t i) {
    std::vector<std::string> row{format_double(traj.grid.time(i))};
    const StatePair& p = traj.pairs[i];
    for (Eigen::Index k = 0; k < p.state.size(); ++k) row.push_back(format_double(p.state[k].real()));
    for (Eigen::Index k = 0; k < p.state.size(); ++k) row.push_back(format_double(p.state[k].imag()));
    for (Eigen::Index k = 0; k < p.dual.size(); ++k) row.push_back(format_double(p.dual[k].real()));
    for (Eigen::Index k = 0; k < p.dual.size(); ++k) row.push_back(format_double(p.dual[k].imag()));
    row.push_back(format_double(binorm_defect(p)));
    return row;
}

}  // namespace

Scenario parse_scenario(const json& doc) {
    if (!doc.is_object()) fail("$", "scenario document must be an object");
    Scenario s;
    s.raw = doc;

    const json& ver = require_field(doc, "scenario_version", "$");
    if (!ver.is_number_integer() || ver.get<int>() != 1)
        fail("scenario_version", "unsupported version (expected 1)");
    s.version = 1;

    const json& dim = require_field(doc, "dimension", "$");
    if (!dim.is_number_integer() || dim.get<int>() < 1)
        fail("dimension", "expected a positive integer");
    s.dimension = dim.get<Eigen::Index>();

    const json& ham = require_field(doc, "hamiltonian", "$");
    s.hamiltonian.dim = s.dimension;
    s.hamiltonian.t0 = as_number(require_field(ham, "t0", "hamiltonian"), "hamiltonian.t0");
    s.hamiltonian.t1 = as_number(require_field(ham, "t1", "hamiltonian"), "hamiltonian.t1");
    if (!(s.hamiltonian.t1 > s.hamiltonian.t0))
        fail("hamiltonian.t1", "domain requires t1 > t0");
    const json& terms = require_field(ham, "terms", "hamiltonian");
    if (!terms.is_array() || terms.empty()) fail("hamiltonian.terms", "expected a non-empty array");
    for (std::size_t k = 0; k < terms.size(); ++k) {
        const std::string path = "hamiltonian.terms[" + std::to_string(k) + "]";
        HamiltonianTerm term;
        term.matrix = parse_matrix(require_field(terms[k], "matrix", path), s.dimension,
                                   path + ".matrix");
        term.coeff = parse_coeff(terms[k].contains("coeff") ? terms[k].at("coeff") : json(nullptr),
                                 path + ".coeff");
        s.hamiltonian.terms.push_back(std::move(term));
    }

    s.initial_state = parse_vector(require_field(doc, "initial_state", "$"), "initial_state");
    if (s.initial_state.size() != s.dimension)
        throw DimensionError("parse_scenario", "initial_state: expected dimension " +
                                                   std::to_string(s.dimension));

    if (doc.contains("initial_dual")) {
        const json& d = doc.at("initial_dual");
        if (d.is_string()) {
            if (d.get<std::string>() != "frame-associated")
                fail("initial_dual", "expected a vector or the token \"frame-associated\"");
        } else {
            ComplexVector dual = parse_vector(d, "initial_dual");
            if (dual.size() != s.dimension)
                throw DimensionError("parse_scenario", "initial_dual: expected dimension " +
                                                           std::to_string(s.dimension));
            s.initial_dual = normalized_pair(s.initial_state, dual, "initial_dual").dual;
        }
    }

    s.grid.t0 = s.hamiltonian.t0;
    s.grid.t1 = s.hamiltonian.t1;
    s.grid.steps = 1000;
    if (doc.contains("grid")) {
        const json& g = doc.at("grid");
        if (!g.is_object()) fail("grid", "expected an object");
        if (g.contains("t0")) s.grid.t0 = as_number(g.at("t0"), "grid.t0");
        if (g.contains("t1")) s.grid.t1 = as_number(g.at("t1"), "grid.t1");
        if (g.contains("steps")) {
            if (!g.at("steps").is_number_integer() || g.at("steps").get<long long>() < 1)
                fail("grid.steps", "expected a positive integer");
            s.grid.steps = g.at("steps").get<std::size_t>();
        }
    }
    if (!(s.grid.t1 > s.grid.t0)) fail("grid", "requires t1 > t0");
    if (s.grid.t0 < s.hamiltonian.t0 - 1e-12 || s.grid.t1 > s.hamiltonian.t1 + 1e-12)
        fail("grid", "grid lies outside the Hamiltonian domain");

    if (doc.contains("anchor")) {
        const json& a = doc.at("anchor");
        if (a.is_string() && a.get<std::string>() == "auto") {
            s.anchor_spec = AnchorSpec::automatic;
        } else if (!a.is_null()) {
            s.anchor_spec = AnchorSpec::literal;
            s.anchor_literal = parse_pair(a, s.dimension, "anchor");
        }
    }

    if (doc.contains("tolerances")) {
        const json& t = doc.at("tolerances");
        if (!t.is_object()) fail("tolerances", "expected an object");
        if (t.contains("tol_gap")) s.tolerances.tol_gap = as_number(t.at("tol_gap"), "tolerances.tol_gap");
        if (t.contains("tol_bio")) s.tolerances.tol_bio = as_number(t.at("tol_bio"), "tolerances.tol_bio");
        if (t.contains("drift_fail"))
            s.tolerances.drift_fail = as_number(t.at("drift_fail"), "tolerances.drift_fail");
    }

    if (doc.contains("seed")) {
        if (!doc.at("seed").is_number_integer()) fail("seed", "expected an integer");
        s.seed = doc.at("seed").get<std::uint64_t>();
    }

    s.outputs = {"phases"};
    if (doc.contains("outputs")) {
        if (!doc.at("outputs").is_array()) fail("outputs", "expected an array of strings");
        s.outputs.clear();
        for (const auto& o : doc.at("outputs")) {
            if (!o.is_string()) fail("outputs", "expected an array of strings");
            s.outputs.push_back(o.get<std::string>());
        }
    }
    return s;
}

Scenario parse_scenario_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError("parse_scenario", std::string("invalid JSON: ") + e.what());
    }
    return parse_scenario(doc);
}

json serialize(const Scenario& s) {
    json doc;
    doc["scenario_version"] = 1;
    doc["dimension"] = s.dimension;
    json terms = json::array();
    for (const HamiltonianTerm& term : s.hamiltonian.terms) {
        json m = json::array();
        for (Eigen::Index r = 0; r < term.matrix.rows(); ++r) {
            json row = json::array();
            for (Eigen::Index c = 0; c < term.matrix.cols(); ++c)
                row.push_back(json_complex(term.matrix(r, c)));
            m.push_back(row);
        }
        json coeff;
        coeff["poly"] = term.coeff.poly;
        if (term.coeff.omega != 0.0) coeff["omega"] = term.coeff.omega;
        if (!term.coeff.cosine.empty()) coeff["cos"] = term.coeff.cosine;
        if (!term.coeff.sine.empty()) coeff["sin"] = term.coeff.sine;
        terms.push_back(json{{"matrix", m}, {"coeff", coeff}});
    }
    doc["hamiltonian"] =
        json{{"t0", s.hamiltonian.t0}, {"t1", s.hamiltonian.t1}, {"terms", terms}};
    doc["initial_state"] = json_vector(s.initial_state);
    if (s.initial_dual)
        doc["initial_dual"] = json_vector(*s.initial_dual);
    else
        doc["initial_dual"] = "frame-associated";
    doc["grid"] = json{{"t0", s.grid.t0}, {"t1", s.grid.t1}, {"steps", s.grid.steps}};
    if (s.anchor_spec == AnchorSpec::automatic) doc["anchor"] = "auto";
    if (s.anchor_spec == AnchorSpec::literal)
        doc["anchor"] = json{{"state", json_vector(s.anchor_literal->state)},
                             {"dual", json_vector(s.anchor_literal->dual)}};
    doc["tolerances"] = json{{"tol_gap", s.tolerances.tol_gap},
                             {"tol_bio", s.tolerances.tol_bio},
                             {"drift_fail", s.tolerances.drift_fail}};
    doc["seed"] = s.seed;
    doc["outputs"] = s.outputs;
    // Command-specific sections travel through untouched.
    for (const char* key : {"vertices", "closed", "geodesic", "offdiag_states", "sweep"})
        if (s.raw.is_object() && s.raw.contains(key)) doc[key] = s.raw.at(key);
    return doc;
}

StatePair initial_pair(const Scenario& s) {
    if (s.initial_dual) return StatePair{s.initial_state, *s.initial_dual};
    const BiorthonormalFrame frame =
        build_frame(s.hamiltonian.at(s.grid.t0), s.grid.t0, s.tolerances.tol_gap);
    return dual_partner(frame, s.initial_state);
}

namespace {

ResultBundle run_evolve(const Scenario& s) {
    const Trajectory traj =
        evolve_pair(s.hamiltonian, initial_pair(s), s.grid, s.tolerances.drift_fail);
    ResultBundle out;
    out.data = json{{"command", "evolve"},
                    {"operation", "evolve_pair"},
                    {"steps", s.grid.steps},
                    {"max_binorm_drift", drift_report(traj)},
                    {"samples", trajectory_samples(traj)}};
    out.csv_header = trajectory_csv_header(s.dimension);
    for (std::size_t i = 0; i < traj.pairs.size(); ++i)
        out.csv_rows.push_back(trajectory_csv_row(traj, i));
    return out;
}

void append_phase_csv(ResultBundle& out, const Scenario& s, const PhaseResult& r,
                      const std::string& operation) {
    out.csv_header = {"command",        "mode",           "operation",
                      "steps",          "pancharatnam_re", "pancharatnam_im",
                      "branch_offset",  "dynamical_re",   "dynamical_im",
                      "geometric_re",   "geometric_im",   "endpoint_overlap_re",
                      "endpoint_overlap_im"};
    out.csv_rows.push_back({"phase", r.mode == PhaseMode::direct ? "direct" : "anchored",
                            operation, std::to_string(s.grid.steps),
                            format_double(r.pancharatnam.value.real()),
                            format_double(r.pancharatnam.value.imag()),
                            std::to_string(r.pancharatnam.branch_offset),
                            format_double(r.dynamical.real()),
                            format_double(r.dynamical.imag()),
                            format_double(r.geometric.real()),
                            format_double(r.geometric.imag()),
                            format_double(r.endpoint_overlap.real()),
                            format_double(r.endpoint_overlap.imag())});
}

ResultBundle run_phase(const Scenario& s) {
    const Trajectory traj =
        evolve_pair(s.hamiltonian, initial_pair(s), s.grid, s.tolerances.drift_fail);

    PhaseResult result;
    std::string operation = "geometric_phase";
    try {
        result = geometric_phase(traj, s.hamiltonian, s.tolerances.tol_bio);
    } catch (const BiorthogonalError&) {
        if (s.anchor_spec == AnchorSpec::none) throw;
        const StatePair endpoints[] = {traj.pairs.front(), traj.pairs.back()};
        const AnchorState anchor = resolve_anchor(s, endpoints);
        result = geometric_phase_anchored(traj, s.hamiltonian, anchor, s.tolerances.tol_bio);
        operation = "geometric_phase_anchored";
    }

    ResultBundle out;
    out.data = json{{"command", "phase"},
                    {"operation", operation},
                    {"steps", s.grid.steps},
                    {"max_binorm_drift", drift_report(traj)},
                    {"result", json_phase_result(result)}};
    if (wants_output(s, "trajectory")) out.data["samples"] = trajectory_samples(traj);
    append_phase_csv(out, s, result, operation);
    return out;
}

ResultBundle run_geodesic(const Scenario& s) {
    if (!s.raw.contains("geodesic")) fail("geodesic", "missing section for the geodesic command");
    const json& g = s.raw.at("geodesic");
    const StatePair from = parse_pair(require_field(g, "from", "geodesic"), s.dimension,
                                      "geodesic.from");
    const StatePair to =
        parse_pair(require_field(g, "to", "geodesic"), s.dimension, "geodesic.to");
    std::size_t samples = 1001;
    if (g.contains("samples")) {
        if (!g.at("samples").is_number_integer() || g.at("samples").get<long long>() < 2)
            fail("geodesic.samples", "expected an integer >= 2");
        samples = g.at("samples").get<std::size_t>();
    }

    const GeodesicPath path = geodesic_between(from, to, samples, s.tolerances.tol_bio);
    const PhaseValue theta = pancharatnam_phase(from, to, s.tolerances.tol_bio);
    const PhaseValue integral = connection_line_integral(path);
    double max_q = 0.0;
    for (const StatePair& sample : path.samples)
        max_q = std::max(max_q,
                         std::abs(in_phase_residual(from, sample, s.tolerances.tol_bio)));
    const double residual = path.samples.size() >= 5 ? geodesic_residual(path) : 0.0;

    ResultBundle out;
    out.data = json{{"command", "geodesic"},
                    {"operation", "geodesic_between"},
                    {"samples", samples},
                    {"pancharatnam", json_phase(theta)},
                    {"line_integral", json_phase(integral)},
                    {"max_in_phase_residual", max_q},
                    {"geodesic_residual", residual}};
    if (wants_output(s, "trajectory")) {
        json arr = json::array();
        for (const StatePair& p : path.samples)
            arr.push_back(json{{"state", json_vector(p.state)}, {"dual", json_vector(p.dual)}});
        out.data["samples_data"] = arr;
    }
    out.csv_header = {"command",       "samples",      "theta_re",
                      "theta_im",      "line_integral_re", "line_integral_im",
                      "branch_offset", "max_in_phase_residual", "geodesic_residual"};
    out.csv_rows.push_back({"geodesic", std::to_string(samples),
                            format_double(theta.value.real()), format_double(theta.value.imag()),
                            format_double(integral.value.real()),
                            format_double(integral.value.imag()),
                            std::to_string(integral.branch_offset), format_double(max_q),
                            format_double(residual)});
    return out;
}

ResultBundle run_polygon(const Scenario& s) {
    if (!s.raw.contains("vertices")) fail("vertices", "missing section for the polygon command");
    const json& vs = s.raw.at("vertices");
    if (!vs.is_array() || vs.size() < 2) fail("vertices", "expected an array of at least 2 pairs");
    std::vector<StatePair> vertices;
    vertices.reserve(vs.size());
    for (std::size_t k = 0; k < vs.size(); ++k)
        vertices.push_back(parse_pair(vs[k], s.dimension, "vertices[" + std::to_string(k) + "]"));
    bool closed = true;
    if (s.raw.contains("closed")) {
        if (!s.raw.at("closed").is_boolean()) fail("closed", "expected a boolean");
        closed = s.raw.at("closed").get<bool>();
    }

    const PhaseValue value = polygon_phase(vertices, closed, s.tolerances.tol_bio);
    ResultBundle out;
    out.data = json{{"command", "polygon"},
                    {"operation", "polygon_phase"},
                    {"vertices", vertices.size()},
                    {"closed", closed},
                    {"result", json_phase(value)}};
    out.csv_header = {"command", "vertices", "closed", "value_re", "value_im", "branch_offset"};
    out.csv_rows.push_back({"polygon", std::to_string(vertices.size()), closed ? "true" : "false",
                            format_double(value.value.real()), format_double(value.value.imag()),
                            std::to_string(value.branch_offset)});
    return out;
}

ResultBundle run_offdiag(const Scenario& s) {
    const BiorthonormalFrame frame =
        build_frame(s.hamiltonian.at(s.grid.t0), s.grid.t0, s.tolerances.tol_gap);

    Eigen::Index j = 0, k = 1;
    if (s.raw.contains("offdiag_states")) {
        const json& idx = s.raw.at("offdiag_states");
        if (!idx.is_array() || idx.size() != 2 || !idx[0].is_number_integer() ||
            !idx[1].is_number_integer())
            fail("offdiag_states", "expected two state indices");
        j = idx[0].get<Eigen::Index>();
        k = idx[1].get<Eigen::Index>();
    }
    if (j < 0 || k < 0 || j >= s.dimension || k >= s.dimension || j == k)
        fail("offdiag_states", "indices must be distinct and within the dimension");

    const StatePair pj{frame.right.col(j), frame.left.col(j)};
    const StatePair pk{frame.right.col(k), frame.left.col(k)};
    const Trajectory tj = evolve_pair(s.hamiltonian, pj, s.grid, s.tolerances.drift_fail);
    const Trajectory tk = evolve_pair(s.hamiltonian, pk, s.grid, s.tolerances.drift_fail);

    const StatePair endpoints[] = {tj.pairs.front(), tj.pairs.back(), tk.pairs.front(),
                                   tk.pairs.back()};
    const AnchorState anchor = resolve_anchor(s, endpoints);
    const OffdiagonalPhase result =
        offdiagonal_phase(tj, tk, s.hamiltonian, anchor, s.tolerances.tol_bio);

    ResultBundle out;
    out.data = json{{"command", "offdiag"},
                    {"operation", "offdiagonal_phase"},
                    {"steps", s.grid.steps},
                    {"states", json::array({j, k})},
                    {"anchor", json_vector(anchor.pair.state)},
                    {"anchor_min_overlap", anchor.min_overlap},
                    {"value", json_complex(result.value)},
                    {"bracket_jk", json_complex(result.bracket_jk)},
                    {"bracket_kj", json_complex(result.bracket_kj)},
                    {"gamma_j", json_phase_result(result.gamma_j)},
                    {"gamma_k", json_phase_result(result.gamma_k)}};
    out.csv_header = {"command", "steps", "value_re", "value_im", "bracket_jk_re",
                      "bracket_jk_im", "bracket_kj_re", "bracket_kj_im", "gamma_j_re",
                      "gamma_j_im", "gamma_k_re", "gamma_k_im"};
    out.csv_rows.push_back(
        {"offdiag", std::to_string(s.grid.steps), format_double(result.value.real()),
         format_double(result.value.imag()), format_double(result.bracket_jk.real()),
         format_double(result.bracket_jk.imag()), format_double(result.bracket_kj.real()),
         format_double(result.bracket_kj.imag()), format_double(result.gamma_j.geometric.real()),
         format_double(result.gamma_j.geometric.imag()),
         format_double(result.gamma_k.geometric.real()),
         format_double(result.gamma_k.geometric.imag())});
    return out;
}

double mod_pi(double x) {
    const double pi = std::numbers::pi;
    double r = std::fmod(x, pi);
    if (r > pi / 2.0) r -= pi;
    if (r <= -pi / 2.0) r += pi;
    return r;
}

ResultBundle run_check(const Scenario& s) {
    json report = json::array();
    bool all_pass = true;
    const auto record = [&](const std::string& name, double measured, double threshold) {
        const bool pass = measured <= threshold;
        all_pass = all_pass && pass;
        report.push_back(json{{"name", name},
                              {"measured", measured},
                              {"threshold", threshold},
                              {"pass", pass}});
    };

    // Frame invariants at both ends of the grid.
    for (const double t : {s.grid.t0, s.grid.t1}) {
        const BiorthonormalFrame frame =
            build_frame(s.hamiltonian.at(t), t, s.tolerances.tol_gap);
        const Eigen::Index n = frame.dim();
        const double bi =
            (frame.left.adjoint() * frame.right - ComplexMatrix::Identity(n, n))
                .cwiseAbs()
                .maxCoeff();
        const double comp =
            (frame.right * frame.left.adjoint() - ComplexMatrix::Identity(n, n)).norm();
        const std::string tag = t == s.grid.t0 ? "t0" : "t1";
        record("frame-biorthonormality@" + tag, bi, 1e-10);
        record("frame-completeness@" + tag, comp, 1e-9);
    }

    // Binormalization conservation and its decay under step refinement.
    const StatePair start = initial_pair(s);
    const Trajectory traj = evolve_pair(s.hamiltonian, start, s.grid, s.tolerances.drift_fail);
    record("binormalization-drift", drift_report(traj), s.tolerances.drift_fail);
    {
        // Halving the step must cut the drift by at least ~8x unless it
        // already sits at the roundoff floor.
        TimeGrid fine = s.grid;
        fine.steps *= 2;
        const Trajectory traj2 = evolve_pair(s.hamiltonian, start, fine, s.tolerances.drift_fail);
        const double d1 = drift_report(traj);
        const double d2 = drift_report(traj2);
        if (d1 > 1e-13 && d2 > 0.0)
            record("drift-refinement-residual-fraction", d2 / d1, 0.125);
        else
            record("drift-refinement-residual-fraction", 0.0, 0.125);
    }

    const StatePair& front = traj.pairs.front();
    const StatePair& back = traj.pairs.back();
    const bool open_endpoints =
        std::abs(inner(front.dual, back.state)) > s.tolerances.tol_bio &&
        std::abs(inner(back.dual, front.state)) > s.tolerances.tol_bio;

    if (open_endpoints) {
        const PhaseValue ab = pancharatnam_phase(front, back, s.tolerances.tol_bio);
        const PhaseValue ba = pancharatnam_phase(back, front, s.tolerances.tol_bio);
        record("pancharatnam-antisymmetry", std::abs(ab.value + ba.value), 1e-10);

        try {
            const GeodesicPath geo =
                geodesic_between(front, back, 4001, s.tolerances.tol_bio);
            double max_q = 0.0;
            for (const StatePair& sample : geo.samples)
                max_q = std::max(max_q, std::abs(in_phase_residual(front, sample,
                                                                   s.tolerances.tol_bio)));
            record("geodesic-in-phase", max_q, 1e-10);
            record("geodesic-residual", geodesic_residual(geo), 1e-5);

            std::vector<StatePair> gauged = geo.samples;
            for (std::size_t i = 0; i < gauged.size(); ++i) {
                const double u =
                    static_cast<double>(i) / static_cast<double>(gauged.size() - 1);
                gauged[i] = apply_gauge(gauged[i], GaugeTransform{u * ab.value});
            }
            const PhaseValue li = connection_line_integral(gauged, geo.spacing());
            record("theorem-line-integral", std::abs(li.value - ab.value), 1e-6);
        } catch (const DegeneratePathError&) {
            // Endpoint geodesic crosses a biorthogonal ray; not applicable here.
        }
    }

    // Closed polygon over a subsampled loop, gauge invariance modulo π.
    {
        const std::size_t verts = std::min<std::size_t>(16, traj.pairs.size());
        std::vector<StatePair> loop;
        for (std::size_t v = 0; v < verts; ++v)
            loop.push_back(traj.pairs[v * (traj.pairs.size() - 1) / verts]);
        try {
            const PhaseValue base = polygon_phase(loop, true, s.tolerances.tol_bio);
            std::mt19937_64 rng(s.seed + 1);
            const auto u = [&rng]() { return std::ldexp(static_cast<double>(rng()), -64) - 0.5; };
            std::vector<StatePair> gauged;
            gauged.reserve(loop.size());
            for (const StatePair& v : loop)
                gauged.push_back(apply_gauge(v, GaugeTransform{Complex{u(), u()}}));
            const PhaseValue shifted = polygon_phase(gauged, true, s.tolerances.tol_bio);
            const double delta =
                std::abs(mod_pi(shifted.value.real() - base.value.real())) +
                std::abs(shifted.value.imag() - base.value.imag());
            record("closed-polygon-gauge-invariance", delta, 1e-9);
        } catch (const BiorthogonalError&) {
            // Loop crosses a biorthogonal edge at this resolution; not applicable.
        }
    }
    ResultBundle out;
    out.data = json{{"command", "check"},
                    {"operation", "invariant_suite"},
                    {"steps", s.grid.steps},
                    {"all_pass", all_pass},
                    {"report", report}};
    out.csv_header = {"name", "measured", "threshold", "pass"};
    for (const auto& row : report)
        out.csv_rows.push_back({row.at("name").get<std::string>(),
                                format_double(row.at("measured").get<double>()),
                                format_double(row.at("threshold").get<double>()),
                                row.at("pass").get<bool>() ? "true" : "false"});
    return out;
}

ResultBundle run_sweep(const Scenario& s) {
    if (!s.raw.contains("sweep")) fail("sweep", "missing section for the sweep command");
    const json& sw = s.raw.at("sweep");
    const json& cmd = require_field(sw, "command", "sweep");
    if (!cmd.is_string()) fail("sweep.command", "expected a string");
    const std::string inner_cmd = cmd.get<std::string>();
    if (inner_cmd == "sweep") fail("sweep.command", "sweeps cannot nest");
    const json& param = require_field(sw, "parameter", "sweep");
    if (!param.is_string()) fail("sweep.parameter", "expected a JSON pointer string");
    const json& values = require_field(sw, "values", "sweep");
    if (!values.is_array() || values.empty()) fail("sweep.values", "expected a non-empty array");

    const nlohmann::json::json_pointer pointer(param.get<std::string>());
    std::vector<std::future<ResultBundle>> futures;
    futures.reserve(values.size());
    for (const auto& value : values) {
        json patched = s.raw;
        try {
            patched[pointer] = value;
        } catch (const json::exception& e) {
            fail("sweep.parameter", e.what());
        }
        futures.push_back(std::async(std::launch::async, [patched, &inner_cmd]() {
            return run(inner_cmd, parse_scenario(patched));
        }));
    }

    ResultBundle out;
    out.data = json{{"command", "sweep"},
                    {"operation", inner_cmd},
                    {"parameter", param.get<std::string>()},
                    {"rows", json::array()}};
    for (std::size_t i = 0; i < futures.size(); ++i) {
        ResultBundle point = futures[i].get();
        out.data["rows"].push_back(
            json{{"value", values[static_cast<std::size_t>(i)]}, {"result", point.data}});
        if (out.csv_header.empty()) {
            out.csv_header = {"parameter", "value"};
            out.csv_header.insert(out.csv_header.end(), point.csv_header.begin(),
                                  point.csv_header.end());
        }
        for (const auto& row : point.csv_rows) {
            std::vector<std::string> merged{param.get<std::string>(),
                                            values[static_cast<std::size_t>(i)].dump()};
            merged.insert(merged.end(), row.begin(), row.end());
            out.csv_rows.push_back(std::move(merged));
        }
    }
    return out;
}

}  // namespace

ResultBundle run(const std::string& command, const Scenario& scenario) {
    if (command == "evolve") return run_evolve(scenario);
    if (command == "phase") return run_phase(scenario);
    if (command == "offdiag") return run_offdiag(scenario);
    if (command == "geodesic") return run_geodesic(scenario);
    if (command == "polygon") return run_polygon(scenario);
    if (command == "check") return run_check(scenario);
    if (command == "sweep") return run_sweep(scenario);
    throw ParseError("run", "unknown command: " + command);
}

std::string export_bundle(const ResultBundle& bundle, const std::string& format) {
    if (format == "json") return bundle.data.dump(2) + "\n";
    if (format != "csv") throw ParseError("export", "unknown format: " + format);
    std::ostringstream os;
    for (std::size_t i = 0; i < bundle.csv_header.size(); ++i) {
        if (i) os << ',';
        os << bundle.csv_header[i];
    }
    os << '\n';
    for (const auto& row : bundle.csv_rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) os << ',';
            os << row[i];
        }
        os << '\n';
    }
    return os.str();
}

json error_record(const Error& e) {
    return json{{"error",
                 json{{"kind", e.kind()}, {"operation", e.operation()}, {"message", e.what()}}}};
}

}  // namespace nhphase
