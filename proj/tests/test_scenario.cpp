#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>
#include <string>

#include "nhphase/scenario.hpp"
#include "test_helpers.hpp"

using namespace nhphase;
using nlohmann::json;
using std::numbers::pi;

namespace {

json zero_h_doc() {
    return json{
        {"scenario_version", 1},
        {"dimension", 2},
        {"hamiltonian",
         {{"t0", 0.0},
          {"t1", 1.0},
          {"terms", json::array({{{"matrix",
                                   json::array({json::array({json::array({0.0, 0.0}),
                                                             json::array({0.0, 0.0})}),
                                                json::array({json::array({0.0, 0.0}),
                                                             json::array({0.0, 0.0})})})}}})}}},
        {"initial_state", json::array({json::array({1.0, 0.0}), json::array({0.0, 0.0})})},
        {"initial_dual", json::array({json::array({1.0, 0.0}), json::array({0.0, 0.0})})},
        {"grid", {{"steps", 16}}}};
}

json pt_doc(double gamma, std::size_t steps = 400) {
    return json{
        {"scenario_version", 1},
        {"dimension", 2},
        {"hamiltonian",
         {{"t0", 0.0},
          {"t1", 2.0},
          {"terms",
           json::array(
               {{{"matrix", json::array({json::array({json::array({0.0, 0.0}),
                                                      json::array({1.0, 0.0})}),
                                         json::array({json::array({1.0, 0.0}),
                                                      json::array({0.0, 0.0})})})}},
                {{"matrix", json::array({json::array({json::array({0.0, 1.0}),
                                                      json::array({0.0, 0.0})}),
                                         json::array({json::array({0.0, 0.0}),
                                                      json::array({0.0, -1.0})})})},
                 {"coeff", {{"poly", json::array({gamma})}}}}})}}},
        {"initial_state", json::array({json::array({1.0, 0.0}), json::array({0.0, 0.0})})},
        {"initial_dual", "frame-associated"},
        {"grid", {{"steps", steps}}},
        {"anchor", "auto"},
        {"seed", 11},
        {"tolerances", {{"tol_gap", 1e-6}}}};
}

}  // namespace

TEST_CASE("minimal scenario applies defaults") {
    json doc = zero_h_doc();
    doc.erase("grid");
    doc.erase("initial_dual");
    const Scenario s = parse_scenario(doc);
    CHECK(s.dimension == 2);
    CHECK(s.grid.steps == 1000);
    CHECK(s.grid.t0 == 0.0);
    CHECK(s.grid.t1 == 1.0);
    CHECK_FALSE(s.initial_dual.has_value());  // frame-associated
    CHECK(s.anchor_spec == AnchorSpec::none);
    CHECK(s.tolerances.tol_bio == 1e-6);
    CHECK(s.tolerances.drift_fail == 1e-4);
    CHECK(s.outputs == std::vector<std::string>{"phases"});
}

TEST_CASE("frame-associated dual is resolved through the t0 frame") {
    const Scenario s = parse_scenario(pt_doc(0.6));
    const StatePair pair = initial_pair(s);
    CHECK(binorm_defect(pair) < 1e-12);
    // For the PT Hamiltonian the dual of e1 differs from e1.
    CHECK((pair.dual - pair.state).norm() > 0.1);
}

TEST_CASE("malformed matrices are reported with their path") {
    json doc = zero_h_doc();
    doc["hamiltonian"]["terms"][0]["matrix"][0].push_back(json::array({1.0, 0.0}));
    try {
        (void)parse_scenario(doc);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("hamiltonian.terms[0].matrix") !=
              std::string::npos);
    }
}

TEST_CASE("dimension mismatches are DimensionErrors") {
    json doc = zero_h_doc();
    doc["initial_state"] = json::array(
        {json::array({1.0, 0.0}), json::array({0.0, 0.0}), json::array({0.0, 0.0})});
    CHECK_THROWS_AS((void)parse_scenario(doc), DimensionError);
}

TEST_CASE("scenario version is required") {
    json doc = zero_h_doc();
    doc["scenario_version"] = 2;
    CHECK_THROWS_AS((void)parse_scenario(doc), ParseError);
    doc.erase("scenario_version");
    CHECK_THROWS_AS((void)parse_scenario(doc), ParseError);
}

TEST_CASE("serialize round-trips to an equivalent scenario") {
    const Scenario s = parse_scenario(pt_doc(0.6));
    const Scenario again = parse_scenario(serialize(s));
    CHECK(serialize(again) == serialize(s));
}

TEST_CASE("evolve command on the zero Hamiltonian") {
    const Scenario s = parse_scenario(zero_h_doc());
    const ResultBundle bundle = run("evolve", s);
    CHECK(bundle.data.at("max_binorm_drift").get<double>() == 0.0);
    CHECK(bundle.csv_rows.size() == 17);
    CHECK(bundle.csv_header.front() == "t");
    CHECK(bundle.csv_header ==
          std::vector<std::string>{"t", "re(psi_0)", "re(psi_1)", "im(psi_0)",
                                   "im(psi_1)", "re(dual_0)", "re(dual_1)",
                                   "im(dual_0)", "im(dual_1)", "binorm_defect"});
}

TEST_CASE("phase command on a constant-H eigenstate scenario") {
    json doc = zero_h_doc();
    doc["hamiltonian"]["terms"][0]["matrix"] =
        json::array({json::array({json::array({1.0, -0.5}), json::array({0.0, 0.0})}),
                     json::array({json::array({0.0, 0.0}), json::array({2.0, 0.0})})});
    doc["grid"]["steps"] = 500;
    const Scenario s = parse_scenario(doc);
    const ResultBundle bundle = run("phase", s);
    CHECK(bundle.data.at("operation") == "geometric_phase");
    CHECK(bundle.data.at("result").at("mode") == "direct");
    const auto& geo = bundle.data.at("result").at("geometric");
    CHECK(std::abs(geo.at("re").get<double>()) < 1e-9);
    CHECK(std::abs(geo.at("im").get<double>()) < 1e-9);
    const auto& panch = bundle.data.at("result").at("pancharatnam");
    CHECK(panch.contains("branch_offset"));
}

TEST_CASE("phase command falls back to the anchored formula") {
    // Hermitian half-turn flips the eigenstate onto its orthogonal partner.
    json doc = json{
        {"scenario_version", 1},
        {"dimension", 2},
        {"hamiltonian",
         {{"t0", 0.0},
          {"t1", 2000.0},
          {"terms",
           json::array(
               {{{"matrix", json::array({json::array({json::array({0.0, 0.0}),
                                                      json::array({0.5, 0.0})}),
                                         json::array({json::array({0.5, 0.0}),
                                                      json::array({0.0, 0.0})})})},
                 {"coeff", {{"omega", pi / 2000.0}, {"sin", json::array({1.0})}}}},
                {{"matrix", json::array({json::array({json::array({0.5, 0.0}),
                                                      json::array({0.0, 0.0})}),
                                         json::array({json::array({0.0, 0.0}),
                                                      json::array({-0.5, 0.0})})})},
                 {"coeff", {{"omega", pi / 2000.0}, {"cos", json::array({1.0})}}}}})}}},
        {"initial_state", json::array({json::array({1.0, 0.0}), json::array({0.0, 0.0})})},
        {"initial_dual", "frame-associated"},
        {"grid", {{"steps", 40000}}},
        {"anchor", "auto"},
        {"seed", 3},
        // Adiabatic leakage keeps the endpoint overlap around 1e-3; the
        // direct formula is meaningless there and must hand over.
        {"tolerances", {{"tol_bio", 0.01}}}};
    const Scenario s = parse_scenario(doc);
    const ResultBundle bundle = run("phase", s);
    CHECK(bundle.data.at("operation") == "geometric_phase_anchored");
    CHECK(bundle.data.at("result").at("mode") == "anchored");
    CHECK_FALSE(bundle.data.at("result").at("anchor_used").is_null());
}

TEST_CASE("polygon command reproduces the hand triangle") {
    json doc = zero_h_doc();
    const double r = 1.0 / std::sqrt(2.0);
    doc["vertices"] = json::array(
        {json::array({json::array({1.0, 0.0}), json::array({0.0, 0.0})}),
         json::array({json::array({r, 0.0}), json::array({r, 0.0})}),
         json::array({json::array({r, 0.0}), json::array({0.0, r})})});
    doc["closed"] = true;
    const Scenario s = parse_scenario(doc);
    const ResultBundle bundle = run("polygon", s);
    CHECK(bundle.data.at("result").at("re").get<double>() ==
          doctest::Approx(pi / 4).epsilon(1e-12));
}

TEST_CASE("geodesic command reports the construction diagnostics") {
    json doc = zero_h_doc();
    const double r = 1.0 / std::sqrt(2.0);
    doc["geodesic"] = json{
        {"from", json::array({json::array({1.0, 0.0}), json::array({0.0, 0.0})})},
        {"to", json::array({json::array({r, 0.0}), json::array({r, 0.0})})},
        {"samples", 2001}};
    const Scenario s = parse_scenario(doc);
    const ResultBundle bundle = run("geodesic", s);
    CHECK(bundle.data.at("max_in_phase_residual").get<double>() < 1e-10);
    CHECK(bundle.data.at("geodesic_residual").get<double>() < 1e-5);
    CHECK(std::abs(bundle.data.at("pancharatnam").at("re").get<double>()) < 1e-12);
}

TEST_CASE("offdiag command runs the two-eigenstate pipeline") {
    json doc = json::parse(R"({
      "scenario_version": 1, "dimension": 2,
      "hamiltonian": {"t0": 0.0, "t1": 2000.0, "terms": [
        {"matrix": [[[0,0],[0.5,0]],[[0.5,0],[0,0]]],
         "coeff": {"omega": 0.0015707963267948967, "sin": [1.0]}},
        {"matrix": [[[0.5,0],[0,0]],[[0,0],[-0.5,0]]],
         "coeff": {"omega": 0.0015707963267948967, "cos": [1.0]}}]},
      "initial_state": [[1,0],[0,0]],
      "grid": {"steps": 40000},
      "anchor": "auto", "seed": 42,
      "tolerances": {"tol_bio": 0.01}
    })");
    const Scenario s = parse_scenario(doc);
    const ResultBundle bundle = run("offdiag", s);
    CHECK(bundle.data.at("operation") == "offdiagonal_phase");
    CHECK(bundle.data.contains("bracket_jk"));
    CHECK(bundle.data.contains("gamma_j"));
    const double re = bundle.data.at("value")[0].get<double>();
    const double im = bundle.data.at("value")[1].get<double>();
    CHECK(std::isfinite(re));
    CHECK(std::abs(im) < 1e-8);  // Hermitian sweep: real off-diagonal phase
}

TEST_CASE("check command passes on the PT scenario below the exceptional point") {
    json doc = pt_doc(0.6, 2000);
    doc["grid"] = json{{"t0", 0.0}, {"t1", 0.8}, {"steps", 2000}};
    const Scenario s = parse_scenario(doc);
    const ResultBundle bundle = run("check", s);
    INFO(bundle.data.dump(2));
    CHECK(bundle.data.at("all_pass").get<bool>());
    // The endpoint window keeps the geodesic checks applicable.
    bool has_theorem_row = false;
    for (const auto& row : bundle.data.at("report"))
        if (row.at("name") == "theorem-line-integral") has_theorem_row = true;
    CHECK(has_theorem_row);
}

TEST_CASE("check command surfaces the exceptional point as an error") {
    const Scenario s = parse_scenario(pt_doc(1.0));
    CHECK_THROWS_AS((void)run("check", s), DegenerateSpectrumError);
}

TEST_CASE("sweep command produces one row per value") {
    json doc = pt_doc(0.2, 100);
    doc["sweep"] = json{{"command", "phase"},
                        {"parameter", "/hamiltonian/terms/1/coeff/poly/0"},
                        {"values", json::array({0.0, 0.2, 0.4})}};
    const Scenario s = parse_scenario(doc);
    const ResultBundle bundle = run("sweep", s);
    CHECK(bundle.data.at("rows").size() == 3);
    CHECK(bundle.csv_rows.size() == 3);
    CHECK(bundle.csv_header[0] == "parameter");
}

TEST_CASE("exports are deterministic") {
    const Scenario s = parse_scenario(pt_doc(0.6));
    const ResultBundle a = run("phase", s);
    const ResultBundle b = run("phase", s);
    CHECK(export_bundle(a, "json") == export_bundle(b, "json"));
    CHECK(export_bundle(a, "csv") == export_bundle(b, "csv"));
}

TEST_CASE("error records carry kind, operation and exit codes") {
    const DegenerateSpectrumError e("eigendecompose", "gap too small");
    const json record = error_record(e);
    CHECK(record.at("error").at("kind") == "DegenerateSpectrumError");
    CHECK(record.at("error").at("operation") == "eigendecompose");
    CHECK(e.exit_code() == 3);

    CHECK(ParseError("parse_scenario", "x").exit_code() == 2);
    CHECK(DimensionError("inner", "x").exit_code() == 2);
    CHECK(BiorthogonalError("geometric_phase", "x").exit_code() == 4);
    CHECK(AnchorSearchError("auto_anchor", "x").exit_code() == 4);
    CHECK(DriftError("evolve_pair", "x").exit_code() == 5);
    CHECK(NumericalError("solve", "x").exit_code() == 5);
}
