#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nhphase/dynamics.hpp"
#include "nhphase/phases.hpp"

namespace nhphase {

struct Tolerances {
    double tol_gap = -1.0;  // <= 0: derived from ||H||
    double tol_bio = 1e-6;
    double drift_fail = 1e-4;
};

enum class AnchorSpec { none, automatic, literal };

// A fully validated scenario document (schema version 1). Complex entries are
// always [re, im] pairs.
struct Scenario {
    int version = 1;
    Eigen::Index dimension = 0;
    HamiltonianPath hamiltonian;
    ComplexVector initial_state;
    std::optional<ComplexVector> initial_dual;  // nullopt: frame-associated at t0
    TimeGrid grid;
    AnchorSpec anchor_spec = AnchorSpec::none;
    std::optional<StatePair> anchor_literal;
    Tolerances tolerances;
    std::uint64_t seed = 0;
    std::vector<std::string> outputs;  // requested artifacts, default {"phases"}
    nlohmann::json raw;                // source document (sweep patches run on it)
};

Scenario parse_scenario(const nlohmann::json& doc);
Scenario parse_scenario_text(const std::string& text);

// Canonical document for the parsed scenario; parse(serialize(s)) is
// equivalent to s.
nlohmann::json serialize(const Scenario& scenario);

struct ResultBundle {
    nlohmann::json data;
    std::vector<std::string> csv_header;
    std::vector<std::vector<std::string>> csv_rows;
};

// Commands: evolve | phase | offdiag | geodesic | polygon | check | sweep.
ResultBundle run(const std::string& command, const Scenario& scenario);

std::string export_bundle(const ResultBundle& bundle, const std::string& format);

nlohmann::json error_record(const Error& e);

// Resolves the initial StatePair (builds the t0 frame when the dual is
// frame-associated).
StatePair initial_pair(const Scenario& scenario);

std::string format_double(double x);  // locale-independent, %.17g

}  // namespace nhphase
