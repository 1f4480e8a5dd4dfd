#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "nhphase/scenario.hpp"

namespace {

struct Options {
    std::string scenario_file;
    std::string out_file;
    std::string format = "json";
    std::string anchor;
    long long seed = -1;
    long long steps = -1;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw nhphase::IoError("cli", "cannot read scenario file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_output(const Options& opt, const std::string& payload) {
    if (opt.out_file.empty()) {
        std::cout << payload;
        return;
    }
    std::ofstream out(opt.out_file, std::ios::binary);
    if (!out) throw nhphase::IoError("export", "cannot open output file: " + opt.out_file);
    out << payload;
    if (!out) throw nhphase::IoError("export", "write failed: " + opt.out_file);
}

int run_command(const std::string& command, const Options& opt) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_file(opt.scenario_file));
    } catch (const nlohmann::json::parse_error& e) {
        throw nhphase::ParseError("parse_scenario", std::string("invalid JSON: ") + e.what());
    }

    // Command-line overrides patch the document before validation.
    if (opt.seed >= 0) doc["seed"] = opt.seed;
    if (opt.steps >= 0) {
        if (!doc.contains("grid")) doc["grid"] = nlohmann::json::object();
        doc["grid"]["steps"] = opt.steps;
    }
    if (!opt.anchor.empty()) {
        if (opt.anchor == "auto") {
            doc["anchor"] = "auto";
        } else if (opt.anchor.rfind("file:", 0) == 0) {
            const std::string path = opt.anchor.substr(5);
            try {
                doc["anchor"] = nlohmann::json::parse(read_file(path));
            } catch (const nlohmann::json::parse_error& e) {
                throw nhphase::ParseError("parse_scenario",
                                          std::string("invalid anchor JSON: ") + e.what());
            }
        } else {
            throw nhphase::ParseError("cli", "--anchor expects auto or file:<path>");
        }
    }

    const nhphase::Scenario scenario = nhphase::parse_scenario(doc);
    const nhphase::ResultBundle bundle = nhphase::run(command, scenario);
    write_output(opt, nhphase::export_bundle(bundle, opt.format));
    if (command == "check" && !bundle.data.at("all_pass").get<bool>()) return 1;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Complex geometric phases of finite-dimensional non-Hermitian systems"};
    app.require_subcommand(1);

    Options opt;
    const char* names[] = {"evolve", "phase", "offdiag", "geodesic", "polygon", "check", "sweep"};
    const char* blurbs[] = {
        "integrate the state/dual pair and report binormalization drift",
        "geometric phase of the evolved pair (direct, anchored on fallback)",
        "off-diagonal geometric phase of two frame eigenstate trajectories",
        "parallel-gauge geodesic between two pairs, with residual and line integral",
        "accumulated Pancharatnam phase over a vertex list",
        "built-in invariant check suite at scenario resolution",
        "re-run a command over a parameter range"};
    std::string chosen;
    for (std::size_t i = 0; i < 7; ++i) {
        CLI::App* sub = app.add_subcommand(names[i], blurbs[i]);
        sub->add_option("--scenario", opt.scenario_file, "scenario document (JSON)")
            ->required();
        sub->add_option("--out", opt.out_file, "output file (default: stdout)");
        sub->add_option("--format", opt.format, "csv|json (default json)")
            ->check(CLI::IsMember({"csv", "json"}));
        sub->add_option("--seed", opt.seed, "override the scenario seed");
        sub->add_option("--steps", opt.steps, "override the grid step count");
        sub->add_option("--anchor", opt.anchor, "auto | file:<path>");
        sub->callback([&chosen, name = std::string(names[i])]() { chosen = name; });
    }

    CLI11_PARSE(app, argc, argv);

    try {
        return run_command(chosen, opt);
    } catch (const nhphase::Error& e) {
        std::cerr << nhphase::error_record(e).dump() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json{{"error", {{"kind", "InternalError"}, {"message", e.what()}}}}
                         .dump()
                  << "\n";
        return 1;
    }
}
