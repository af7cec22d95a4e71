#pragma once

#include "dode/assignment.hpp"
#include "dode/ingest.hpp"
#include "dode/network.hpp"
#include "dode/problem.hpp"
#include "dode/solver.hpp"
#include "dode/time_grid.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dode {

/// Settings for estimate / sweep / analyze. Relative paths resolve against the config file's directory.
struct RunConfig {
    std::filesystem::path network;
    std::filesystem::path sensors;
    std::filesystem::path arterial;
    std::filesystem::path income;     ///< empty = no income analysis
    std::filesystem::path output_dir = "out";

    int interval_minutes = 5;
    std::vector<Date> days;
    int rebin_factor = 1;

    double alpha = 0.5;
    double lambda_km = 1.0;
    Weights weights;

    PathOptions paths;
    RouteChoiceMode route_choice = RouteChoiceMode::Single;
    DarOptions dar;
    bool dar_cache = true;
    CleaningOptions cleaning;
    SolverOptions solver;

    std::vector<Weights> sweep;

    void validate() const;
};

/// Parses the JSON config; missing keys keep their defaults. Throws ParseError / FileError.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir, std::string_view source);
std::string config_to_json(const RunConfig& config, const std::filesystem::path& relative_to);

/// Everything between the input files and the solver.
struct Prepared {
    TrafficNetwork network;
    TimeGrid grid;
    std::vector<OdPair> od_pairs;
    RouteChoice route_choice;
    DarTensor dar;
    DodeProblem problem;
    std::vector<GapWarning> warnings;
    std::size_t records_outside_grid = 0;
};

Prepared prepare(const RunConfig& config);

/// Entry point used by the executable; returns the process exit status.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace dode
