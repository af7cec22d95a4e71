#pragma once

#include "dode/analysis.hpp"
#include "dode/assignment.hpp"
#include "dode/ingest.hpp"
#include "dode/network.hpp"
#include "dode/problem.hpp"
#include "dode/solver.hpp"
#include "dode/synth.hpp"
#include "dode/time_grid.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace dode {

namespace fs = std::filesystem;

/// Whole file as a string. Throws FileError naming the path when it cannot be read.
std::string read_text(const fs::path& path);
/// Truncates and writes, creating parent directories. Throws FileError.
void write_text(const fs::path& path, const std::string& text);

/// Minimal delimited-text table: '#' lines are comments, the first other line is the header.
struct CsvTable {
    std::vector<std::string> comments; ///< without the leading '#'
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column position by name; throws ParseError naming `source` when absent.
    std::size_t column(std::string_view name, std::string_view source) const;
    std::optional<std::size_t> find_column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text, std::string_view source);

// Network file (JSON):
//   {"nodes":   [{"id", "lat", "lon", "region"?}],
//    "links":   [{"id", "from", "to", "length_km"?, "sensors": [ids]}],
//    "regions": [{"id", "name", "nodes"?}],
//    "sensors": [{"id", "lat", "lon"}]?}
TrafficNetwork parse_network_json(std::string_view text, std::string_view source = "network");
TrafficNetwork read_network(const fs::path& path);
std::string network_to_json(const TrafficNetwork& network);

// Highway sensors: sensor_id,date,minute,flow_vehicles,speed_kmh (empty cell = missing).
struct SensorReadResult {
    std::vector<SensorRecord> records;
    std::size_t outside_grid = 0; ///< rows whose date or minute is not on the grid
};
SensorReadResult parse_sensor_csv(std::string_view text, const TimeGrid& grid, std::string_view source = "sensors");
std::string sensor_records_to_csv(std::span<const SensorRecord> records, const TimeGrid& grid);

// Arterial sensors: sensor_id,lat,lon,date,minute,flow_vehicles. Missing intervals are interpolated.
std::vector<ArterialSensor> parse_arterial_csv(std::string_view text, const TimeGrid& grid,
                                               std::string_view source = "arterial");
std::string arterials_to_csv(std::span<const ArterialSensor> arterials, const TimeGrid& grid);

// Estimates: comment header (stage, grid, network digest), then
//   origin,destination,path,interval,value_vehicles
// and '#report,<key>,<value>' footer lines.
struct EstimateFile {
    std::string stage;
    int interval_minutes = 5;
    std::vector<Date> days;
    std::string network_digest;
    std::vector<std::string> origin, destination;
    std::vector<std::size_t> path, interval;
    std::vector<double> value;
    std::vector<std::pair<std::string, std::string>> report;

    TimeGrid grid() const { return TimeGrid(interval_minutes, days); }
};
std::string estimate_to_csv(const TrafficNetwork& network, std::span<const OdPair> od_pairs, const TimeGrid& grid,
                            std::span<const double> x, const std::string& stage, const ErrorReport* report);
EstimateFile parse_estimate_csv(std::string_view text, std::string_view source = "estimate");

/// q vector over (od, path, interval) from an estimate file; throws ParseError on unknown rows.
std::vector<double> estimate_q(const EstimateFile& file, const TrafficNetwork& network,
                               std::span<const OdPair> od_pairs);

/// Daily region flows straight from estimate rows (node ids resolved through the network).
RegionFlowMatrix estimate_region_flows(const EstimateFile& file, const TrafficNetwork& network);

std::string error_report_csv(const std::vector<std::pair<std::string, ErrorReport>>& stages);
std::string sweep_csv(std::span<const SweepRow> rows);

// Income: zipcode,income,population,district,overlap_fraction
std::vector<ZipcodeRow> parse_income_csv(std::string_view text, std::string_view source = "income");

// Problem dump: exact round trip via shortest round-trip decimal formatting.
std::string problem_to_text(const DodeProblem& problem);
DodeProblem parse_problem_text(std::string_view text, std::string_view source = "problem");

// DAR cache, keyed by dar_cache_key().
std::string dar_to_text(const DarTensor& dar, const std::string& key);
/// nullopt when the stored key differs from `key`.
std::optional<DarTensor> parse_dar_text(std::string_view text, const std::string& key,
                                        std::string_view source = "dar cache");

// Analysis outputs.
std::string change_summary_csv(std::span<const ChangeSummary> summary, const IntervalScheme& scheme);
std::string change_records_csv(std::span<const OdChangeRecord> records, const TrafficNetwork& network,
                               const std::vector<IncomeExtrema>* incomes);
std::string kde_csv(const KdeResult& kde);

} // namespace dode
