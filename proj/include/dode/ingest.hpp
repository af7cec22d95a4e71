#pragma once

#include "dode/geo.hpp"
#include "dode/network.hpp"
#include "dode/table.hpp"
#include "dode/time_grid.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace dode {

using MaybeValue = std::optional<double>;

/// One raw observation. Missing fields are nullopt.
struct SensorRecord {
    std::string sensor_id;
    std::size_t interval = 0;
    MaybeValue flow;  ///< vehicles per interval
    MaybeValue speed; ///< km/h
};

/// Raw per-sensor series on a TimeGrid (index = global interval).
struct SensorSeries {
    std::string sensor_id;
    std::vector<MaybeValue> flow;
    std::vector<MaybeValue> speed;
};

struct CleanSensor {
    std::string sensor_id;
    std::vector<double> flow;
    std::vector<double> speed;
};

using SensorTable = std::unordered_map<std::string, CleanSensor>;

struct CleaningOptions {
    double speed_cap_kmh = 160.0;        ///< speeds above the cap are treated as missing
    std::size_t max_gap_intervals = 12;  ///< longer gaps are reported (still interpolated)
};

struct GapWarning {
    std::string sensor_id;
    std::string field;
    std::size_t first = 0;
    std::size_t length = 0;
};

/// Fills interior gaps linearly in the interval index and edge gaps with the nearest
/// observation. Observed values are untouched. Throws AllMissing.
std::vector<double> interpolate_missing(std::span<const MaybeValue> series);

/// Maximal runs of missing values at least `min_length` long, as (first, length).
std::vector<std::pair<std::size_t, std::size_t>> find_gaps(std::span<const MaybeValue> series,
                                                           std::size_t min_length);

/// Masks invalid values (flow < 0, speed <= 0, speed > cap) and interpolates both fields.
CleanSensor clean_sensor(const SensorSeries& raw, const CleaningOptions& options = {},
                         std::vector<GapWarning>* warnings = nullptr);

/// Groups records into per-sensor series of `intervals` entries (later records win on duplicates).
std::vector<SensorSeries> collect_series(std::span<const SensorRecord> records, std::size_t intervals);

/// Merges `factor` consecutive intervals: flows are summed, speeds flow-weighted
/// (plain mean when the merged flow is zero).
CleanSensor rebin(const CleanSensor& sensor, std::size_t factor);

/// length(S_a): great-circle length spanned by the link's sensors when at least two
/// sensor positions are known, otherwise the link's declared length.
double sensor_span_length_km(const TrafficNetwork& network, const Link& link);

/// y_a(t) = sum_s f_s(t) / (|S_a| v_s(t)) * length(S_a).
/// Throws NoSensorsOnLink, ZeroSpeed, or InvalidArgument for unknown sensors.
double link_flow(const Link& link, const SensorTable& sensors, std::size_t t, double span_length_km);

/// [link][interval] observed flows for every link of the network.
Table link_flows(const TrafficNetwork& network, const SensorTable& sensors, std::size_t intervals);

/// [link][interval] mean speed over the link's sensors.
Table link_speeds(const TrafficNetwork& network, const SensorTable& sensors, std::size_t intervals);

struct ArterialSensor {
    std::string sensor_id;
    LatLon position;
    std::vector<double> flow;
};

/// alpha * sum of arterial flows within lambda_km (inclusive) of `node` at interval t.
double local_lower_bound(const LatLon& node, std::span<const ArterialSensor> arterials, std::size_t t,
                         double lambda_km, double alpha);

/// [node][interval] table of alpha * LB_i(t).
Table lower_bounds(const TrafficNetwork& network, std::span<const ArterialSensor> arterials,
                   std::size_t intervals, double lambda_km, double alpha);

} // namespace dode
