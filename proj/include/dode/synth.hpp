#pragma once

#include "dode/assignment.hpp"
#include "dode/ingest.hpp"
#include "dode/network.hpp"
#include "dode/problem.hpp"
#include "dode/table.hpp"
#include "dode/time_grid.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace dode {

struct GridSpec {
    std::size_t rows = 3;
    std::size_t cols = 3;
    double spacing_km = 2.0;
    std::size_t region_rows = 1; ///< regions tile the grid in region_rows x region_cols blocks
    std::size_t region_cols = 2;
    LatLon origin{34.05, -118.25};
};

/// Bidirectional 4-neighbour lattice. Every link carries one sensor "s_<link id>".
TrafficNetwork make_grid_network(const GridSpec& spec);

/// Complete digraph on `nodes` points evenly placed on a circle, so every direct link is
/// the unique shortest path between its endpoints. Each node is its own region when
/// `regions_per_node` is set, otherwise all nodes share one region.
TrafficNetwork make_complete_network(std::size_t nodes, double radius_km, bool regions_per_node = true,
                                     LatLon centre = {34.05, -118.25});

struct ProfileParams {
    double base_level = 1.0;        ///< vehicles per interval per OD outside the peaks
    double morning_height = 20.0;
    double evening_height = 25.0;
    double morning_center_minutes = 420.0;
    double evening_center_minutes = 1020.0;
    double width_minutes = 60.0;    ///< Gaussian standard deviation
    double factor_min = 0.5;        ///< per-OD random scale drawn uniformly from [min, max]
    double factor_max = 1.5;
    bool symmetric = false;         ///< (s, r) reuses the factor of (r, s)
    double base_speed_kmh = 50.0;
    double peak_speed_drop = 0.3;   ///< fractional speed loss at the top of a peak
    double arterial_ratio = 0.8;    ///< arterial sensor flow as a share of node demand

    void validate() const;
};

struct Scenario {
    TrafficNetwork network;
    TimeGrid grid;
    std::vector<OdPair> od_pairs;
    std::vector<double> ground_truth_q; ///< over (od, path, interval)
    SpeedProfile speeds;
    std::vector<ArterialSensor> arterials;
    RouteChoiceMode route_mode = RouteChoiceMode::Single;
    std::uint64_t seed = 0;
};

/// Daily demand shape of one OD before its random factor, evaluated at the start of interval t.
double demand_curve(const ProfileParams& params, const TimeGrid& grid, std::size_t t);

/// Ground-truth q for path k is demand * p_k, so the route-choice split is already applied.
/// Arterial sensors sit on each node and read arterial_ratio * (l_i + d_i).
Scenario generate_scenario(const TrafficNetwork& network, const TimeGrid& grid, const ProfileParams& params,
                           std::uint64_t seed, const PathOptions& paths = {},
                           RouteChoiceMode route_mode = RouteChoiceMode::Single);

struct NoiseOptions {
    double flow_sigma = 0.0; ///< lognormal sigma, mean-preserving
    std::uint64_t seed = 0;
};

struct Observations {
    Table link_flows; ///< A_b q, noiseless
    std::vector<SensorRecord> records;
};

/// y = sum rho * p * q per (link, interval), then per-sensor records with the link speed and
/// flow y * v / length so that link_flow() recovers y.
Observations forward_simulate(const Scenario& scenario, const DarTensor& dar, const RouteChoice& route_choice,
                              const NoiseOptions& noise = {});

/// Node-level l_i(t) + d_i(t) of a q vector.
Table node_demand(const TrafficNetwork& network, std::span<const OdPair> od_pairs, std::size_t intervals,
                  std::span<const double> q);

} // namespace dode
