#include "dode/synth.hpp"

#include "dode/error.hpp"
#include "dode/util.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <unordered_set>

namespace dode {

namespace {

constexpr double kKmPerDegree = kEarthRadiusKm * std::numbers::pi / 180.0;

LatLon offset_km(const LatLon& origin, double north_km, double east_km)
{
    const double lat = origin.lat + north_km / kKmPerDegree;
    const double lon = origin.lon + east_km / (kKmPerDegree * std::cos(origin.lat * std::numbers::pi / 180.0));
    return {lat, lon};
}

Link make_link(const std::vector<Node>& nodes, std::size_t from, std::size_t to)
{
    Link l;
    l.id = "l_" + nodes[from].id + "_" + nodes[to].id;
    l.from_node = nodes[from].id;
    l.to_node = nodes[to].id;
    l.length_km = haversine_km(nodes[from].position, nodes[to].position);
    l.sensor_ids = {"s_" + l.id};
    return l;
}

double bump(double minutes, double centre, double width)
{
    const double z = (minutes - centre) / width;
    return std::exp(-0.5 * z * z);
}

double minute_of_day(const TimeGrid& grid, std::size_t t)
{
    return static_cast<double>((t % grid.intervals_per_day()) * static_cast<std::size_t>(grid.interval_minutes()));
}

} // namespace

TrafficNetwork make_grid_network(const GridSpec& spec)
{
    if (spec.rows == 0 || spec.cols == 0 || spec.rows * spec.cols < 2)
        throw InvalidArgument("grid needs at least two nodes");
    if (!(spec.spacing_km > 0.0))
        throw InvalidArgument("grid spacing must be positive");
    if (spec.region_rows == 0 || spec.region_cols == 0 || spec.region_rows > spec.rows
        || spec.region_cols > spec.cols)
        throw InvalidArgument("region tiling must fit inside the grid");

    std::vector<Node> nodes;
    for (std::size_t r = 0; r < spec.rows; ++r) {
        for (std::size_t c = 0; c < spec.cols; ++c) {
            const auto rr = r * spec.region_rows / spec.rows;
            const auto rc = c * spec.region_cols / spec.cols;
            nodes.push_back({"n" + std::to_string(r) + "_" + std::to_string(c),
                             offset_km(spec.origin, static_cast<double>(r) * spec.spacing_km,
                                       static_cast<double>(c) * spec.spacing_km),
                             "R" + std::to_string(rr * spec.region_cols + rc)});
        }
    }
    std::vector<Link> links;
    auto at = [&](std::size_t r, std::size_t c) { return r * spec.cols + c; };
    for (std::size_t r = 0; r < spec.rows; ++r) {
        for (std::size_t c = 0; c < spec.cols; ++c) {
            if (c + 1 < spec.cols) {
                links.push_back(make_link(nodes, at(r, c), at(r, c + 1)));
                links.push_back(make_link(nodes, at(r, c + 1), at(r, c)));
            }
            if (r + 1 < spec.rows) {
                links.push_back(make_link(nodes, at(r, c), at(r + 1, c)));
                links.push_back(make_link(nodes, at(r + 1, c), at(r, c)));
            }
        }
    }
    std::vector<Region> regions;
    for (std::size_t k = 0; k < spec.region_rows * spec.region_cols; ++k)
        regions.push_back({"R" + std::to_string(k), "Region " + std::to_string(k), {}});
    return build_network(std::move(nodes), std::move(links), std::move(regions));
}

TrafficNetwork make_complete_network(std::size_t count, double radius_km, bool regions_per_node, LatLon centre)
{
    if (count < 2)
        throw InvalidArgument("complete network needs at least two nodes");
    if (!(radius_km > 0.0))
        throw InvalidArgument("radius must be positive");
    std::vector<Node> nodes;
    std::vector<Region> regions;
    for (std::size_t i = 0; i < count; ++i) {
        const double theta = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(count);
        const std::string region = regions_per_node ? "R" + std::to_string(i) : "R0";
        nodes.push_back({"n" + std::to_string(i),
                         offset_km(centre, radius_km * std::cos(theta), radius_km * std::sin(theta)), region});
        if (regions_per_node || i == 0)
            regions.push_back({region, "Region " + region.substr(1), {}});
    }
    std::vector<Link> links;
    for (std::size_t i = 0; i < count; ++i) {
        for (std::size_t j = 0; j < count; ++j) {
            if (i != j)
                links.push_back(make_link(nodes, i, j));
        }
    }
    return build_network(std::move(nodes), std::move(links), std::move(regions));
}

void ProfileParams::validate() const
{
    if (!(base_level >= 0.0 && morning_height >= 0.0 && evening_height >= 0.0))
        throw InvalidArgument("demand levels must be nonnegative");
    if (!(width_minutes > 0.0))
        throw InvalidArgument("peak width must be positive");
    if (!(factor_min >= 0.0 && factor_max >= factor_min))
        throw InvalidArgument("OD factor range must satisfy 0 <= min <= max");
    if (!(base_speed_kmh > 0.0) || !std::isfinite(base_speed_kmh))
        throw InvalidArgument("base speed must be positive");
    if (!(peak_speed_drop >= 0.0 && peak_speed_drop < 1.0))
        throw InvalidArgument("peak speed drop must lie in [0, 1)");
    if (!(arterial_ratio >= 0.0))
        throw InvalidArgument("arterial ratio must be nonnegative");
}

double demand_curve(const ProfileParams& p, const TimeGrid& grid, std::size_t t)
{
    const double m = minute_of_day(grid, t);
    return p.base_level + p.morning_height * bump(m, p.morning_center_minutes, p.width_minutes)
        + p.evening_height * bump(m, p.evening_center_minutes, p.width_minutes);
}

Table node_demand(const TrafficNetwork& network, std::span<const OdPair> od_pairs, std::size_t intervals,
                  std::span<const double> q)
{
    const VariableIndex index(od_pairs, network.node_count(), intervals);
    if (q.size() < index.q_count())
        throw DimensionMismatch("q vector is shorter than the variable index");
    Table out(network.node_count(), intervals);
    for (std::size_t od = 0; od < od_pairs.size(); ++od) {
        for (std::size_t k = 0; k < index.path_count(od); ++k) {
            for (std::size_t t = 0; t < intervals; ++t) {
                const double v = q[index.q_column(od, k, t)];
                out(od_pairs[od].origin, t) += v;
                out(od_pairs[od].destination, t) += v;
            }
        }
    }
    return out;
}

Scenario generate_scenario(const TrafficNetwork& network, const TimeGrid& grid, const ProfileParams& params,
                           std::uint64_t seed, const PathOptions& paths, RouteChoiceMode route_mode)
{
    params.validate();
    Scenario s{network, grid, enumerate_od_pairs(network, paths), {}, {}, {}, route_mode, seed};
    const auto intervals = grid.interval_count();
    const VariableIndex index(s.od_pairs, network.node_count(), intervals);

    Rng rng(seed);
    std::map<std::pair<std::size_t, std::size_t>, double> factors;
    std::vector<double> curve(intervals);
    for (std::size_t t = 0; t < intervals; ++t)
        curve[t] = demand_curve(params, grid, t);

    s.ground_truth_q.assign(index.q_count(), 0.0);
    for (std::size_t od = 0; od < s.od_pairs.size(); ++od) {
        const auto& pair = s.od_pairs[od];
        double factor = rng.uniform(params.factor_min, params.factor_max);
        if (params.symmetric) {
            auto reverse = factors.find({pair.destination, pair.origin});
            if (reverse != factors.end())
                factor = reverse->second;
        }
        factors[{pair.origin, pair.destination}] = factor;
        const auto portions = route_choice_portions(pair.paths.size(), route_mode);
        for (std::size_t k = 0; k < pair.paths.size(); ++k) {
            for (std::size_t t = 0; t < intervals; ++t)
                s.ground_truth_q[index.q_column(od, k, t)] = factor * curve[t] * portions[k];
        }
    }

    s.speeds.interval_minutes = grid.interval_minutes();
    s.speeds.kmh = Table(network.link_count(), intervals);
    for (std::size_t t = 0; t < intervals; ++t) {
        const double m = minute_of_day(grid, t);
        const double peak = std::max(bump(m, params.morning_center_minutes, params.width_minutes),
                                     bump(m, params.evening_center_minutes, params.width_minutes));
        const double v = params.base_speed_kmh * (1.0 - params.peak_speed_drop * peak);
        for (std::size_t a = 0; a < network.link_count(); ++a)
            s.speeds.kmh(a, t) = v;
    }

    const auto demand = node_demand(network, s.od_pairs, intervals, s.ground_truth_q);
    for (std::size_t i = 0; i < network.node_count(); ++i) {
        ArterialSensor a{"art_" + network.nodes()[i].id, network.nodes()[i].position, {}};
        a.flow.resize(intervals);
        for (std::size_t t = 0; t < intervals; ++t)
            a.flow[t] = params.arterial_ratio * demand(i, t);
        s.arterials.push_back(std::move(a));
    }
    return s;
}

Observations forward_simulate(const Scenario& scenario, const DarTensor& dar, const RouteChoice& route_choice,
                              const NoiseOptions& noise)
{
    const auto& network = scenario.network;
    const auto intervals = scenario.grid.interval_count();
    const VariableIndex index(scenario.od_pairs, network.node_count(), intervals);
    if (scenario.ground_truth_q.size() != index.q_count())
        throw DimensionMismatch("ground truth does not match the scenario's OD paths");
    if (dar.od_count() != scenario.od_pairs.size() || dar.intervals() != intervals
        || route_choice.od_count() != scenario.od_pairs.size())
        throw DimensionMismatch("DAR or route choice does not match the scenario");
    if (!(noise.flow_sigma >= 0.0))
        throw InvalidArgument("noise sigma must be nonnegative");

    Observations out;
    out.link_flows = Table(network.link_count(), intervals);
    for (const auto& e : dar.entries()) {
        const double p = route_choice.probability(e.od, e.path, e.t_prime);
        out.link_flows(e.link, e.t) += e.ratio * p * scenario.ground_truth_q[index.q_column(e.od, e.path, e.t_prime)];
    }

    Rng rng(noise.seed);
    std::unordered_set<std::string> seen;
    for (std::size_t a = 0; a < network.link_count(); ++a) {
        const auto& link = network.links()[a];
        for (const auto& id : link.sensor_ids) {
            if (!seen.insert(id).second)
                throw InvalidArgument("sensor '" + id + "' is attached to more than one link");
        }
        const double length = sensor_span_length_km(network, link);
        for (std::size_t t = 0; t < intervals; ++t) {
            const double v = scenario.speeds.kmh(a, t);
            const double f = out.link_flows(a, t) * v / length;
            for (const auto& id : link.sensor_ids) {
                double observed = f;
                if (noise.flow_sigma > 0.0)
                    observed *= std::exp(noise.flow_sigma * rng.normal() - 0.5 * noise.flow_sigma * noise.flow_sigma);
                out.records.push_back({id, t, observed, v});
            }
        }
    }
    return out;
}

} // namespace dode
