#pragma once

#include "dode/geo.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace dode {

struct Node {
    std::string id;
    LatLon position;
    std::string region_id; ///< empty when the node belongs to no region
};

struct Link {
    std::string id;
    std::string from_node;
    std::string to_node;
    double length_km = 0.0;
    std::vector<std::string> sensor_ids; ///< ordered along the direction of travel
};

struct Region {
    std::string id;
    std::string name;
    std::vector<std::string> node_ids;
};

/// A simple directed route; links are indices into TrafficNetwork::links().
struct Path {
    std::vector<std::size_t> links;
    double total_length_km = 0.0;

    bool operator==(const Path&) const = default;
};

/// Ordered origin/destination node pair (node indices) with its retained paths.
struct OdPair {
    std::size_t origin = 0;
    std::size_t destination = 0;
    std::vector<Path> paths;
};

/// Validated, immutable road graph. Construct with build_network().
class TrafficNetwork {
public:
    const std::vector<Node>& nodes() const noexcept { return nodes_; }
    const std::vector<Link>& links() const noexcept { return links_; }
    const std::vector<Region>& regions() const noexcept { return regions_; }

    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::size_t link_count() const noexcept { return links_.size(); }

    std::optional<std::size_t> find_node(std::string_view id) const;
    std::optional<std::size_t> find_link(std::string_view id) const;
    /// Throws DanglingReference for unknown ids.
    std::size_t node_index(std::string_view id) const;

    std::size_t link_source(std::size_t link) const { return link_ends_[link].first; }
    std::size_t link_target(std::size_t link) const { return link_ends_[link].second; }
    const std::vector<std::size_t>& out_links(std::size_t node) const { return out_links_[node]; }
    const std::vector<std::size_t>& in_links(std::size_t node) const { return in_links_[node]; }

    /// Region index of a node, if it has one.
    std::optional<std::size_t> region_of(std::size_t node) const { return node_region_[node]; }

    /// Known sensor coordinates (optional network-file section).
    std::optional<LatLon> sensor_position(std::string_view sensor_id) const;
    const std::unordered_map<std::string, LatLon>& sensor_positions() const noexcept { return sensor_positions_; }

    /// Stable content digest over nodes, links, regions and sensor positions.
    const std::string& digest() const noexcept { return digest_; }

private:
    friend TrafficNetwork build_network(std::vector<Node>, std::vector<Link>, std::vector<Region>,
                                        std::unordered_map<std::string, LatLon>);

    std::vector<Node> nodes_;
    std::vector<Link> links_;
    std::vector<Region> regions_;
    std::unordered_map<std::string, LatLon> sensor_positions_;
    std::unordered_map<std::string, std::size_t> node_lookup_;
    std::unordered_map<std::string, std::size_t> link_lookup_;
    std::vector<std::pair<std::size_t, std::size_t>> link_ends_;
    std::vector<std::vector<std::size_t>> out_links_;
    std::vector<std::vector<std::size_t>> in_links_;
    std::vector<std::optional<std::size_t>> node_region_;
    std::string digest_;
};

/// Validates references and strong connectivity over all nodes.
/// Region membership may be given on the nodes, on the regions, or both; a node may belong to one region only.
/// Throws DanglingReference, DisconnectedGraph or InvalidArgument.
TrafficNetwork build_network(std::vector<Node> nodes, std::vector<Link> links, std::vector<Region> regions,
                             std::unordered_map<std::string, LatLon> sensor_positions = {});

struct PathOptions {
    std::size_t max_paths = 1; ///< number of equal-length shortest paths retained per pair
    std::uint64_t seed = 0;    ///< tie-break seed
};

/// Minimum-length path; ties are broken uniformly at random over all shortest paths,
/// reproducibly for a given seed. Throws NoPath.
Path shortest_path(const TrafficNetwork& network, std::size_t origin, std::size_t destination,
                   std::uint64_t tie_break_seed);

/// Up to max_paths distinct shortest paths (all of them when fewer exist).
std::vector<Path> shortest_paths(const TrafficNetwork& network, std::size_t origin, std::size_t destination,
                                 const PathOptions& options);

/// All n(n-1) ordered pairs, origin-major in node order, each with its retained paths.
std::vector<OdPair> enumerate_od_pairs(const TrafficNetwork& network, const PathOptions& options = {});

/// (origin region, destination region) -> indices into `od_pairs`.
using RegionFlowIndex = std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>>;

/// Throws UnassignedNode if an OD endpoint has no region.
RegionFlowIndex region_flow_index(const TrafficNetwork& network, std::span<const OdPair> od_pairs);

} // namespace dode
