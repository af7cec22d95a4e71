#include "dode/network.hpp"

#include "dode/error.hpp"
#include "dode/util.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <set>
#include <sstream>

namespace dode {

std::optional<std::size_t> TrafficNetwork::find_node(std::string_view id) const
{
    auto it = node_lookup_.find(std::string(id));
    if (it == node_lookup_.end())
        return std::nullopt;
    return it->second;
}

std::optional<std::size_t> TrafficNetwork::find_link(std::string_view id) const
{
    auto it = link_lookup_.find(std::string(id));
    if (it == link_lookup_.end())
        return std::nullopt;
    return it->second;
}

std::size_t TrafficNetwork::node_index(std::string_view id) const
{
    if (auto idx = find_node(id))
        return *idx;
    throw DanglingReference("unknown node '" + std::string(id) + "'");
}

std::optional<LatLon> TrafficNetwork::sensor_position(std::string_view sensor_id) const
{
    auto it = sensor_positions_.find(std::string(sensor_id));
    if (it == sensor_positions_.end())
        return std::nullopt;
    return it->second;
}

namespace {

std::vector<bool> reachable_from(const TrafficNetwork& net, std::size_t start)
{
    std::vector<bool> seen(net.node_count(), false);
    std::vector<std::size_t> stack{start};
    seen[start] = true;
    while (!stack.empty()) {
        const auto u = stack.back();
        stack.pop_back();
        for (auto l : net.out_links(u)) {
            const auto v = net.link_target(l);
            if (!seen[v]) {
                seen[v] = true;
                stack.push_back(v);
            }
        }
    }
    return seen;
}

} // namespace

TrafficNetwork build_network(std::vector<Node> nodes, std::vector<Link> links, std::vector<Region> regions,
                             std::unordered_map<std::string, LatLon> sensor_positions)
{
    TrafficNetwork net;

    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto& n = nodes[i];
        if (n.id.empty())
            throw InvalidArgument("node with empty id");
        if (!valid_position(n.position))
            throw InvalidArgument("node '" + n.id + "' has an invalid latitude/longitude");
        if (!net.node_lookup_.emplace(n.id, i).second)
            throw InvalidArgument("duplicate node id '" + n.id + "'");
    }

    net.link_ends_.reserve(links.size());
    net.out_links_.assign(nodes.size(), {});
    net.in_links_.assign(nodes.size(), {});
    for (std::size_t i = 0; i < links.size(); ++i) {
        const auto& l = links[i];
        if (!net.link_lookup_.emplace(l.id, i).second)
            throw InvalidArgument("duplicate link id '" + l.id + "'");
        auto from = net.node_lookup_.find(l.from_node);
        auto to = net.node_lookup_.find(l.to_node);
        if (from == net.node_lookup_.end())
            throw DanglingReference("link '" + l.id + "' references unknown node '" + l.from_node + "'");
        if (to == net.node_lookup_.end())
            throw DanglingReference("link '" + l.id + "' references unknown node '" + l.to_node + "'");
        if (from->second == to->second)
            throw InvalidArgument("link '" + l.id + "' is a self loop");
        if (!(l.length_km > 0.0) || !std::isfinite(l.length_km))
            throw InvalidArgument("link '" + l.id + "' must have a positive length");
        net.link_ends_.emplace_back(from->second, to->second);
        net.out_links_[from->second].push_back(i);
        net.in_links_[to->second].push_back(i);
    }

    std::unordered_map<std::string, std::size_t> region_lookup;
    for (std::size_t r = 0; r < regions.size(); ++r) {
        if (!region_lookup.emplace(regions[r].id, r).second)
            throw InvalidArgument("duplicate region id '" + regions[r].id + "'");
    }
    net.node_region_.assign(nodes.size(), std::nullopt);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].region_id.empty())
            continue;
        auto it = region_lookup.find(nodes[i].region_id);
        if (it == region_lookup.end())
            throw DanglingReference("node '" + nodes[i].id + "' references unknown region '" + nodes[i].region_id + "'");
        net.node_region_[i] = it->second;
    }
    for (std::size_t r = 0; r < regions.size(); ++r) {
        for (const auto& member : regions[r].node_ids) {
            auto it = net.node_lookup_.find(member);
            if (it == net.node_lookup_.end())
                throw DanglingReference("region '" + regions[r].id + "' references unknown node '" + member + "'");
            auto& assigned = net.node_region_[it->second];
            if (assigned && *assigned != r)
                throw InvalidArgument("node '" + member + "' appears in two regions");
            assigned = r;
        }
    }
    // Normalize both membership views from node_region_.
    for (auto& region : regions)
        region.node_ids.clear();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (auto r = net.node_region_[i]) {
            nodes[i].region_id = regions[*r].id;
            regions[*r].node_ids.push_back(nodes[i].id);
        }
    }
    for (const auto& region : regions) {
        if (region.node_ids.empty())
            throw InvalidArgument("region '" + region.id + "' has no nodes");
    }

    net.nodes_ = std::move(nodes);
    net.links_ = std::move(links);
    net.regions_ = std::move(regions);
    net.sensor_positions_ = std::move(sensor_positions);

    std::vector<std::pair<std::string, std::string>> unreachable;
    for (std::size_t u = 0; u < net.node_count(); ++u) {
        const auto seen = reachable_from(net, u);
        for (std::size_t v = 0; v < net.node_count(); ++v) {
            if (!seen[v])
                unreachable.emplace_back(net.nodes_[u].id, net.nodes_[v].id);
        }
    }
    if (!unreachable.empty()) {
        std::ostringstream msg;
        msg << "network is not strongly connected; no path for";
        const std::size_t shown = std::min<std::size_t>(unreachable.size(), 8);
        for (std::size_t i = 0; i < shown; ++i)
            msg << (i ? ", " : " ") << "(" << unreachable[i].first << ", " << unreachable[i].second << ")";
        if (unreachable.size() > shown)
            msg << " and " << (unreachable.size() - shown) << " more";
        throw DisconnectedGraph(msg.str(), std::move(unreachable));
    }

    Digest d;
    d.add(std::uint64_t{net.nodes_.size()});
    for (const auto& n : net.nodes_)
        d.add(n.id).add(n.position.lat).add(n.position.lon).add(n.region_id);
    d.add(std::uint64_t{net.links_.size()});
    for (const auto& l : net.links_) {
        d.add(l.id).add(l.from_node).add(l.to_node).add(l.length_km);
        d.add(std::uint64_t{l.sensor_ids.size()});
        for (const auto& s : l.sensor_ids)
            d.add(s);
    }
    d.add(std::uint64_t{net.regions_.size()});
    for (const auto& r : net.regions_)
        d.add(r.id).add(r.name);
    std::vector<std::string> sensor_keys;
    for (const auto& [id, pos] : net.sensor_positions_)
        sensor_keys.push_back(id);
    std::sort(sensor_keys.begin(), sensor_keys.end());
    for (const auto& id : sensor_keys) {
        const auto& p = net.sensor_positions_.at(id);
        d.add(id).add(p.lat).add(p.lon);
    }
    net.digest_ = d.hex();
    return net;
}

namespace {

/// Shortest-path DAG from one origin: distances, tight in-links,
/// and the number of distinct shortest paths reaching each node.
struct ShortestPathDag {
    std::vector<double> dist;
    std::vector<std::vector<std::size_t>> tight_in;
    std::vector<double> count;
};

bool nearly_equal(double a, double b)
{
    return std::abs(a - b) <= 1e-9 * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

ShortestPathDag build_dag(const TrafficNetwork& net, std::size_t origin)
{
    const auto n = net.node_count();
    constexpr double inf = std::numeric_limits<double>::infinity();
    ShortestPathDag dag{std::vector<double>(n, inf), std::vector<std::vector<std::size_t>>(n),
                        std::vector<double>(n, 0.0)};
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dag.dist[origin] = 0.0;
    heap.emplace(0.0, origin);
    std::vector<bool> done(n, false);
    std::vector<std::size_t> order;
    while (!heap.empty()) {
        auto [d, u] = heap.top();
        heap.pop();
        if (done[u])
            continue;
        done[u] = true;
        order.push_back(u);
        for (auto l : net.out_links(u)) {
            const auto v = net.link_target(l);
            const double nd = d + net.links()[l].length_km;
            if (dag.dist[v] == inf || (nd < dag.dist[v] && !nearly_equal(nd, dag.dist[v]))) {
                dag.dist[v] = nd;
                heap.emplace(nd, v);
            }
        }
    }
    for (std::size_t v = 0; v < n; ++v) {
        if (v == origin || dag.dist[v] == inf)
            continue;
        for (auto l : net.in_links(v)) {
            const auto u = net.link_source(l);
            if (dag.dist[u] != inf && nearly_equal(dag.dist[u] + net.links()[l].length_km, dag.dist[v]))
                dag.tight_in[v].push_back(l);
        }
    }
    dag.count[origin] = 1.0;
    for (auto v : order) {
        if (v == origin)
            continue;
        for (auto l : dag.tight_in[v])
            dag.count[v] += dag.count[net.link_source(l)];
    }
    return dag;
}

Path make_path(const TrafficNetwork& net, std::vector<std::size_t> reversed_links)
{
    Path p;
    p.links.assign(reversed_links.rbegin(), reversed_links.rend());
    for (auto l : p.links)
        p.total_length_km += net.links()[l].length_km;
    return p;
}

/// Walks back from the destination choosing each tight in-link with probability
/// proportional to the path count of its source; uniform over all shortest paths.
Path sample_path(const TrafficNetwork& net, const ShortestPathDag& dag, std::size_t origin,
                 std::size_t destination, Rng& rng)
{
    std::vector<std::size_t> rev;
    auto v = destination;
    while (v != origin) {
        const auto& in = dag.tight_in[v];
        std::size_t chosen = in.front();
        if (in.size() > 1) {
            double r = rng.uniform() * dag.count[v];
            for (auto l : in) {
                chosen = l;
                r -= dag.count[net.link_source(l)];
                if (r < 0.0)
                    break;
            }
        }
        rev.push_back(chosen);
        v = net.link_source(chosen);
    }
    return make_path(net, std::move(rev));
}

void enumerate_paths(const TrafficNetwork& net, const ShortestPathDag& dag, std::size_t origin, std::size_t v,
                     std::vector<std::size_t>& rev, std::vector<Path>& out, std::size_t limit)
{
    if (out.size() >= limit)
        return;
    if (v == origin) {
        out.push_back(make_path(net, rev));
        return;
    }
    for (auto l : dag.tight_in[v]) {
        rev.push_back(l);
        enumerate_paths(net, dag, origin, net.link_source(l), rev, out, limit);
        rev.pop_back();
    }
}

std::uint64_t pair_seed(const TrafficNetwork& net, std::size_t origin, std::size_t destination, std::uint64_t seed)
{
    return Digest().add(seed).add(net.nodes()[origin].id).add(net.nodes()[destination].id).value();
}

std::vector<Path> select_paths(const TrafficNetwork& net, const ShortestPathDag& dag, std::size_t origin,
                               std::size_t destination, const PathOptions& options)
{
    if (destination == origin || dag.tight_in[destination].empty())
        throw NoPath("no path from '" + net.nodes()[origin].id + "' to '" + net.nodes()[destination].id + "'");
    const std::size_t k = std::max<std::size_t>(1, options.max_paths);
    Rng rng(pair_seed(net, origin, destination, options.seed));
    std::vector<Path> paths;
    if (dag.count[destination] <= static_cast<double>(k)) {
        std::vector<std::size_t> rev;
        enumerate_paths(net, dag, origin, destination, rev, paths, k);
        return paths;
    }
    if (k == 1) {
        paths.push_back(sample_path(net, dag, origin, destination, rng));
        return paths;
    }
    std::set<std::vector<std::size_t>> seen;
    for (int attempt = 0; attempt < 100000 && paths.size() < k; ++attempt) {
        auto p = sample_path(net, dag, origin, destination, rng);
        if (seen.insert(p.links).second)
            paths.push_back(std::move(p));
    }
    return paths;
}

} // namespace

Path shortest_path(const TrafficNetwork& network, std::size_t origin, std::size_t destination,
                   std::uint64_t tie_break_seed)
{
    return shortest_paths(network, origin, destination, PathOptions{1, tie_break_seed}).front();
}

std::vector<Path> shortest_paths(const TrafficNetwork& network, std::size_t origin, std::size_t destination,
                                 const PathOptions& options)
{
    if (origin >= network.node_count() || destination >= network.node_count())
        throw InvalidArgument("node index out of range");
    const auto dag = build_dag(network, origin);
    return select_paths(network, dag, origin, destination, options);
}

std::vector<OdPair> enumerate_od_pairs(const TrafficNetwork& network, const PathOptions& options)
{
    const auto n = network.node_count();
    std::vector<OdPair> pairs;
    pairs.reserve(n * (n > 0 ? n - 1 : 0));
    for (std::size_t r = 0; r < n; ++r) {
        const auto dag = build_dag(network, r);
        for (std::size_t s = 0; s < n; ++s) {
            if (s == r)
                continue;
            pairs.push_back(OdPair{r, s, select_paths(network, dag, r, s, options)});
        }
    }
    return pairs;
}

RegionFlowIndex region_flow_index(const TrafficNetwork& network, std::span<const OdPair> od_pairs)
{
    RegionFlowIndex index;
    for (std::size_t k = 0; k < od_pairs.size(); ++k) {
        const auto& od = od_pairs[k];
        const auto ri = network.region_of(od.origin);
        const auto rj = network.region_of(od.destination);
        if (!ri)
            throw UnassignedNode("node '" + network.nodes()[od.origin].id + "' has no region");
        if (!rj)
            throw UnassignedNode("node '" + network.nodes()[od.destination].id + "' has no region");
        index[{*ri, *rj}].push_back(k);
    }
    return index;
}

} // namespace dode
