#include "support.hpp"

#include "dode/error.hpp"
#include "dode/geo.hpp"
#include "dode/network.hpp"
#include "dode/synth.hpp"

#include <doctest.h>

#include <functional>
#include <set>

using namespace dode;
using dode::test::make_network;

namespace {

/// Every simple path from origin to destination by depth-first search.
std::vector<std::vector<std::size_t>> all_simple_paths(const TrafficNetwork& net, std::size_t origin,
                                                       std::size_t destination)
{
    std::vector<std::vector<std::size_t>> out;
    std::vector<std::size_t> stack;
    std::vector<bool> visited(net.node_count(), false);
    std::function<void(std::size_t)> dfs = [&](std::size_t v) {
        if (v == destination) {
            out.push_back(stack);
            return;
        }
        visited[v] = true;
        for (std::size_t l = 0; l < net.link_count(); ++l) {
            if (net.link_source(l) != v || visited[net.link_target(l)])
                continue;
            stack.push_back(l);
            dfs(net.link_target(l));
            stack.pop_back();
        }
        visited[v] = false;
    };
    dfs(origin);
    return out;
}

double path_length(const TrafficNetwork& net, const std::vector<std::size_t>& links)
{
    double s = 0.0;
    for (auto l : links)
        s += net.links()[l].length_km;
    return s;
}

/// Ring 0 -> 1 -> ... -> n-1 -> 0 plus random chords with small integer lengths (so ties occur).
TrafficNetwork random_network(Rng& rng, std::size_t n)
{
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i)
        ids.push_back("v" + std::to_string(i));
    std::vector<dode::test::LinkSpec> links;
    std::set<std::pair<std::size_t, std::size_t>> used;
    for (std::size_t i = 0; i < n; ++i) {
        links.push_back({ids[i], ids[(i + 1) % n], static_cast<double>(1 + rng.index(3))});
        used.insert({i, (i + 1) % n});
    }
    for (std::size_t k = 0; k < 2 * n; ++k) {
        const auto a = rng.index(n), b = rng.index(n);
        if (a == b || !used.insert({a, b}).second)
            continue;
        links.push_back({ids[a], ids[b], static_cast<double>(1 + rng.index(3))});
    }
    return make_network(ids, links);
}

} // namespace

TEST_CASE("two nodes with opposing links form a valid network")
{
    const auto net = make_network({"A", "B"}, {{"A", "B", 1.0}, {"B", "A", 1.0}});
    CHECK(net.node_count() == 2);
    CHECK(net.link_count() == 2);
    CHECK(net.node_index("B") == 1);
    CHECK(net.out_links(0).size() == 1);
    CHECK(net.in_links(0).size() == 1);
    CHECK_FALSE(net.digest().empty());
}

TEST_CASE("link referencing an unknown node is rejected")
{
    CHECK_THROWS_AS(make_network({"A", "B"}, {{"A", "B", 1.0}, {"B", "Z", 1.0}}), DanglingReference);
}

TEST_CASE("graph without a return path reports every unreachable pair")
{
    try {
        make_network({"A", "B", "C"}, {{"A", "B", 1.0}, {"B", "C", 1.0}});
        FAIL("expected DisconnectedGraph");
    } catch (const DisconnectedGraph& e) {
        const std::set<std::pair<std::string, std::string>> got(e.unreachable.begin(), e.unreachable.end());
        CHECK(got.count({"C", "A"}) == 1);
        CHECK(got == std::set<std::pair<std::string, std::string>>{{"B", "A"}, {"C", "A"}, {"C", "B"}});
        CHECK(std::string(e.what()).find("C") != std::string::npos);
    }
}

TEST_CASE("invalid node and link definitions are rejected")
{
    CHECK_THROWS_AS(make_network({"A", "A"}, {{"A", "A", 1.0}}), InvalidArgument);
    CHECK_THROWS_AS(make_network({"A", "B"}, {{"A", "B", 0.0}, {"B", "A", 1.0}}), InvalidArgument);
    CHECK_THROWS_AS(make_network({"A", "B"}, {{"A", "A", 1.0}, {"A", "B", 1.0}, {"B", "A", 1.0}}), InvalidArgument);
}

TEST_CASE("region membership from nodes and regions combines without conflicts")
{
    std::vector<Node> nodes{{"A", {34.0, -118.0}, "R1"}, {"B", {34.1, -118.0}, ""}};
    std::vector<Link> links{{"ab", "A", "B", 1.0, {}}, {"ba", "B", "A", 1.0, {}}};
    const auto net = build_network(nodes, links, {{"R1", "one", {"A"}}, {"R2", "two", {"B"}}});
    CHECK(net.region_of(0) == std::optional<std::size_t>{0});
    CHECK(net.region_of(1) == std::optional<std::size_t>{1});
    // Memberships from both sources combine; a node claimed by two regions is a conflict.
    const auto merged = build_network(nodes, links, {{"R1", "one", {"B"}}});
    CHECK(merged.region_of(1) == std::optional<std::size_t>{0});
    CHECK_THROWS_AS(build_network(nodes, links, {{"R1", "one", {}}, {"R2", "two", {"A"}}}), InvalidArgument);
    CHECK_THROWS_AS(build_network(nodes, links, {{"R1", "one", {"Q"}}}), DanglingReference);
}

TEST_CASE("od pair counts are n(n-1)")
{
    const auto two = make_network({"A", "B"}, {{"A", "B", 1.0}, {"B", "A", 1.0}});
    const auto pairs = enumerate_od_pairs(two);
    REQUIRE(pairs.size() == 2);
    CHECK(pairs[0].origin == 0);
    CHECK(pairs[0].destination == 1);
    CHECK(pairs[1].origin == 1);
    for (auto [rows, cols, want] : std::vector<std::tuple<std::size_t, std::size_t, std::size_t>>{
             {13, 5, 4160}, {13, 4, 2652}, {8, 5, 1560}, {3, 3, 72}}) {
        GridSpec spec;
        spec.rows = rows;
        spec.cols = cols;
        const auto net = make_grid_network(spec);
        CHECK(net.node_count() == rows * cols);
        const auto od = enumerate_od_pairs(net);
        CHECK(od.size() == want);
        for (const auto& p : od) {
            CHECK(p.origin != p.destination);
            CHECK(p.paths.size() == 1);
        }
    }
}

TEST_CASE("single link path")
{
    const auto net = make_network({"A", "B"}, {{"A", "B", 5.0}, {"B", "A", 5.0}});
    const auto p = shortest_path(net, 0, 1, 0);
    CHECK(p.links == std::vector<std::size_t>{0});
    CHECK(p.total_length_km == doctest::Approx(5.0));
}

TEST_CASE("origin equal to destination has no path")
{
    const auto net = make_network({"A", "B"}, {{"A", "B", 5.0}, {"B", "A", 5.0}});
    CHECK_THROWS_AS(shortest_path(net, 0, 0, 0), NoPath);
}

TEST_CASE("diamond tie is broken reproducibly by seed")
{
    const auto net = make_network({"S", "U", "V", "T"}, {{"S", "U", 1.0},
                                                         {"S", "V", 1.0},
                                                         {"U", "T", 1.0},
                                                         {"V", "T", 1.0},
                                                         {"T", "S", 1.0}});
    const auto routes = all_simple_paths(net, 0, 3);
    REQUIRE(routes.size() == 2);
    std::set<std::vector<std::size_t>> seen;
    for (std::uint64_t seed = 0; seed < 64; ++seed) {
        const auto p = shortest_path(net, 0, 3, seed);
        CHECK(p == shortest_path(net, 0, 3, seed));
        CHECK(p.total_length_km == doctest::Approx(2.0));
        CHECK((p.links == routes[0] || p.links == routes[1]));
        seen.insert(p.links);
    }
    CHECK(seen.size() == 2);
    const auto both = shortest_paths(net, 0, 3, {4, 7});
    CHECK(both.size() == 2);
}

TEST_CASE("shortest paths agree with exhaustive simple-path enumeration")
{
    Rng rng(11);
    for (int trial = 0; trial < 25; ++trial) {
        const auto net = random_network(rng, 3 + rng.index(5));
        for (std::size_t o = 0; o < net.node_count(); ++o) {
            for (std::size_t d = 0; d < net.node_count(); ++d) {
                if (o == d)
                    continue;
                const auto routes = all_simple_paths(net, o, d);
                double best = 1e300;
                for (const auto& r : routes)
                    best = std::min(best, path_length(net, r));
                std::set<std::vector<std::size_t>> optimal;
                for (const auto& r : routes)
                    if (std::abs(path_length(net, r) - best) < 1e-9)
                        optimal.insert(r);

                const auto one = shortest_path(net, o, d, static_cast<std::uint64_t>(trial));
                CHECK(one.total_length_km == doctest::Approx(best));
                CHECK(optimal.count(one.links) == 1);

                const auto many = shortest_paths(net, o, d, {optimal.size() + 3, 1});
                const std::set<std::vector<std::size_t>> got = [&] {
                    std::set<std::vector<std::size_t>> s;
                    for (const auto& p : many)
                        s.insert(p.links);
                    return s;
                }();
                CHECK(many.size() == optimal.size());
                CHECK(got == optimal);
            }
        }
    }
}

TEST_CASE("region flow index keys")
{
    SUBCASE("one node per region")
    {
        const auto net = make_network({"A", "B"}, {{"A", "B", 1.0}, {"B", "A", 1.0}}, {"R1", "R2"});
        const auto pairs = enumerate_od_pairs(net);
        const auto idx = region_flow_index(net, pairs);
        REQUIRE(idx.size() == 2);
        CHECK(idx.at({0, 1}) == std::vector<std::size_t>{0});
        CHECK(idx.at({1, 0}) == std::vector<std::size_t>{1});
    }
    SUBCASE("single region holds every pair")
    {
        const auto net = make_network({"A", "B", "C"}, {{"A", "B", 1.0}, {"B", "C", 1.0}, {"C", "A", 1.0}},
                                      {"R1", "R1", "R1"});
        const auto pairs = enumerate_od_pairs(net);
        const auto idx = region_flow_index(net, pairs);
        REQUIRE(idx.size() == 1);
        CHECK(idx.at({0, 0}).size() == 6);
    }
    SUBCASE("matches a brute-force membership scan")
    {
        const auto net = make_network({"A", "B", "C", "D"},
                                      {{"A", "B", 1.0}, {"B", "C", 1.0}, {"C", "D", 1.0}, {"D", "A", 1.0}},
                                      {"R1", "R2", "R1", "R2"});
        const auto pairs = enumerate_od_pairs(net);
        const auto idx = region_flow_index(net, pairs);
        const std::vector<std::size_t> region{0, 1, 0, 1};
        for (std::size_t i = 0; i < 2; ++i) {
            for (std::size_t j = 0; j < 2; ++j) {
                std::vector<std::size_t> want;
                for (std::size_t k = 0; k < pairs.size(); ++k)
                    if (region[pairs[k].origin] == i && region[pairs[k].destination] == j)
                        want.push_back(k);
                CHECK(idx.at({i, j}) == want);
            }
        }
    }
    SUBCASE("unassigned endpoint")
    {
        const auto net = make_network({"A", "B"}, {{"A", "B", 1.0}, {"B", "A", 1.0}}, {"R1", ""});
        CHECK_THROWS_AS(region_flow_index(net, enumerate_od_pairs(net)), UnassignedNode);
    }
}

TEST_CASE("haversine distance")
{
    CHECK(haversine_km({0.0, 0.0}, {0.0, 0.0}) == 0.0);
    // One degree of arc on the equator.
    CHECK(haversine_km({0.0, 0.0}, {0.0, 1.0}) == doctest::Approx(kEarthRadiusKm * 3.14159265358979323846 / 180.0));
    CHECK(haversine_km({34.0, -118.0}, {34.5, -118.3}) == doctest::Approx(haversine_km({34.5, -118.3}, {34.0, -118.0})));
    CHECK_FALSE(valid_position({91.0, 0.0}));
}
