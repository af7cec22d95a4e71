#include "support.hpp"

#include "dode/analysis.hpp"
#include "dode/error.hpp"
#include "dode/synth.hpp"

#include <doctest.h>

#include <numeric>

using namespace dode;

namespace {

const Date kDay{std::chrono::year{2019}, std::chrono::month{3}, std::chrono::day{4}};

} // namespace

TEST_CASE("grid and complete network generators")
{
    GridSpec spec;
    spec.rows = 2;
    spec.cols = 3;
    const auto grid = make_grid_network(spec);
    CHECK(grid.node_count() == 6);
    CHECK(grid.link_count() == 2 * (2 * 2 + 3 * 1));
    CHECK(grid.regions().size() == 2);
    for (const auto& l : grid.links()) {
        CHECK(l.sensor_ids.size() == 1);
        CHECK(l.length_km == doctest::Approx(2.0).epsilon(1e-3));
    }
    CHECK_THROWS_AS(make_grid_network({1, 1}), InvalidArgument);

    const auto complete = make_complete_network(5, 3.0);
    CHECK(complete.link_count() == 20);
    CHECK(complete.regions().size() == 5);
    for (const auto& od : enumerate_od_pairs(complete)) {
        REQUIRE(od.paths[0].links.size() == 1);
        const auto l = od.paths[0].links[0];
        CHECK(complete.link_source(l) == od.origin);
        CHECK(complete.link_target(l) == od.destination);
    }
}

TEST_CASE("zero levels give zero demand and zero link flows")
{
    ProfileParams params;
    params.base_level = 0.0;
    params.morning_height = 0.0;
    params.evening_height = 0.0;
    const auto s = generate_scenario(make_grid_network({}), TimeGrid(60, {kDay}), params, 1);
    for (double v : s.ground_truth_q)
        CHECK(v == 0.0);
    const auto p = test::build_pipeline(s);
    for (double v : p.observations.link_flows.values)
        CHECK(v == 0.0);
}

TEST_CASE("symmetric mode gives symmetric daily region flows")
{
    GridSpec spec;
    spec.region_cols = 3;
    ProfileParams params;
    params.symmetric = true;
    const auto s = generate_scenario(make_grid_network(spec), TimeGrid(60, {kDay, add_days(kDay, 1)}), params, 7);
    const VariableIndex idx(s.od_pairs, s.network.node_count(), s.grid.interval_count());
    const auto f = region_flows(idx, s.ground_truth_q, region_flow_index(s.network, s.od_pairs),
                                s.network.regions().size(), s.grid.intervals_per_day());
    // Each OD mirrors its reverse exactly; region totals differ only by summation order.
    for (std::size_t od = 0; od < s.od_pairs.size(); ++od) {
        std::size_t rev = 0;
        while (s.od_pairs[rev].origin != s.od_pairs[od].destination
               || s.od_pairs[rev].destination != s.od_pairs[od].origin)
            ++rev;
        for (std::size_t t = 0; t < s.grid.interval_count(); ++t)
            CHECK(s.ground_truth_q[idx.q_column(od, 0, t)] == s.ground_truth_q[idx.q_column(rev, 0, t)]);
    }
    for (std::size_t d = 0; d < f.days(); ++d)
        for (std::size_t i = 0; i < f.regions(); ++i)
            for (std::size_t j = 0; j < f.regions(); ++j)
                CHECK(f(d, i, j) == doctest::Approx(f(d, j, i)).epsilon(1e-13));
    params.symmetric = false;
    const auto a = generate_scenario(s.network, s.grid, params, 7);
    const auto g = region_flows(idx, a.ground_truth_q, region_flow_index(a.network, a.od_pairs),
                                a.network.regions().size(), a.grid.intervals_per_day());
    CHECK(g(0, 0, 1) != g(0, 1, 0));
}

TEST_CASE("morning peak sits at its configured centre")
{
    ProfileParams params;
    const TimeGrid grid(5, {kDay});
    std::size_t best = 0;
    for (std::size_t t = 0; t < grid.intervals_per_day() / 2; ++t)
        if (demand_curve(params, grid, t) > demand_curve(params, grid, best))
            best = t;
    CHECK(best == 420 / 5);
    CHECK(demand_curve(params, grid, 0) >= params.base_level);
}

TEST_CASE("scenario invariants")
{
    const auto s = test::small_scenario(4);
    const VariableIndex idx(s.od_pairs, s.network.node_count(), s.grid.interval_count());
    CHECK(s.ground_truth_q.size() == idx.q_count());
    for (double v : s.ground_truth_q)
        CHECK(v >= 0.0);
    CHECK(s.speeds.kmh.rows == s.network.link_count());
    CHECK(s.speeds.kmh.cols == s.grid.interval_count());
    CHECK(s.arterials.size() == s.network.node_count());
    const auto again = test::small_scenario(4);
    CHECK(again.ground_truth_q == s.ground_truth_q);
    CHECK(test::small_scenario(5).ground_truth_q != s.ground_truth_q);
    ProfileParams bad;
    bad.peak_speed_drop = 1.0;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("single link with zero travel time carries exactly its demand")
{
    const auto net = test::make_network({"A", "B"}, {{"A", "B", 0.001}, {"B", "A", 0.001}});
    ProfileParams params;
    params.base_speed_kmh = 150.0;
    params.peak_speed_drop = 0.0;
    auto s = generate_scenario(net, TimeGrid(60, {kDay}), params, 3);
    const VariableIndex idx(s.od_pairs, 2, s.grid.interval_count());
    std::fill(s.ground_truth_q.begin(), s.ground_truth_q.end(), 0.0);
    s.ground_truth_q[idx.q_column(0, 0, 4)] = 5.0;
    const auto p = test::build_pipeline(s);
    for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t t = 0; t < s.grid.interval_count(); ++t) {
            const double want = (a == s.od_pairs[0].paths[0].links[0] && t == 4) ? 5.0 : 0.0;
            CHECK(p.observations.link_flows(a, t) == doctest::Approx(want));
            CHECK(p.link_flows(a, t) == doctest::Approx(want));
        }
}

TEST_CASE("forward simulation is linear in demand")
{
    const auto s = test::small_scenario(6, false, 60);
    const auto p = test::build_pipeline(s);
    Scenario a = s, b = s, sum = s;
    Rng rng(2);
    for (std::size_t i = 0; i < s.ground_truth_q.size(); ++i) {
        a.ground_truth_q[i] = rng.uniform(0.0, 10.0);
        b.ground_truth_q[i] = rng.uniform(0.0, 10.0);
        sum.ground_truth_q[i] = a.ground_truth_q[i] + 3.0 * b.ground_truth_q[i];
    }
    const auto fa = forward_simulate(a, p.dar, p.route_choice).link_flows;
    const auto fb = forward_simulate(b, p.dar, p.route_choice).link_flows;
    const auto fs = forward_simulate(sum, p.dar, p.route_choice).link_flows;
    for (std::size_t k = 0; k < fs.values.size(); ++k)
        CHECK(fs.values[k] == doctest::Approx(fa.values[k] + 3.0 * fb.values[k]).epsilon(1e-12));
}

TEST_CASE("noiseless round trip reproduces the observations at the ground truth")
{
    for (std::uint64_t seed : {1, 2, 3}) {
        const auto s = test::small_scenario(seed, false, 30);
        const auto p = test::build_pipeline(s);
        const auto obj = objective_value(p.problem, test::padded(p.problem, s.ground_truth_q));
        CHECK(obj.eps_b <= 1e-9);
    }
}

TEST_CASE("lognormal noise preserves the mean and is seeded")
{
    const auto s = test::small_scenario(8, false, 30);
    const auto p = test::build_pipeline(s);
    NoiseOptions noise{0.2, 11};
    const auto a = forward_simulate(s, p.dar, p.route_choice, noise);
    const auto b = forward_simulate(s, p.dar, p.route_choice, noise);
    const auto clean = forward_simulate(s, p.dar, p.route_choice);
    REQUIRE(a.records.size() == clean.records.size());
    double ratio = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < a.records.size(); ++k) {
        CHECK(a.records[k].flow == b.records[k].flow);
        CHECK(*a.records[k].flow >= 0.0);
        CHECK(a.records[k].speed == clean.records[k].speed);
        if (*clean.records[k].flow > 0.0) {
            ratio += *a.records[k].flow / *clean.records[k].flow;
            ++n;
        }
    }
    REQUIRE(n > 500);
    // Standard error of the mean ratio is about 0.2 / sqrt(n).
    CHECK(ratio / static_cast<double>(n) == doctest::Approx(1.0).epsilon(5.0 * 0.2 / std::sqrt(double(n))));
}

TEST_CASE("arterial sensors record a fixed share of node demand")
{
    const auto s = test::small_scenario(9);
    const auto demand = node_demand(s.network, s.od_pairs, s.grid.interval_count(), s.ground_truth_q);
    ProfileParams defaults;
    for (std::size_t i = 0; i < s.network.node_count(); ++i)
        for (std::size_t t = 0; t < s.grid.interval_count(); ++t)
            CHECK(s.arterials[i].flow[t] == doctest::Approx(defaults.arterial_ratio * demand(i, t)));
}
