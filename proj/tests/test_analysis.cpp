#include "support.hpp"

#include "dode/analysis.hpp"
#include "dode/error.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <doctest.h>

#include <numeric>

using namespace dode;

namespace {

Date ymd(int y, unsigned m, unsigned d)
{
    return Date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
}

std::vector<Date> whole_year(int y)
{
    std::vector<Date> out;
    for (Date d = ymd(y, 1, 1); d.year() == std::chrono::year{y}; d = add_days(d, 1))
        out.push_back(d);
    return out;
}

/// t = mean(d) / (sd(d) / sqrt(n)) with the n - 1 variance, p from Boost's Student t.
TTestResult textbook_t_test(const std::vector<double>& a, const std::vector<double>& b)
{
    const auto n = static_cast<double>(a.size());
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        d[i] = a[i] - b[i];
    const double mean = std::accumulate(d.begin(), d.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : d)
        ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    const double t = mean / (sd / std::sqrt(n));
    const boost::math::students_t dist(n - 1.0);
    return {t, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)))};
}

PairedFlows paired(std::size_t i, std::size_t j, std::size_t interval, std::vector<double> a, std::vector<double> b)
{
    return {i, j, interval, std::move(a), std::move(b)};
}

} // namespace

TEST_CASE("region flow aggregation")
{
    const auto net = test::make_network({"A", "B"}, {{"A", "B", 1.0}, {"B", "A", 1.0}}, {"R1", "R2"});
    const auto pairs = enumerate_od_pairs(net);
    const auto index = region_flow_index(net, pairs);
    const VariableIndex idx(pairs, 2, 288);

    std::vector<double> q(idx.size(), 0.0);
    for (std::size_t t = 0; t < 288; ++t)
        q[idx.q_column(0, 0, t)] = 1.0;
    auto f = region_flows(idx, q, index, 2, 288);
    CHECK(f(0, 0, 1) == 288.0);
    CHECK(f(0, 1, 0) == 0.0);

    std::fill(q.begin(), q.end(), 0.0);
    f = region_flows(idx, q, index, 2, 288);
    CHECK(f == RegionFlowMatrix(1, 2));
}

TEST_CASE("region flows match a brute-force triple sum")
{
    const auto s = test::small_scenario(3, false, 240);
    const auto& net = s.network;
    const VariableIndex idx(s.od_pairs, net.node_count(), s.grid.interval_count());
    const auto ipd = s.grid.intervals_per_day();
    const auto f = region_flows(idx, s.ground_truth_q, region_flow_index(net, s.od_pairs), net.regions().size(), ipd);
    for (std::size_t d = 0; d < s.grid.day_count(); ++d)
        for (std::size_t i = 0; i < net.regions().size(); ++i)
            for (std::size_t j = 0; j < net.regions().size(); ++j) {
                double sum = 0.0;
                for (std::size_t od = 0; od < s.od_pairs.size(); ++od) {
                    if (net.region_of(s.od_pairs[od].origin) != i || net.region_of(s.od_pairs[od].destination) != j)
                        continue;
                    for (std::size_t t = d * ipd; t < (d + 1) * ipd; ++t)
                        sum += s.ground_truth_q[idx.q_column(od, 0, t)];
                }
                CHECK(f(d, i, j) == doctest::Approx(sum).epsilon(1e-13));
            }
}

TEST_CASE("date interval schemes")
{
    const auto y2020 = whole_year(2020);
    const auto y2019 = whole_year(2019);

    const auto scheme = split_intervals(y2020, ymd(2020, 1, 12), 8, 46, true);
    REQUIRE(scheme.intervals.size() == 8);
    CHECK(scheme.intervals[0] == DateSpan{ymd(2020, 1, 12), ymd(2020, 2, 26)});
    CHECK(scheme.intervals[1].first == ymd(2020, 2, 27));
    CHECK(scheme.intervals.back().last == ymd(2020, 12, 31));
    for (std::size_t k = 1; k < scheme.intervals.size(); ++k)
        CHECK(scheme.intervals[k].first == add_days(scheme.intervals[k - 1].last, 1));
    CHECK_THROWS_AS(split_intervals(y2020, ymd(2020, 1, 12), 8, 46, false), InsufficientDays);

    const auto one = split_intervals(y2019, ymd(2019, 5, 1), 1, 1);
    REQUIRE(one.intervals.size() == 1);
    CHECK(one.intervals[0].length() == 1);

    CHECK_THROWS_AS(split_intervals(y2019, ymd(2019, 1, 1), 1, 366), InsufficientDays);
    std::vector<Date> gap = y2019;
    gap.erase(gap.begin() + 40);
    CHECK_THROWS_AS(split_intervals(gap, ymd(2019, 1, 1), 2, 30), InsufficientDays);
}

TEST_CASE("incomplete beta matches Boost")
{
    Rng rng(4);
    for (int k = 0; k < 200; ++k) {
        const double a = rng.uniform(0.1, 30.0), b = rng.uniform(0.1, 30.0), x = rng.uniform(0.0, 1.0);
        CHECK(incomplete_beta(a, b, x) == doctest::Approx(boost::math::ibeta(a, b, x)).epsilon(1e-12).scale(1e-300));
    }
    CHECK(incomplete_beta(2.0, 3.0, 0.0) == 0.0);
    CHECK(incomplete_beta(2.0, 3.0, 1.0) == 1.0);
}

TEST_CASE("paired t-test")
{
    SUBCASE("identical samples")
    {
        const std::vector<double> a{1, 2, 3};
        const auto r = paired_t_test(a, a);
        CHECK(r.t_statistic == 0.0);
        CHECK(r.p_value == 1.0);
    }
    SUBCASE("constant nonzero difference")
    {
        const std::vector<double> b{1, 5, 2, 8, 3};
        std::vector<double> a = b;
        for (auto& v : a)
            v += 1.0;
        CHECK_THROWS_AS(paired_t_test(a, b), DegenerateSample);
    }
    SUBCASE("reference example")
    {
        const std::vector<double> a{1, 2, 3, 4}, b{2, 4, 6, 8};
        const auto r = paired_t_test(a, b);
        const auto ref = textbook_t_test(a, b);
        CHECK(std::abs(r.t_statistic - ref.t_statistic) <= 1e-10);
        CHECK(std::abs(r.p_value - ref.p_value) <= 1e-10);
        CHECK(r.t_statistic == doctest::Approx(-2.5 / (std::sqrt(5.0 / 3.0) / 2.0)));
    }
    SUBCASE("random samples")
    {
        Rng rng(99);
        for (int k = 0; k < 20; ++k) {
            const std::size_t n = 2 + rng.index(40);
            std::vector<double> a(n), b(n);
            for (std::size_t i = 0; i < n; ++i) {
                a[i] = rng.uniform(0.0, 100.0);
                b[i] = a[i] + rng.normal() * 5.0 + rng.uniform(-3.0, 3.0);
            }
            const auto r = paired_t_test(a, b);
            const auto ref = textbook_t_test(a, b);
            CHECK(std::abs(r.t_statistic - ref.t_statistic) <= 1e-10 * std::max(1.0, std::abs(ref.t_statistic)));
            CHECK(std::abs(r.p_value - ref.p_value) <= 1e-10);
        }
    }
    SUBCASE("invalid sizes")
    {
        CHECK_THROWS_AS(paired_t_test(std::vector<double>{1}, std::vector<double>{2}), InvalidArgument);
        CHECK_THROWS_AS(paired_t_test(std::vector<double>{1, 2}, std::vector<double>{2}), InvalidArgument);
    }
}

TEST_CASE("percentage change")
{
    CHECK(percentage_change(100.0, 80.0) == -0.20);
    CHECK(percentage_change(50.0, 50.0) == 0.0);
    CHECK(percentage_change(50.0, 75.0) == 0.50);
    CHECK_THROWS_AS(percentage_change(0.0, 5.0), ZeroBaseline);
}

TEST_CASE("change classification")
{
    ChangeOptions opts;
    opts.min_daily_flow = 100.0;

    SUBCASE("everything below the threshold is excluded")
    {
        const std::vector<PairedFlows> flows{paired(0, 1, 0, {1, 2, 3}, {4, 5, 6}), paired(1, 0, 0, {0, 0, 0}, {1, 1, 1})};
        const auto c = classify_changes(flows, opts);
        REQUIRE(c.summary.size() == 1);
        CHECK(c.summary[0].excluded == 2);
        CHECK(c.summary[0].increased == 0);
        CHECK(c.summary[0].decreased == 0);
        CHECK(c.summary[0].total == 2);
        for (const auto& r : c.records)
            CHECK(r.classification == ChangeClass::Excluded);
    }
    SUBCASE("a doubled pair is a significant increase")
    {
        const std::vector<double> a{200, 210, 190, 205, 198, 202};
        std::vector<double> b;
        for (double v : a)
            b.push_back(2.0 * v + (v > 200 ? 1.0 : -1.0));
        const std::vector<PairedFlows> flows{paired(0, 1, 0, a, b)};
        REQUIRE(paired_t_test(a, b).p_value < 0.05);
        const auto c = classify_changes(flows, opts);
        CHECK(c.records[0].classification == ChangeClass::SigIncrease);
        CHECK(c.summary[0].sig_increased == 1);
        CHECK(c.summary[0].increased == 1);
    }
    SUBCASE("halved flows are all decreases and identical flows are not significant")
    {
        Rng rng(5);
        std::vector<PairedFlows> half, same;
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j) {
                std::vector<double> a(10), b(10);
                for (std::size_t k = 0; k < 10; ++k) {
                    a[k] = rng.uniform(500.0, 900.0);
                    b[k] = 0.5 * a[k];
                }
                half.push_back(paired(i, j, 1, a, b));
                same.push_back(paired(i, j, 1, a, a));
            }
        const auto c = classify_changes(half, opts);
        CHECK(c.summary[0].decreased == 9);
        CHECK(c.summary[0].increased == 0);
        for (const auto& r : c.records)
            CHECK(r.change == doctest::Approx(-0.5));
        const auto z = classify_changes(same, opts);
        CHECK(z.summary[0].sig_decreased == 0);
        CHECK(z.summary[0].sig_increased == 0);
    }
    SUBCASE("counts partition the records and ignore input order")
    {
        Rng rng(6);
        std::vector<PairedFlows> flows;
        for (std::size_t k = 0; k < 60; ++k) {
            std::vector<double> a(8), b(8);
            const double level = rng.uniform(0.0, 400.0), scale = rng.uniform(0.5, 1.5);
            for (std::size_t d = 0; d < 8; ++d) {
                a[d] = level + rng.uniform(-20.0, 20.0);
                b[d] = scale * level + rng.uniform(-20.0, 20.0);
            }
            flows.push_back(paired(k % 5, k / 5 % 5, k % 3, a, b));
        }
        const auto c = classify_changes(flows, opts);
        std::size_t total = 0;
        for (const auto& s : c.summary) {
            CHECK(s.increased + s.decreased + s.excluded == s.total);
            CHECK(s.sig_increased <= s.increased);
            CHECK(s.sig_decreased <= s.decreased);
            total += s.total;
        }
        CHECK(total == flows.size());
        for (const auto& r : c.records) {
            if (r.classification == ChangeClass::SigIncrease || r.classification == ChangeClass::Increase)
                CHECK(r.change > 0.0);
            if (r.classification == ChangeClass::SigIncrease || r.classification == ChangeClass::SigDecrease)
                CHECK(r.p_value <= 0.05);
        }
        std::vector<PairedFlows> reversed(flows.rbegin(), flows.rend());
        const auto d = classify_changes(reversed, opts);
        REQUIRE(d.summary.size() == c.summary.size());
        for (std::size_t k = 0; k < c.summary.size(); ++k) {
            CHECK(d.summary[k].increased == c.summary[k].increased);
            CHECK(d.summary[k].sig_decreased == c.summary[k].sig_decreased);
            CHECK(d.summary[k].excluded == c.summary[k].excluded);
        }
    }
}

TEST_CASE("pairing region flows by interval position")
{
    const std::vector<Date> days_a{ymd(2019, 1, 1), ymd(2019, 1, 2), ymd(2019, 1, 3), ymd(2019, 1, 4)};
    const std::vector<Date> days_b{ymd(2020, 1, 1), ymd(2020, 1, 2), ymd(2020, 1, 3), ymd(2020, 1, 4)};
    RegionFlowMatrix a(4, 2), b(4, 2);
    for (std::size_t d = 0; d < 4; ++d) {
        a(d, 0, 1) = 10.0 * static_cast<double>(d + 1);
        b(d, 0, 1) = 5.0 * static_cast<double>(d + 1);
    }
    const auto sa = split_intervals(days_a, days_a[0], 2, 2);
    const auto sb = split_intervals(days_b, days_b[0], 2, 2);
    const auto pairs = pair_region_flows(a, days_a, sa, b, days_b, sb);
    CHECK(pairs.size() == 2 * 4);
    for (const auto& p : pairs) {
        if (p.origin_region == 0 && p.destination_region == 1 && p.interval == 1) {
            CHECK(p.reference == std::vector<double>{30, 40});
            CHECK(p.comparison == std::vector<double>{15, 20});
        }
    }
}

TEST_CASE("district income")
{
    const std::vector<ZipcodeRow> one{{"90001", 75000, 1000, "H", 1.0}};
    CHECK(district_income(one).at("H") == 75000.0);

    const std::vector<ZipcodeRow> two{{"a", 60000, 500, "H", 1.0}, {"b", 100000, 500, "H", 1.0}};
    CHECK(district_income(two).at("H") == 80000.0);

    std::vector<ZipcodeRow> outside{{"a", 60000, 500, "H", 1.0}, {"b", 100000, 500, "H", 0.0}};
    const double base = district_income(outside).at("H");
    outside[1].income = 250000;
    CHECK(district_income(outside).at("H") == base);
    CHECK(district_income(outside, true).at("H") == 60000.0);

    CHECK_THROWS_AS(district_income(std::vector<ZipcodeRow>{{"x", 1, 1, "H", 1.5}}), InvalidArgument);
}

TEST_CASE("district income scales with zipcode income")
{
    Rng rng(41);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<ZipcodeRow> rows;
        for (std::size_t k = 0; k < 2 + rng.index(10); ++k)
            rows.push_back({"z" + std::to_string(k), rng.uniform(2e4, 2e5), rng.uniform(10.0, 5000.0),
                            "H" + std::to_string(rng.index(3)), rng.uniform()});
        const double c = rng.uniform(0.1, 10.0);
        auto scaled = rows;
        for (auto& r : scaled)
            r.income *= c;
        for (bool normalize : {false, true}) {
            const auto a = district_income(rows, normalize), b = district_income(scaled, normalize);
            REQUIRE(a.size() == b.size());
            for (const auto& [district, income] : a)
                CHECK(b.at(district) == doctest::Approx(c * income).epsilon(1e-12));
        }
    }
}

TEST_CASE("income extrema per OD pair")
{
    const auto net = test::make_network({"A", "B"}, {{"A", "B", 1.0}, {"B", "A", 1.0}}, {"R1", "R2"});
    OdChangeRecord ab;
    ab.origin_region = 0;
    ab.destination_region = 1;
    OdChangeRecord aa = ab;
    aa.destination_region = 0;
    const std::vector<OdChangeRecord> recs{ab, aa};
    const auto e = od_income_extrema(recs, net, {{"R1", 50000.0}, {"R2", 90000.0}});
    CHECK(e[0].min_income == 50000.0);
    CHECK(e[0].max_income == 90000.0);
    CHECK(e[1].min_income == 50000.0);
    CHECK(e[1].max_income == 50000.0);
    const auto same = od_income_extrema(recs, net, {{"R1", 70000.0}, {"R2", 70000.0}});
    CHECK(same[0].min_income == same[0].max_income);
    CHECK_THROWS_AS(od_income_extrema(recs, net, {{"R1", 1.0}}), MissingIncome);
}

TEST_CASE("kernel density estimate")
{
    SUBCASE("single value is symmetric with its peak at the value")
    {
        const std::vector<double> v{3.0};
        KdeOptions o;
        o.bandwidth = 0.5;
        const auto r = kde(v, {}, o);
        const auto peak = std::max_element(r.density.begin(), r.density.end()) - r.density.begin();
        CHECK(r.x[static_cast<std::size_t>(peak)] == doctest::Approx(3.0).epsilon(0.5 / 4.0));
        for (double d : {0.1, 0.4, 1.3})
            CHECK(kde_density_at(v, {}, 0.5, 3.0 + d) == doctest::Approx(kde_density_at(v, {}, 0.5, 3.0 - d)));
    }
    SUBCASE("threshold below all mass")
    {
        KdeOptions o;
        o.threshold = -100.0;
        const auto r = kde(std::vector<double>{1.0, 2.0, 4.0}, {}, o);
        CHECK(r.area_below == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));
        CHECK(r.area_above == doctest::Approx(1.0));
    }
    SUBCASE("two-point sample matches the closed-form kernel sum")
    {
        const std::vector<double> v{0.0, 10.0};
        const double expect = 0.5 * 2.0 * std::exp(-12.5) / std::sqrt(2.0 * 3.14159265358979323846);
        CHECK(std::abs(kde_density_at(v, {}, 1.0, 5.0) - expect) <= 1e-9);
    }
    SUBCASE("density is nonnegative and integrates to one")
    {
        Rng rng(12);
        for (int trial = 0; trial < 10; ++trial) {
            std::vector<double> v(5 + rng.index(100)), w(v.size());
            for (std::size_t i = 0; i < v.size(); ++i) {
                v[i] = rng.normal() * rng.uniform(0.1, 3.0) + (rng.uniform() < 0.3 ? 5.0 : 0.0);
                w[i] = rng.uniform(0.1, 2.0);
            }
            KdeOptions o;
            o.threshold = 0.0;
            const auto r = kde(v, trial % 2 ? std::span<const double>(w) : std::span<const double>(), o);
            double area = 0.0;
            for (std::size_t i = 0; i + 1 < r.x.size(); ++i)
                area += 0.5 * (r.density[i] + r.density[i + 1]) * (r.x[i + 1] - r.x[i]);
            CHECK(std::abs(area - 1.0) <= 1e-3);
            for (double d : r.density)
                CHECK(d >= 0.0);
            CHECK(r.area_below + r.area_above == doctest::Approx(1.0));
            CHECK(r.x.size() >= o.min_grid_points);
        }
    }
    SUBCASE("silverman bandwidth")
    {
        const std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
        double mean = 5.5, ss = 0.0;
        for (double x : v)
            ss += (x - mean) * (x - mean);
        const double sigma = std::sqrt(ss / 9.0);
        // Type-7 quartiles of 1..10 are 3.25 and 7.75.
        const double iqr = 7.75 - 3.25;
        CHECK(silverman_bandwidth(v) == doctest::Approx(0.9 * std::min(sigma, iqr / 1.34) * std::pow(10.0, -0.2)));
        CHECK(silverman_bandwidth(std::vector<double>{2, 2, 2}) == 1.0);
    }
}
