#include "dode/analysis.hpp"

#include "dode/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace dode {

RegionFlowMatrix region_flows(const VariableIndex& index, std::span<const double> x,
                              const RegionFlowIndex& region_index, std::size_t region_count,
                              std::size_t intervals_per_day)
{
    if (x.size() < index.q_count())
        throw DimensionMismatch("estimate is shorter than the q block");
    if (intervals_per_day == 0 || index.intervals() % intervals_per_day != 0)
        throw DimensionMismatch("intervals per day must divide the estimate's intervals");
    RegionFlowMatrix out(index.intervals() / intervals_per_day, region_count);
    for (const auto& [key, members] : region_index) {
        const auto [ri, rj] = key;
        if (ri >= region_count || rj >= region_count)
            throw DimensionMismatch("region index exceeds the region count");
        for (auto od : members) {
            for (std::size_t k = 0; k < index.path_count(od); ++k) {
                for (std::size_t t = 0; t < index.intervals(); ++t)
                    out(t / intervals_per_day, ri, rj) += x[index.q_column(od, k, t)];
            }
        }
    }
    return out;
}

IntervalScheme split_intervals(std::span<const Date> available, Date start, std::size_t count,
                               std::size_t span_days, bool truncate_last)
{
    if (count == 0 || span_days == 0)
        throw InvalidArgument("interval count and span must be positive");
    std::vector<Date> days(available.begin(), available.end());
    std::sort(days.begin(), days.end());
    auto has = [&](const Date& d) { return std::binary_search(days.begin(), days.end(), d); };
    const auto span = static_cast<int>(span_days);

    IntervalScheme scheme;
    for (std::size_t k = 0; k < count; ++k) {
        DateSpan s{add_days(start, static_cast<int>(k) * span), add_days(start, static_cast<int>(k + 1) * span - 1)};
        const bool last = k + 1 == count;
        if (last && truncate_last && !days.empty() && days.back() < s.last && days.back() >= s.first)
            s.last = days.back();
        for (auto d = s.first; d <= s.last; d = add_days(d, 1)) {
            if (!has(d))
                throw InsufficientDays("interval " + std::to_string(k + 1) + " needs " + format_date(d)
                                       + ", which is not available (" + std::to_string(count) + " x "
                                       + std::to_string(span_days) + " days requested from "
                                       + format_date(start) + ")");
        }
        scheme.intervals.push_back(s);
    }
    return scheme;
}

namespace {

/// Modified Lentz evaluation of the incomplete beta continued fraction.
double beta_continued_fraction(double a, double b, double x)
{
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny)
        d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 1000; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny)
            d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny)
            c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny)
            d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny)
            c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < eps)
            break;
    }
    return h;
}

} // namespace

double incomplete_beta(double a, double b, double x)
{
    if (!(a > 0.0 && b > 0.0))
        throw InvalidArgument("incomplete beta needs positive shape parameters");
    if (!(x >= 0.0 && x <= 1.0))
        throw InvalidArgument("incomplete beta argument must lie in [0, 1]");
    if (x == 0.0 || x == 1.0)
        return x;
    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x)
        + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided(double t, double dof)
{
    if (!(dof > 0.0))
        throw InvalidArgument("degrees of freedom must be positive");
    if (std::isinf(t))
        return 0.0;
    return incomplete_beta(dof / 2.0, 0.5, dof / (dof + t * t));
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size())
        throw InvalidArgument("paired samples must have equal lengths");
    if (a.size() < 2)
        throw InvalidArgument("paired t-test needs at least two pairs");
    const auto n = static_cast<double>(a.size());
    double mean = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        mean += a[i] - b[i];
    mean /= n;
    double ss = 0.0;
    bool all_zero = true;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        all_zero = all_zero && d == 0.0;
        ss += (d - mean) * (d - mean);
    }
    if (all_zero)
        return {0.0, 1.0};
    const double sd = std::sqrt(ss / (n - 1.0));
    if (!(sd > 0.0) || sd <= 1e-14 * std::abs(mean))
        throw DegenerateSample("differences have zero variance");
    const double t = mean / (sd / std::sqrt(n));
    return {t, student_t_two_sided(t, n - 1.0)};
}

double percentage_change(double reference, double comparison)
{
    if (!(reference > 0.0))
        throw ZeroBaseline("percentage change needs a positive reference flow");
    return (comparison - reference) / reference;
}

const char* to_string(ChangeClass c)
{
    switch (c) {
    case ChangeClass::SigIncrease: return "sig_increase";
    case ChangeClass::Increase: return "increase";
    case ChangeClass::Decrease: return "decrease";
    case ChangeClass::SigDecrease: return "sig_decrease";
    case ChangeClass::Excluded: return "excluded";
    }
    return "excluded";
}

std::vector<PairedFlows> pair_region_flows(const RegionFlowMatrix& a, std::span<const Date> days_a,
                                           const IntervalScheme& scheme_a, const RegionFlowMatrix& b,
                                           std::span<const Date> days_b, const IntervalScheme& scheme_b)
{
    if (a.days() != days_a.size() || b.days() != days_b.size())
        throw DimensionMismatch("day labels do not match the region-flow matrices");
    if (a.regions() != b.regions())
        throw DimensionMismatch("region-flow matrices cover different regions");
    if (scheme_a.intervals.size() != scheme_b.intervals.size())
        throw InvalidArgument("interval schemes have different lengths");

    auto members = [](std::span<const Date> days, const DateSpan& span) {
        std::vector<std::size_t> out;
        for (std::size_t d = 0; d < days.size(); ++d) {
            if (span.contains(days[d]))
                out.push_back(d);
        }
        return out;
    };
    std::vector<PairedFlows> out;
    const auto regions = a.regions();
    for (std::size_t k = 0; k < scheme_a.intervals.size(); ++k) {
        const auto da = members(days_a, scheme_a.intervals[k]);
        const auto db = members(days_b, scheme_b.intervals[k]);
        if (da.size() != db.size())
            throw InvalidArgument("interval " + std::to_string(k + 1) + " covers " + std::to_string(da.size())
                                  + " days in the reference set but " + std::to_string(db.size())
                                  + " in the comparison set");
        for (std::size_t i = 0; i < regions; ++i) {
            for (std::size_t j = 0; j < regions; ++j) {
                PairedFlows p{i, j, k, {}, {}};
                for (std::size_t m = 0; m < da.size(); ++m) {
                    p.reference.push_back(a(da[m], i, j));
                    p.comparison.push_back(b(db[m], i, j));
                }
                out.push_back(std::move(p));
            }
        }
    }
    return out;
}

Classification classify_changes(std::span<const PairedFlows> flows, const ChangeOptions& options)
{
    Classification result;
    std::map<std::size_t, ChangeSummary> summary;
    for (const auto& f : flows) {
        if (f.reference.size() != f.comparison.size() || f.reference.empty())
            throw InvalidArgument("paired flows need equal, nonempty samples");
        OdChangeRecord r;
        r.origin_region = f.origin_region;
        r.destination_region = f.destination_region;
        r.interval = f.interval;
        const auto n = static_cast<double>(f.reference.size());
        r.mean_reference = std::accumulate(f.reference.begin(), f.reference.end(), 0.0) / n;
        r.mean_comparison = std::accumulate(f.comparison.begin(), f.comparison.end(), 0.0) / n;

        auto& s = summary[f.interval];
        s.interval = f.interval;
        ++s.total;
        if (r.mean_reference < options.min_daily_flow || !(r.mean_reference > 0.0)) {
            ++s.excluded;
            result.records.push_back(r);
            continue;
        }
        r.change = percentage_change(r.mean_reference, r.mean_comparison);
        if (f.reference.size() >= 2) {
            try {
                const auto test = paired_t_test(f.comparison, f.reference);
                r.t_statistic = test.t_statistic;
                r.p_value = test.p_value;
            } catch (const DegenerateSample&) {
                r.t_statistic = std::copysign(std::numeric_limits<double>::infinity(),
                                              r.mean_comparison - r.mean_reference);
                r.p_value = 0.0;
            }
        }
        const bool significant = r.p_value <= options.p_threshold;
        if (r.mean_comparison > r.mean_reference) {
            r.classification = significant ? ChangeClass::SigIncrease : ChangeClass::Increase;
            ++s.increased;
            s.sig_increased += significant;
        } else {
            r.classification = significant ? ChangeClass::SigDecrease : ChangeClass::Decrease;
            ++s.decreased;
            s.sig_decreased += significant;
        }
        result.records.push_back(r);
    }
    for (const auto& [k, s] : summary)
        result.summary.push_back(s);
    return result;
}

std::map<std::string, double> district_income(std::span<const ZipcodeRow> rows, bool normalize)
{
    std::map<std::string, double> population;
    for (const auto& r : rows) {
        if (!(r.population > 0.0))
            throw InvalidArgument("zipcode " + r.zipcode + " has a non-positive population");
        if (!(r.overlap >= 0.0 && r.overlap <= 1.0))
            throw InvalidArgument("zipcode " + r.zipcode + " has an overlap fraction outside [0, 1]");
        if (!(r.income > 0.0))
            throw InvalidArgument("zipcode " + r.zipcode + " has a non-positive income");
        population[r.district] += r.population;
    }
    std::map<std::string, double> income, weight;
    for (const auto& r : rows) {
        const double w = r.population / population[r.district] * r.overlap;
        income[r.district] += w * r.income;
        weight[r.district] += w;
    }
    if (normalize) {
        for (auto& [district, value] : income) {
            if (weight[district] > 0.0)
                value /= weight[district];
        }
    }
    return income;
}

std::vector<IncomeExtrema> od_income_extrema(std::span<const OdChangeRecord> records,
                                             const TrafficNetwork& network,
                                             const std::map<std::string, double>& incomes)
{
    auto lookup = [&](std::size_t region) {
        if (region >= network.regions().size())
            throw MissingIncome("region index " + std::to_string(region) + " is not in the network");
        const auto& id = network.regions()[region].id;
        auto it = incomes.find(id);
        if (it == incomes.end())
            throw MissingIncome("no income for region '" + id + "'");
        return it->second;
    };
    std::vector<IncomeExtrema> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        const double a = lookup(r.origin_region);
        const double b = lookup(r.destination_region);
        out.push_back({std::min(a, b), std::max(a, b)});
    }
    return out;
}

namespace {

std::vector<double> normalized_weights(std::span<const double> values, std::span<const double> weights)
{
    if (weights.empty())
        return std::vector<double>(values.size(), 1.0 / static_cast<double>(values.size()));
    if (weights.size() != values.size())
        throw InvalidArgument("KDE weights must match the values");
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w))
            throw InvalidArgument("KDE weights must be nonnegative");
        total += w;
    }
    if (!(total > 0.0))
        throw InvalidArgument("KDE weights sum to zero");
    std::vector<double> out(weights.begin(), weights.end());
    for (auto& w : out)
        w /= total;
    return out;
}

/// Quantile of the weighted sample; for equal weights this is linear interpolation between order statistics.
double weighted_quantile(std::vector<std::pair<double, double>> sorted, double p)
{
    const auto n = sorted.size();
    if (n == 1)
        return sorted[0].first;
    // position of each point on [0, 1]: cumulative weight before it, scaled so the ends map to 0 and 1
    std::vector<double> pos(n);
    double cum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        pos[i] = cum + 0.5 * sorted[i].second;
        cum += sorted[i].second;
    }
    const double lo = pos.front(), hi = pos.back();
    for (auto& v : pos)
        v = hi > lo ? (v - lo) / (hi - lo) : 0.0;
    if (p <= 0.0)
        return sorted.front().first;
    if (p >= 1.0)
        return sorted.back().first;
    auto it = std::upper_bound(pos.begin(), pos.end(), p);
    const auto j = static_cast<std::size_t>(it - pos.begin());
    const double span = pos[j] - pos[j - 1];
    const double f = span > 0.0 ? (p - pos[j - 1]) / span : 0.0;
    return sorted[j - 1].first + f * (sorted[j].first - sorted[j - 1].first);
}

double normal_cdf(double z)
{
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

} // namespace

double silverman_bandwidth(std::span<const double> values, std::span<const double> weights)
{
    if (values.empty())
        throw InvalidArgument("KDE needs at least one value");
    if (values.size() < 2)
        return 1.0;
    const auto w = normalized_weights(values, weights);
    double mean = 0.0, sum_sq_w = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        mean += w[i] * values[i];
        sum_sq_w += w[i] * w[i];
    }
    double var = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
        var += w[i] * (values[i] - mean) * (values[i] - mean);
    if (sum_sq_w < 1.0)
        var /= 1.0 - sum_sq_w;
    const double sigma = std::sqrt(var);

    std::vector<std::pair<double, double>> sorted;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (w[i] > 0.0)
            sorted.emplace_back(values[i], w[i]);
    }
    std::sort(sorted.begin(), sorted.end());
    const double iqr = weighted_quantile(sorted, 0.75) - weighted_quantile(sorted, 0.25);
    const double n_eff = 1.0 / sum_sq_w;

    double spread = std::min(sigma, iqr / 1.34);
    if (!(spread > 0.0))
        spread = sigma;
    if (!(spread > 0.0))
        return 1.0;
    return 0.9 * spread * std::pow(n_eff, -0.2);
}

double kde_density_at(std::span<const double> values, std::span<const double> weights, double h, double x)
{
    if (!(h > 0.0))
        throw InvalidArgument("bandwidth must be positive");
    const auto w = normalized_weights(values, weights);
    const double norm = 1.0 / (h * std::sqrt(2.0 * std::numbers::pi));
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double z = (x - values[i]) / h;
        s += w[i] * std::exp(-0.5 * z * z);
    }
    return s * norm;
}

KdeResult kde(std::span<const double> values, std::span<const double> weights, const KdeOptions& options)
{
    if (values.empty())
        throw InvalidArgument("KDE needs at least one value");
    for (double v : values) {
        if (!std::isfinite(v))
            throw InvalidArgument("KDE values must be finite");
    }
    const auto w = normalized_weights(values, weights);
    KdeResult r;
    r.bandwidth = options.bandwidth > 0.0 ? options.bandwidth : silverman_bandwidth(values, weights);
    const double h = r.bandwidth;
    const auto [min_it, max_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *min_it - 5.0 * h, hi = *max_it + 5.0 * h;
    constexpr std::size_t max_points = 1'000'001;
    const auto needed = static_cast<std::size_t>(std::ceil((hi - lo) / (h / 4.0))) + 1;
    const auto points = std::min(max_points, std::max(options.min_grid_points, needed));
    const double step = (hi - lo) / static_cast<double>(points - 1);

    r.x.resize(points);
    r.density.resize(points);
    const double norm = 1.0 / (h * std::sqrt(2.0 * std::numbers::pi));
    for (std::size_t g = 0; g < points; ++g) {
        const double x = g + 1 == points ? hi : lo + step * static_cast<double>(g);
        double s = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double z = (x - values[i]) / h;
            s += w[i] * std::exp(-0.5 * z * z);
        }
        r.x[g] = x;
        r.density[g] = s * norm;
    }
    if (options.threshold) {
        double below = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i)
            below += w[i] * normal_cdf((*options.threshold - values[i]) / h);
        r.area_below = below;
        r.area_above = 1.0 - below;
    }
    return r;
}

} // namespace dode
