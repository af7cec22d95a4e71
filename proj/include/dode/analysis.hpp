#pragma once

#include "dode/network.hpp"
#include "dode/problem.hpp"
#include "dode/time_grid.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dode {

/// Daily region-to-region totals f(day, R_i, R_j).
class RegionFlowMatrix {
public:
    RegionFlowMatrix() = default;
    RegionFlowMatrix(std::size_t days, std::size_t regions)
        : days_(days), regions_(regions), values_(days * regions * regions, 0.0)
    {
    }

    std::size_t days() const noexcept { return days_; }
    std::size_t regions() const noexcept { return regions_; }
    double& operator()(std::size_t d, std::size_t i, std::size_t j) { return values_[(d * regions_ + i) * regions_ + j]; }
    double operator()(std::size_t d, std::size_t i, std::size_t j) const
    {
        return values_[(d * regions_ + i) * regions_ + j];
    }
    bool operator==(const RegionFlowMatrix&) const = default;

private:
    std::size_t days_ = 0;
    std::size_t regions_ = 0;
    std::vector<double> values_;
};

/// Sums q over member OD pairs, paths and the intervals of each day.
/// `x` may be a q vector or a full [q; slack] vector.
RegionFlowMatrix region_flows(const VariableIndex& index, std::span<const double> x,
                              const RegionFlowIndex& region_index, std::size_t region_count,
                              std::size_t intervals_per_day);

struct DateSpan {
    Date first; ///< inclusive
    Date last;  ///< inclusive

    std::size_t length() const { return static_cast<std::size_t>(days_between(first, last) + 1); }
    bool contains(const Date& d) const { return d >= first && d <= last; }
    bool operator==(const DateSpan&) const = default;
};

struct IntervalScheme {
    std::vector<DateSpan> intervals;
};

/// `count` consecutive spans of `span_days` calendar days from `start`, all of whose dates must be
/// in `available`. With `truncate_last` the final span is clipped at the last available date.
/// Throws InsufficientDays.
IntervalScheme split_intervals(std::span<const Date> available, Date start, std::size_t count,
                               std::size_t span_days, bool truncate_last = false);

/// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

/// Two-sided P(|T| >= |t|) for Student's t with `dof` degrees of freedom.
double student_t_two_sided(double t, double dof);

struct TTestResult {
    double t_statistic = 0.0;
    double p_value = 1.0;
};

/// Paired two-sided test on a - b. All-zero differences give (0, 1); constant nonzero
/// differences throw DegenerateSample.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

/// (b - a) / a. Throws ZeroBaseline when a <= 0.
double percentage_change(double reference, double comparison);

enum class ChangeClass { SigIncrease, Increase, Decrease, SigDecrease, Excluded };

const char* to_string(ChangeClass c);

/// Daily values of one region pair within one interval of the scheme, paired by position.
struct PairedFlows {
    std::size_t origin_region = 0;
    std::size_t destination_region = 0;
    std::size_t interval = 0;
    std::vector<double> reference;  ///< year A
    std::vector<double> comparison; ///< year B
};

/// Aligns two region-flow matrices on their interval schemes. `days_a`/`days_b` label the
/// matrix days. Every region pair (including intra-region) yields one record per interval.
std::vector<PairedFlows> pair_region_flows(const RegionFlowMatrix& a, std::span<const Date> days_a,
                                           const IntervalScheme& scheme_a, const RegionFlowMatrix& b,
                                           std::span<const Date> days_b, const IntervalScheme& scheme_b);

struct OdChangeRecord {
    std::size_t origin_region = 0;
    std::size_t destination_region = 0;
    std::size_t interval = 0;
    double mean_reference = 0.0;
    double mean_comparison = 0.0;
    double change = 0.0; ///< percentage_change of the means; 0 when excluded
    double t_statistic = 0.0;
    double p_value = 1.0;
    ChangeClass classification = ChangeClass::Excluded;
};

struct ChangeSummary {
    std::size_t interval = 0;
    std::size_t increased = 0; ///< includes significant increases
    std::size_t sig_increased = 0;
    std::size_t decreased = 0; ///< includes significant decreases
    std::size_t sig_decreased = 0;
    std::size_t excluded = 0;
    std::size_t total = 0;
};

struct ChangeOptions {
    double min_daily_flow = 1000.0; ///< applied to the reference-year interval mean
    double p_threshold = 0.05;
};

struct Classification {
    std::vector<OdChangeRecord> records;
    std::vector<ChangeSummary> summary; ///< one row per interval present in the input, ascending
};

/// A zero change is a non-significant decrease; constant nonzero differences count as p = 0.
Classification classify_changes(std::span<const PairedFlows> flows, const ChangeOptions& options = {});

struct ZipcodeRow {
    std::string zipcode;
    double income = 0.0;
    double population = 0.0;
    std::string district;
    double overlap = 0.0; ///< area(h n z) / area(z)
};

/// Population-share times overlap weighted income per district. With `normalize` the weights
/// of each district are rescaled to sum to one. Throws InvalidArgument on invalid rows.
std::map<std::string, double> district_income(std::span<const ZipcodeRow> rows, bool normalize = false);

struct IncomeExtrema {
    double min_income = 0.0;
    double max_income = 0.0;
};

/// Per record, min and max of the two endpoint district incomes. Region ids key `incomes`.
/// Throws MissingIncome.
std::vector<IncomeExtrema> od_income_extrema(std::span<const OdChangeRecord> records,
                                             const TrafficNetwork& network,
                                             const std::map<std::string, double>& incomes);

struct KdeOptions {
    double bandwidth = 0.0;           ///< 0 = Silverman's rule
    std::size_t min_grid_points = 512;
    std::optional<double> threshold;  ///< report mass below / above this value
};

struct KdeResult {
    double bandwidth = 0.0;
    std::vector<double> x;
    std::vector<double> density;
    double area_below = 0.0; ///< exact Gaussian mass below the threshold
    double area_above = 0.0;
};

/// 0.9 min(sigma, IQR / 1.34) n^(-1/5), falling back to sigma and then 1 when the spread is zero.
double silverman_bandwidth(std::span<const double> values, std::span<const double> weights = {});

/// Gaussian KDE on a grid spanning [min - 5h, max + 5h] with spacing at most h / 4.
/// Empty `weights` means equal weights.
KdeResult kde(std::span<const double> values, std::span<const double> weights = {}, const KdeOptions& options = {});

/// Density at one point under the same kernel and weights.
double kde_density_at(std::span<const double> values, std::span<const double> weights, double bandwidth,
                      double x);

} // namespace dode
