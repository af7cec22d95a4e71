#include "dode/problem.hpp"

#include "dode/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dode {

VariableIndex::VariableIndex(std::vector<std::size_t> paths_per_od, std::size_t node_count, std::size_t intervals)
    : paths_per_od_(std::move(paths_per_od)), node_count_(node_count), intervals_(intervals)
{
    od_offset_.reserve(paths_per_od_.size());
    for (auto k : paths_per_od_) {
        if (k == 0)
            throw InvalidArgument("every OD pair needs at least one path");
        od_offset_.push_back(q_count_);
        q_count_ += k * intervals_;
    }
}

VariableIndex::VariableIndex(std::span<const OdPair> od_pairs, std::size_t node_count, std::size_t intervals)
    : VariableIndex(
        [&] {
            std::vector<std::size_t> counts;
            counts.reserve(od_pairs.size());
            for (const auto& od : od_pairs)
                counts.push_back(od.paths.size());
            return counts;
        }(),
        node_count, intervals)
{
}

VariableIndex::QKey VariableIndex::q_key(std::size_t column) const
{
    if (column >= q_count_)
        throw InvalidArgument("column is not a q variable");
    auto it = std::upper_bound(od_offset_.begin(), od_offset_.end(), column);
    const auto od = static_cast<std::size_t>(it - od_offset_.begin()) - 1;
    const auto local = column - od_offset_[od];
    return {od, local / intervals_, local % intervals_};
}

SparseBlock::SparseBlock(std::string name, std::size_t rows, std::size_t cols, std::vector<Triplet> entries,
                         std::vector<double> target, double weight)
    : name_(std::move(name)), rows_(rows), cols_(cols), target_(std::move(target))
{
    if (target_.size() != rows_)
        throw DimensionMismatch("block '" + name_ + "' target has " + std::to_string(target_.size())
                                + " entries for " + std::to_string(rows_) + " rows");
    set_weight(weight);
    for (const auto& e : entries) {
        if (e.row >= rows_ || e.col >= cols_)
            throw DimensionMismatch("block '" + name_ + "' entry out of range");
    }
    std::stable_sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    row_start_.assign(rows_ + 1, 0);
    for (std::size_t i = 0; i < entries.size();) {
        std::size_t j = i;
        double sum = 0.0;
        while (j < entries.size() && entries[j].row == entries[i].row && entries[j].col == entries[i].col)
            sum += entries[j++].value;
        col_index_.push_back(entries[i].col);
        values_.push_back(sum);
        ++row_start_[entries[i].row + 1];
        i = j;
    }
    std::partial_sum(row_start_.begin(), row_start_.end(), row_start_.begin());
}

void SparseBlock::set_weight(double w)
{
    if (!(w >= 0.0) || !std::isfinite(w))
        throw InvalidArgument("block weight must be a nonnegative finite number");
    weight_ = w;
}

double SparseBlock::row_dot(std::size_t r, std::span<const double> x) const
{
    double s = 0.0;
    for (auto k = row_start_[r]; k < row_start_[r + 1]; ++k)
        s += values_[k] * x[col_index_[k]];
    return s;
}

void SparseBlock::residual(std::span<const double> x, std::span<double> out) const
{
    for (std::size_t r = 0; r < rows_; ++r)
        out[r] = row_dot(r, x) - target_[r];
}

void SparseBlock::add_transpose_product(std::span<const double> r, double scale, std::span<double> out) const
{
    for (std::size_t i = 0; i < rows_; ++i) {
        const double s = scale * r[i];
        if (s == 0.0)
            continue;
        for (auto k = row_start_[i]; k < row_start_[i + 1]; ++k)
            out[col_index_[k]] += s * values_[k];
    }
}

double SparseBlock::residual_norm(std::span<const double> x) const
{
    double ss = 0.0;
    for (std::size_t r = 0; r < rows_; ++r) {
        const double e = row_dot(r, x) - target_[r];
        ss += e * e;
    }
    return std::sqrt(ss);
}

std::vector<Triplet> SparseBlock::triplets() const
{
    std::vector<Triplet> out;
    out.reserve(values_.size());
    for (std::size_t r = 0; r < rows_; ++r) {
        for (auto k = row_start_[r]; k < row_start_[r + 1]; ++k)
            out.push_back({r, col_index_[k], values_[k]});
    }
    return out;
}

void DodeProblem::set_weights(const Weights& w)
{
    lower_bound.set_weight(w.eta);
    symmetry.set_weight(w.beta);
    total_flow.set_weight(w.gamma);
}

void DodeProblem::validate() const
{
    for (const auto* b : blocks()) {
        if (b->cols() != index.size())
            throw DimensionMismatch("block '" + b->name() + "' has " + std::to_string(b->cols())
                                    + " columns, expected " + std::to_string(index.size()));
    }
    for (const auto* b : {&base, &symmetry, &total_flow}) {
        for (const auto& t : b->triplets()) {
            if (index.is_slack(t.col) && t.value != 0.0)
                throw DimensionMismatch("block '" + b->name() + "' has a slack coefficient");
        }
    }
}

SparseBlock assemble_base(const VariableIndex& index, std::span<const OdPair> od_pairs, const DarTensor& dar,
                          const RouteChoice& route_choice, const Table& link_flows)
{
    const auto links = link_flows.rows;
    const auto intervals = index.intervals();
    if (od_pairs.size() != index.od_count() || dar.od_count() != index.od_count()
        || route_choice.od_count() != index.od_count())
        throw DimensionMismatch("OD pair count differs between index, DAR and route choice");
    if (link_flows.cols != intervals || dar.intervals() != intervals)
        throw DimensionMismatch("link flows, DAR and variable index disagree on the number of intervals");

    std::vector<Triplet> entries;
    entries.reserve(dar.entries().size());
    for (const auto& e : dar.entries()) {
        if (e.link >= links)
            throw DimensionMismatch("DAR references link " + std::to_string(e.link) + " beyond the link-flow table");
        if (e.path >= index.path_count(e.od))
            throw DimensionMismatch("DAR references a path that is not retained");
        const double p = route_choice.probability(e.od, e.path, e.t_prime);
        const double v = e.ratio * p;
        if (v != 0.0)
            entries.push_back({e.t * links + e.link, index.q_column(e.od, e.path, e.t_prime), v});
    }
    std::vector<double> target(links * intervals);
    for (std::size_t t = 0; t < intervals; ++t) {
        for (std::size_t a = 0; a < links; ++a)
            target[t * links + a] = link_flows(a, t);
    }
    return SparseBlock("base", links * intervals, index.size(), std::move(entries), std::move(target));
}

SparseBlock assemble_lower_bound(const VariableIndex& index, std::span<const OdPair> od_pairs,
                                 const Table& scaled_lower_bounds)
{
    const auto nodes = index.node_count();
    const auto intervals = index.intervals();
    if (scaled_lower_bounds.rows != nodes || scaled_lower_bounds.cols != intervals)
        throw DimensionMismatch("lower-bound table must be [node][interval]");
    if (od_pairs.size() != index.od_count())
        throw DimensionMismatch("OD pair count differs from the variable index");

    std::vector<Triplet> entries;
    for (std::size_t od = 0; od < od_pairs.size(); ++od) {
        const auto& pair = od_pairs[od];
        for (std::size_t k = 0; k < index.path_count(od); ++k) {
            for (std::size_t t = 0; t < intervals; ++t) {
                const auto col = index.q_column(od, k, t);
                entries.push_back({t * nodes + pair.origin, col, 1.0});
                entries.push_back({t * nodes + pair.destination, col, 1.0});
            }
        }
    }
    std::vector<double> target(nodes * intervals);
    for (std::size_t t = 0; t < intervals; ++t) {
        for (std::size_t i = 0; i < nodes; ++i) {
            entries.push_back({t * nodes + i, index.slack_column(i, t), -1.0});
            target[t * nodes + i] = scaled_lower_bounds(i, t);
        }
    }
    return SparseBlock("lower_bound", nodes * intervals, index.size(), std::move(entries), std::move(target));
}

SparseBlock assemble_symmetry(const VariableIndex& index, const TrafficNetwork& network,
                              std::span<const OdPair> od_pairs, std::size_t intervals_per_day)
{
    const auto intervals = index.intervals();
    if (intervals_per_day == 0 || intervals % intervals_per_day != 0)
        throw DimensionMismatch("intervals per day must divide the number of intervals");
    const auto days = intervals / intervals_per_day;
    const auto region_count = network.regions().size();
    if (region_count == 0)
        return SparseBlock("symmetry", 0, index.size(), {}, {});

    const auto region_index = region_flow_index(network, od_pairs);
    // pair_row[i][j] for i < j, lexicographic
    const auto pairs = region_count * (region_count - 1) / 2;
    auto pair_row = [&](std::size_t i, std::size_t j) {
        return i * region_count - i * (i + 1) / 2 + (j - i - 1);
    };
    std::vector<Triplet> entries;
    for (const auto& [key, members] : region_index) {
        const auto [ri, rj] = key;
        if (ri == rj)
            continue;
        const double sign = ri < rj ? 1.0 : -1.0;
        const auto row_in_day = pair_row(std::min(ri, rj), std::max(ri, rj));
        for (auto od : members) {
            for (std::size_t k = 0; k < index.path_count(od); ++k) {
                for (std::size_t t = 0; t < intervals; ++t) {
                    const auto day = t / intervals_per_day;
                    entries.push_back({day * pairs + row_in_day, index.q_column(od, k, t), sign});
                }
            }
        }
    }
    return SparseBlock("symmetry", days * pairs, index.size(), std::move(entries),
                       std::vector<double>(days * pairs, 0.0));
}

SparseBlock assemble_total_flow(const VariableIndex& index, std::size_t intervals_per_day,
                                std::span<const double> base_estimate)
{
    if (base_estimate.empty())
        throw MissingBaseEstimate("total-flow fidelity needs the base-model estimate");
    if (base_estimate.size() != index.q_count() && base_estimate.size() != index.size())
        throw MissingBaseEstimate("base estimate has " + std::to_string(base_estimate.size())
                                  + " entries, expected " + std::to_string(index.q_count()) + " or "
                                  + std::to_string(index.size()));
    const auto intervals = index.intervals();
    if (intervals_per_day == 0 || intervals % intervals_per_day != 0)
        throw DimensionMismatch("intervals per day must divide the number of intervals");
    const auto days = intervals / intervals_per_day;

    std::vector<Triplet> entries;
    entries.reserve(index.q_count());
    std::vector<double> target(days, 0.0);
    for (std::size_t od = 0; od < index.od_count(); ++od) {
        for (std::size_t k = 0; k < index.path_count(od); ++k) {
            for (std::size_t t = 0; t < intervals; ++t) {
                const auto col = index.q_column(od, k, t);
                entries.push_back({t / intervals_per_day, col, 1.0});
                target[t / intervals_per_day] += base_estimate[col];
            }
        }
    }
    return SparseBlock("total_flow", days, index.size(), std::move(entries), std::move(target));
}

DodeProblem assemble_problem(const ProblemInputs& in, const Weights& weights)
{
    if (!in.network || !in.dar || !in.route_choice || !in.link_flows || !in.lower_bounds)
        throw InvalidArgument("problem inputs are incomplete");
    DodeProblem p;
    p.index = VariableIndex(in.od_pairs, in.network->node_count(), in.link_flows->cols);
    p.intervals_per_day = in.intervals_per_day;
    p.network_digest = in.network->digest();
    if (in.link_flows->rows != in.network->link_count())
        throw DimensionMismatch("link-flow table must have one row per network link");
    p.base = assemble_base(p.index, in.od_pairs, *in.dar, *in.route_choice, *in.link_flows);
    p.lower_bound = assemble_lower_bound(p.index, in.od_pairs, *in.lower_bounds);
    p.symmetry = assemble_symmetry(p.index, *in.network, in.od_pairs, in.intervals_per_day);
    p.total_flow = SparseBlock("total_flow", 0, p.index.size(), {}, {});
    p.set_weights(weights);
    p.validate();
    return p;
}

DodeProblem with_total_flow(const DodeProblem& problem, std::span<const double> base_estimate)
{
    DodeProblem p = problem;
    const double gamma = problem.total_flow.weight();
    p.total_flow = assemble_total_flow(p.index, p.intervals_per_day, base_estimate);
    p.total_flow.set_weight(gamma);
    return p;
}

Objective objective_value(const DodeProblem& problem, std::span<const double> x)
{
    if (x.size() != problem.index.size())
        throw DimensionMismatch("x has " + std::to_string(x.size()) + " entries, expected "
                                + std::to_string(problem.index.size()));
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] < 0.0)
            throw NegativeVariable("x[" + std::to_string(i) + "] is negative");
    }
    Objective o;
    o.eps_b = problem.base.residual_norm(x);
    o.eps_lb = problem.lower_bound.residual_norm(x);
    o.eps_s = problem.symmetry.residual_norm(x);
    o.eps_tau = problem.total_flow.residual_norm(x);
    o.total = problem.base.weight() * o.eps_b * o.eps_b + problem.lower_bound.weight() * o.eps_lb * o.eps_lb
        + problem.symmetry.weight() * o.eps_s * o.eps_s + problem.total_flow.weight() * o.eps_tau * o.eps_tau;
    return o;
}

} // namespace dode
