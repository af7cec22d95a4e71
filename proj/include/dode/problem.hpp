#pragma once

#include "dode/assignment.hpp"
#include "dode/network.hpp"
#include "dode/table.hpp"
#include "dode/time_grid.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace dode {

/// Column catalog for x = [q; slack]. q columns are ordered (od, path, interval),
/// slack columns (node, interval), and every q column precedes every slack column.
class VariableIndex {
public:
    VariableIndex() = default;
    VariableIndex(std::vector<std::size_t> paths_per_od, std::size_t node_count, std::size_t intervals);
    VariableIndex(std::span<const OdPair> od_pairs, std::size_t node_count, std::size_t intervals);

    std::size_t od_count() const noexcept { return paths_per_od_.size(); }
    std::size_t path_count(std::size_t od) const { return paths_per_od_[od]; }
    const std::vector<std::size_t>& paths_per_od() const noexcept { return paths_per_od_; }
    std::size_t node_count() const noexcept { return node_count_; }
    std::size_t intervals() const noexcept { return intervals_; }

    std::size_t q_count() const noexcept { return q_count_; }
    std::size_t slack_count() const noexcept { return node_count_ * intervals_; }
    std::size_t size() const noexcept { return q_count_ + slack_count(); }

    std::size_t q_column(std::size_t od, std::size_t path, std::size_t t) const
    {
        return od_offset_[od] + path * intervals_ + t;
    }
    std::size_t slack_column(std::size_t node, std::size_t t) const { return q_count_ + node * intervals_ + t; }
    bool is_slack(std::size_t column) const noexcept { return column >= q_count_; }

    struct QKey {
        std::size_t od, path, interval;
    };
    QKey q_key(std::size_t column) const;

    bool operator==(const VariableIndex&) const = default;

private:
    std::vector<std::size_t> paths_per_od_;
    std::vector<std::size_t> od_offset_;
    std::size_t node_count_ = 0;
    std::size_t intervals_ = 0;
    std::size_t q_count_ = 0;
};

struct Triplet {
    std::size_t row = 0;
    std::size_t col = 0;
    double value = 0.0;

    bool operator==(const Triplet&) const = default;
};

/// Weighted least-squares block w * ||b - A x||^2 stored in compressed rows.
/// Duplicate coordinates are summed when the block is built.
class SparseBlock {
public:
    SparseBlock() = default;
    SparseBlock(std::string name, std::size_t rows, std::size_t cols, std::vector<Triplet> entries,
                std::vector<double> target, double weight = 1.0);

    const std::string& name() const noexcept { return name_; }
    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t nnz() const noexcept { return values_.size(); }
    double weight() const noexcept { return weight_; }
    void set_weight(double w);
    const std::vector<double>& target() const noexcept { return target_; }

    std::span<const std::size_t> row_columns(std::size_t r) const
    {
        return {col_index_.data() + row_start_[r], row_start_[r + 1] - row_start_[r]};
    }
    std::span<const double> row_values(std::size_t r) const
    {
        return {values_.data() + row_start_[r], row_start_[r + 1] - row_start_[r]};
    }
    /// a_r . x
    double row_dot(std::size_t r, std::span<const double> x) const;

    /// out = A x - b
    void residual(std::span<const double> x, std::span<double> out) const;
    /// out += scale * A^T r
    void add_transpose_product(std::span<const double> r, double scale, std::span<double> out) const;
    /// ||A x - b||
    double residual_norm(std::span<const double> x) const;

    /// Canonical (row-major, column-sorted) triplets.
    std::vector<Triplet> triplets() const;

    bool operator==(const SparseBlock&) const = default;

private:
    std::string name_;
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::size_t> row_start_{0};
    std::vector<std::size_t> col_index_;
    std::vector<double> values_;
    std::vector<double> target_;
    double weight_ = 1.0;
};

struct Weights {
    double eta = 1.0;   ///< local-road lower bound
    double beta = 10.0; ///< symmetry
    double gamma = 1.0; ///< total-flow fidelity

    bool operator==(const Weights&) const = default;
};

/// Stacked system of the base block and the three regularizer blocks.
struct DodeProblem {
    VariableIndex index;
    SparseBlock base;
    SparseBlock lower_bound;
    SparseBlock symmetry;
    SparseBlock total_flow;
    std::size_t intervals_per_day = 0;
    std::string network_digest;

    std::vector<const SparseBlock*> blocks() const { return {&base, &lower_bound, &symmetry, &total_flow}; }
    Weights weights() const { return {lower_bound.weight(), symmetry.weight(), total_flow.weight()}; }
    void set_weights(const Weights& w);

    /// Throws DimensionMismatch when column counts disagree or a block other than
    /// lower_bound carries slack coefficients.
    void validate() const;

    bool operator==(const DodeProblem&) const = default;
};

/// Row (t * |L| + a), entry at column (od, k, t') = rho(t, t') * p(t'); target y_a(t).
SparseBlock assemble_base(const VariableIndex& index, std::span<const OdPair> od_pairs, const DarTensor& dar,
                          const RouteChoice& route_choice, const Table& link_flows);

/// Row (t * |N| + i): +1 on q columns starting or ending at node i at t, -1 on slack(i, t);
/// target alpha * LB_i(t) (already scaled).
SparseBlock assemble_lower_bound(const VariableIndex& index, std::span<const OdPair> od_pairs,
                                 const Table& scaled_lower_bounds);

/// Row (day * P + pair) for each unordered region pair i < j: +1 on q columns R_i -> R_j
/// within the day, -1 on R_j -> R_i; target 0. Networks without regions give zero rows.
SparseBlock assemble_symmetry(const VariableIndex& index, const TrafficNetwork& network,
                              std::span<const OdPair> od_pairs, std::size_t intervals_per_day);

/// One row per day: +1 on every q column of the day; target = day total of the base q.
/// `base_estimate` is either a q vector or a full x vector. Throws MissingBaseEstimate.
SparseBlock assemble_total_flow(const VariableIndex& index, std::size_t intervals_per_day,
                                std::span<const double> base_estimate);

struct ProblemInputs {
    const TrafficNetwork* network = nullptr;
    std::span<const OdPair> od_pairs;
    const DarTensor* dar = nullptr;
    const RouteChoice* route_choice = nullptr;
    const Table* link_flows = nullptr;   ///< [link][interval]
    const Table* lower_bounds = nullptr; ///< [node][interval], alpha-scaled
    std::size_t intervals_per_day = 0;
};

/// Assembles base, lower-bound and symmetry blocks; the total-flow block is empty
/// until a base estimate is supplied (see with_total_flow()).
DodeProblem assemble_problem(const ProblemInputs& inputs, const Weights& weights);

/// Copy of `problem` with the total-flow block built from `base_estimate`.
DodeProblem with_total_flow(const DodeProblem& problem, std::span<const double> base_estimate);

struct Objective {
    double total = 0.0; ///< eps_b^2 + eta eps_lb^2 + beta eps_s^2 + gamma eps_tau^2
    double eps_b = 0.0;
    double eps_lb = 0.0;
    double eps_s = 0.0;
    double eps_tau = 0.0;
};

/// Unweighted block residual norms and the weighted total. Throws NegativeVariable, DimensionMismatch.
Objective objective_value(const DodeProblem& problem, std::span<const double> x);

} // namespace dode
