#pragma once

// Test-side helpers: small network builders, the synthetic pipeline, random stacked
// problems and dense oracles that share no arithmetic with the library.

#include "dode/assignment.hpp"
#include "dode/ingest.hpp"
#include "dode/network.hpp"
#include "dode/problem.hpp"
#include "dode/solver.hpp"
#include "dode/synth.hpp"
#include "dode/util.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace dode::test {

struct LinkSpec {
    std::string from, to;
    double length_km;
};

/// Nodes "A", "B", ... at arbitrary positions, one sensor per link, no regions unless given.
inline TrafficNetwork make_network(std::vector<std::string> node_ids, const std::vector<LinkSpec>& links,
                                   const std::vector<std::string>& node_regions = {})
{
    std::vector<Node> nodes;
    std::vector<Region> regions;
    for (std::size_t i = 0; i < node_ids.size(); ++i) {
        Node n{node_ids[i], {34.0 + 0.01 * static_cast<double>(i), -118.0}, {}};
        if (!node_regions.empty() && !node_regions[i].empty()) {
            n.region_id = node_regions[i];
            if (std::none_of(regions.begin(), regions.end(), [&](const Region& r) { return r.id == n.region_id; }))
                regions.push_back({n.region_id, n.region_id, {}});
        }
        nodes.push_back(std::move(n));
    }
    std::vector<Link> out;
    for (const auto& l : links) {
        const std::string id = l.from + l.to;
        out.push_back({id, l.from, l.to, l.length_km, {"s" + id}});
    }
    return build_network(std::move(nodes), std::move(out), std::move(regions));
}

/// Everything the base model needs, derived from a scenario by simulating its sensors and
/// reading them back through cleaning and the link-flow formula.
struct Pipeline {
    DarTensor dar;
    RouteChoice route_choice;
    Observations observations;
    SensorTable sensors;
    Table link_flows;
    Table lower_bounds;
    DodeProblem problem;
};

inline Pipeline build_pipeline(const Scenario& s, const Weights& weights = {}, double alpha = 0.5,
                               double lambda_km = 1.0, const DarOptions& dar_options = {},
                               const NoiseOptions& noise = {})
{
    Pipeline p;
    const auto T = s.grid.interval_count();
    p.dar = compute_dar_tensor(s.network, s.od_pairs, s.speeds, dar_options);
    p.route_choice = RouteChoice(s.od_pairs, s.route_mode);
    p.observations = forward_simulate(s, p.dar, p.route_choice, noise);
    for (const auto& series : collect_series(p.observations.records, T)) {
        auto clean = clean_sensor(series);
        p.sensors.emplace(clean.sensor_id, std::move(clean));
    }
    p.link_flows = link_flows(s.network, p.sensors, T);
    p.lower_bounds = lower_bounds(s.network, s.arterials, T, lambda_km, alpha);
    ProblemInputs in;
    in.network = &s.network;
    in.od_pairs = s.od_pairs;
    in.dar = &p.dar;
    in.route_choice = &p.route_choice;
    in.link_flows = &p.link_flows;
    in.lower_bounds = &p.lower_bounds;
    in.intervals_per_day = s.grid.intervals_per_day();
    p.problem = assemble_problem(in, weights);
    return p;
}

/// Ground truth padded with zero slacks.
inline std::vector<double> padded(const DodeProblem& problem, std::span<const double> q)
{
    std::vector<double> x(problem.index.size(), 0.0);
    std::copy(q.begin(), q.end(), x.begin());
    return x;
}

/// Random stacked problem with the production block structure: the lower-bound block carries
/// one -1 slack per (node, interval) row and every other block touches q only.
inline DodeProblem random_problem(Rng& rng, std::size_t max_vars = 25)
{
    for (;;) {
        const std::size_t ods = 1 + rng.index(4);
        const std::size_t nodes = 1 + rng.index(3);
        const std::size_t days = 1 + rng.index(2);
        const std::size_t ipd = 1 + rng.index(2);
        const std::size_t T = days * ipd;
        std::vector<std::size_t> paths(ods);
        for (auto& k : paths)
            k = 1 + rng.index(2);
        VariableIndex index(paths, nodes, T);
        if (index.size() > max_vars)
            continue;

        const auto n = index.size();
        const auto nq = index.q_count();
        auto q_entries = [&](std::size_t rows, double density, double lo, double hi) {
            std::vector<Triplet> t;
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < nq; ++c)
                    if (rng.uniform() < density)
                        t.push_back({r, c, rng.uniform(lo, hi)});
            return t;
        };
        auto targets = [&](std::size_t rows, double lo, double hi) {
            std::vector<double> b(rows);
            for (auto& v : b)
                v = rng.uniform(lo, hi);
            return b;
        };

        DodeProblem p;
        p.index = index;
        p.intervals_per_day = ipd;
        const std::size_t base_rows = 2 + rng.index(9);
        p.base = SparseBlock("base", base_rows, n, q_entries(base_rows, 0.5, 0.0, 1.0), targets(base_rows, -1.0, 5.0));

        auto lb = q_entries(nodes * T, 0.3, 1.0, 1.0);
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t i = 0; i < nodes; ++i)
                lb.push_back({t * nodes + i, index.slack_column(i, t), -1.0});
        p.lower_bound = SparseBlock("lower_bound", nodes * T, n, lb, targets(nodes * T, 0.0, 3.0),
                                    rng.uniform(0.0, 2.0));

        const std::size_t sym_rows = 1 + rng.index(2);
        std::vector<Triplet> sym;
        for (std::size_t r = 0; r < sym_rows; ++r)
            for (std::size_t c = 0; c < nq; ++c)
                if (rng.uniform() < 0.4)
                    sym.push_back({r, c, rng.uniform() < 0.5 ? 1.0 : -1.0});
        p.symmetry = SparseBlock("symmetry", sym_rows, n, sym, std::vector<double>(sym_rows, 0.0),
                                 rng.uniform(0.0, 2.0));

        std::vector<Triplet> tau;
        for (std::size_t od = 0; od < ods; ++od)
            for (std::size_t k = 0; k < paths[od]; ++k)
                for (std::size_t t = 0; t < T; ++t)
                    tau.push_back({t / ipd, index.q_column(od, k, t), 1.0});
        p.total_flow = SparseBlock("total_flow", days, n, tau, targets(days, 0.0, 10.0), rng.uniform(0.0, 2.0));
        p.validate();
        return p;
    }
}

inline Eigen::MatrixXd dense(const SparseBlock& block)
{
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(block.rows()),
                                              static_cast<Eigen::Index>(block.cols()));
    for (const auto& t : block.triplets())
        m(static_cast<Eigen::Index>(t.row), static_cast<Eigen::Index>(t.col)) += t.value;
    return m;
}

inline Eigen::VectorXd to_eigen(std::span<const double> v)
{
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i)
        out(static_cast<Eigen::Index>(i)) = v[i];
    return out;
}

/// sqrt(w) A and sqrt(w) b stacked over all blocks with positive weight.
inline std::pair<Eigen::MatrixXd, Eigen::VectorXd> stacked(const DodeProblem& p)
{
    std::vector<std::pair<Eigen::MatrixXd, Eigen::VectorXd>> parts;
    Eigen::Index rows = 0;
    for (const auto* b : p.blocks()) {
        if (b->weight() <= 0.0 || b->rows() == 0)
            continue;
        const double s = std::sqrt(b->weight());
        parts.emplace_back(s * dense(*b), s * to_eigen(b->target()));
        rows += parts.back().first.rows();
    }
    const auto n = static_cast<Eigen::Index>(p.index.size());
    Eigen::MatrixXd A(rows, n);
    Eigen::VectorXd y(rows);
    Eigen::Index at = 0;
    for (auto& [m, v] : parts) {
        A.middleRows(at, m.rows()) = m;
        y.segment(at, v.size()) = v;
        at += m.rows();
    }
    return {A, y};
}

/// Dense objective sum_blocks w ||A x - b||^2.
inline double dense_objective(const DodeProblem& p, std::span<const double> x)
{
    const auto [A, y] = stacked(p);
    return (A * to_eigen(x) - y).squaredNorm();
}

/// Least squares restricted to the columns in `support`, zero elsewhere.
inline Eigen::VectorXd restricted_lstsq(const Eigen::MatrixXd& A, const Eigen::VectorXd& y,
                                        const std::vector<Eigen::Index>& support)
{
    Eigen::VectorXd x = Eigen::VectorXd::Zero(A.cols());
    if (support.empty())
        return x;
    Eigen::MatrixXd sub(A.rows(), static_cast<Eigen::Index>(support.size()));
    for (std::size_t j = 0; j < support.size(); ++j)
        sub.col(static_cast<Eigen::Index>(j)) = A.col(support[j]);
    const Eigen::VectorXd s = sub.completeOrthogonalDecomposition().solve(y);
    for (std::size_t j = 0; j < support.size(); ++j)
        x(support[j]) = s(static_cast<Eigen::Index>(j));
    return x;
}

/// Lawson-Hanson active-set NNLS.
inline Eigen::VectorXd lawson_hanson(const Eigen::MatrixXd& A, const Eigen::VectorXd& y)
{
    const auto n = A.cols();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    std::vector<bool> passive(static_cast<std::size_t>(n), false);
    const double tol = 1e-12 * std::max(1.0, A.norm() * y.norm());
    for (int outer = 0; outer < 10 * n + 10; ++outer) {
        const Eigen::VectorXd w = A.transpose() * (y - A * x);
        Eigen::Index best = -1;
        for (Eigen::Index j = 0; j < n; ++j)
            if (!passive[static_cast<std::size_t>(j)] && w(j) > tol && (best < 0 || w(j) > w(best)))
                best = j;
        if (best < 0)
            break;
        passive[static_cast<std::size_t>(best)] = true;
        for (int inner = 0; inner < 10 * n + 10; ++inner) {
            std::vector<Eigen::Index> support;
            for (Eigen::Index j = 0; j < n; ++j)
                if (passive[static_cast<std::size_t>(j)])
                    support.push_back(j);
            const Eigen::VectorXd s = restricted_lstsq(A, y, support);
            double alpha = 1.0;
            bool feasible = true;
            for (auto j : support) {
                if (s(j) <= 0.0) {
                    feasible = false;
                    alpha = std::min(alpha, x(j) / (x(j) - s(j)));
                }
            }
            if (feasible) {
                x = s;
                break;
            }
            x += alpha * (s - x);
            for (auto j : support)
                if (x(j) <= tol) {
                    x(j) = 0.0;
                    passive[static_cast<std::size_t>(j)] = false;
                }
        }
    }
    return x;
}

/// Best objective over every support whose unconstrained restricted solution is nonnegative.
/// Exponential; only for a handful of columns.
inline double exhaustive_nnls_objective(const Eigen::MatrixXd& A, const Eigen::VectorXd& y)
{
    const auto n = A.cols();
    double best = std::numeric_limits<double>::infinity();
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
        std::vector<Eigen::Index> support;
        for (Eigen::Index j = 0; j < n; ++j)
            if (mask & (std::uint64_t{1} << j))
                support.push_back(j);
        const Eigen::VectorXd x = restricted_lstsq(A, y, support);
        if ((x.array() >= -1e-12).all())
            best = std::min(best, (A * x.cwiseMax(0.0) - y).squaredNorm());
    }
    return best;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

/// Central differences of the library objective; x must stay at least h away from zero.
inline std::vector<double> finite_difference_gradient(const DodeProblem& p, std::vector<double> x, double h)
{
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        x[i] = xi + h;
        const double up = objective_value(p, x).total;
        x[i] = xi - h;
        const double down = objective_value(p, x).total;
        x[i] = xi;
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

/// A grid scenario small enough for tight solves.
inline Scenario small_scenario(std::uint64_t seed, bool symmetric = false, int interval_minutes = 120)
{
    GridSpec spec;
    spec.rows = 2;
    spec.cols = 3;
    spec.region_rows = 1;
    spec.region_cols = 3;
    const auto network = make_grid_network(spec);
    ProfileParams params;
    params.symmetric = symmetric;
    params.factor_min = 0.2;
    params.factor_max = 2.0;
    return generate_scenario(network, TimeGrid(interval_minutes, {Date{std::chrono::year{2019}, std::chrono::month{3},
                                                                       std::chrono::day{4}}}),
                             params, seed);
}

} // namespace dode::test
