#include "dode/solver.hpp"

#include "dode/error.hpp"
#include "dode/util.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dode {

void SolverOptions::validate() const
{
    if (max_epochs < 1)
        throw InvalidArgument("max_epochs must be at least 1");
    if (!(tolerance > 0.0))
        throw InvalidArgument("tolerance must be positive");
    if (!(initial_step >= 0.0) || !std::isfinite(initial_step))
        throw InvalidArgument("initial_step must be positive (or 0 for automatic)");
    if (!(step_decay > 0.0 && step_decay <= 1.0))
        throw InvalidArgument("step_decay must lie in (0, 1]");
    if (patience < 1 || divergence_epochs < 1)
        throw InvalidArgument("patience and divergence_epochs must be at least 1");
    if (init_mode == InitMode::Constant && !(init_value >= 0.0 && std::isfinite(init_value)))
        throw InvalidArgument("init_value must be a nonnegative finite number");
}

namespace {

struct ActiveBlock {
    const SparseBlock* block;
    double weight;
};

/// Blocks that contribute to the objective. Zero-weight blocks are skipped entirely
/// so that a zero-weighted regularizer leaves every floating-point operation unchanged.
std::vector<ActiveBlock> active_blocks(const DodeProblem& problem)
{
    std::vector<ActiveBlock> out;
    for (const auto* b : problem.blocks()) {
        if (b->weight() > 0.0 && b->rows() > 0)
            out.push_back({b, b->weight()});
    }
    return out;
}

class Evaluator {
public:
    explicit Evaluator(const DodeProblem& problem) : blocks_(active_blocks(problem))
    {
        for (const auto& a : blocks_)
            residuals_.emplace_back(a.block->rows());
    }

    double objective(std::span<const double> x)
    {
        double f = 0.0;
        for (std::size_t k = 0; k < blocks_.size(); ++k) {
            auto& r = residuals_[k];
            blocks_[k].block->residual(x, r);
            double ss = 0.0;
            for (double e : r)
                ss += e * e;
            f += blocks_[k].weight * ss;
        }
        return f;
    }

    /// Gradient at the point of the last objective() call.
    void gradient(std::span<double> g) const
    {
        std::fill(g.begin(), g.end(), 0.0);
        for (std::size_t k = 0; k < blocks_.size(); ++k)
            blocks_[k].block->add_transpose_product(residuals_[k], 2.0 * blocks_[k].weight, g);
    }

    const std::vector<ActiveBlock>& blocks() const noexcept { return blocks_; }

private:
    std::vector<ActiveBlock> blocks_;
    std::vector<std::vector<double>> residuals_;
};

/// floor keeps an objective that has reached round-off level from looking unconverged
double relative_change(double previous, double current, double floor)
{
    const double scale = std::max({std::abs(previous), std::abs(current), floor});
    return scale == 0.0 ? 0.0 : std::abs(previous - current) / scale;
}

void check_finite(double f, std::size_t epoch)
{
    if (!std::isfinite(f))
        throw Diverged("objective became non-finite at epoch " + std::to_string(epoch));
}

std::vector<double> initial_point(const DodeProblem& problem, const SolverOptions& options)
{
    const double v = options.init_mode == InitMode::Constant ? options.init_value : 0.0;
    return std::vector<double>(problem.index.size(), v);
}

double initial_step(const DodeProblem& problem, const SolverOptions& options, std::span<const double> diagonal = {})
{
    if (options.initial_step > 0.0)
        return options.initial_step;
    const double lipschitz = 2.0 * estimate_curvature(problem, options.power_iterations, diagonal);
    return lipschitz > 0.0 ? 1.0 / lipschitz : 1.0;
}

struct Progress {
    double previous = 0.0;
    double floor = 0.0;
    std::size_t streak = 0;

    explicit Progress(double initial) : previous(initial), floor(1e-15 * std::abs(initial)) {}

    bool update(double f, double tolerance, std::size_t patience)
    {
        streak = relative_change(previous, f, floor) < tolerance ? streak + 1 : 0;
        previous = f;
        return streak >= patience;
    }
};

OdEstimate solve_full_batch(const DodeProblem& problem, const SolverOptions& options)
{
    Evaluator eval(problem);
    const auto n = problem.index.size();
    std::vector<double> x = initial_point(problem, options);
    // metric[i] scales coordinate i of the step; the projection stays a clamp at zero.
    const std::vector<double> metric = options.precondition ? curvature_diagonal(problem) : std::vector<double>(n, 1.0);
    double step = initial_step(problem, options, options.precondition ? std::span<const double>(metric) : std::span<const double>());

    double fx = eval.objective(x);
    check_finite(fx, 0);
    Progress progress(fx);
    std::vector<double> z = x, trial(n), g(n), prev_x(n);
    double theta = 1.0;
    std::size_t increases = 0;
    OdEstimate out;

    for (std::size_t epoch = 1; epoch <= options.max_epochs; ++epoch) {
        out.report.epochs_run = epoch;
        const double fz = eval.objective(z);
        eval.gradient(g);
        double ft = 0.0;
        for (;;) {
            for (std::size_t i = 0; i < n; ++i)
                trial[i] = std::max(0.0, z[i] - step * g[i] / metric[i]);
            ft = eval.objective(trial);
            check_finite(ft, epoch);
            if (!options.accelerate)
                break;
            double lin = 0.0, sq = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = trial[i] - z[i];
                lin += g[i] * d;
                sq += metric[i] * d * d;
            }
            const double bound = fz + lin + sq / (2.0 * step);
            if (ft <= bound + 1e-12 * std::max(1.0, std::abs(fz)) || sq == 0.0)
                break;
            step *= 0.5;
        }

        if (!options.accelerate) {
            increases = ft > fx ? increases + 1 : 0;
            if (increases >= options.divergence_epochs)
                throw Diverged("objective grew for " + std::to_string(increases)
                               + " consecutive epochs; reduce the step size");
            x.swap(trial);
            z = x;
            fx = ft;
        } else if (ft > fx) {
            // Momentum overshot: restart from the best point without counting the epoch.
            theta = 1.0;
            z = x;
            continue;
        } else {
            const double next_theta = (1.0 + std::sqrt(1.0 + 4.0 * theta * theta)) / 2.0;
            const double momentum = (theta - 1.0) / next_theta;
            prev_x.swap(x);
            x = trial;
            for (std::size_t i = 0; i < n; ++i)
                z[i] = std::max(0.0, x[i] + momentum * (x[i] - prev_x[i]));
            theta = next_theta;
            fx = ft;
        }
        if (progress.update(fx, options.tolerance, options.patience)) {
            out.report.converged = true;
            break;
        }
    }
    out.x = std::move(x);
    return out;
}

OdEstimate solve_stochastic(const DodeProblem& problem, const SolverOptions& options)
{
    Evaluator eval(problem);
    std::vector<double> x = initial_point(problem, options);
    double step = initial_step(problem, options);

    std::vector<std::pair<std::size_t, std::size_t>> rows; // (active block, row)
    for (std::size_t k = 0; k < eval.blocks().size(); ++k) {
        for (std::size_t r = 0; r < eval.blocks()[k].block->rows(); ++r)
            rows.emplace_back(k, r);
    }
    const auto total_rows = rows.size();
    const auto batch = std::min(options.batch_rows, std::max<std::size_t>(total_rows, 1));
    const double scale = total_rows == 0 ? 0.0 : static_cast<double>(total_rows) / static_cast<double>(batch);

    Rng rng(options.seed);
    double fx = eval.objective(x);
    check_finite(fx, 0);
    Progress progress(fx);
    std::vector<double> batch_residual;
    OdEstimate out;

    for (std::size_t epoch = 1; epoch <= options.max_epochs; ++epoch) {
        out.report.epochs_run = epoch;
        for (std::size_t i = total_rows; i > 1; --i)
            std::swap(rows[i - 1], rows[rng.index(i)]);
        for (std::size_t start = 0; start < total_rows; start += batch) {
            const auto end = std::min(total_rows, start + batch);
            batch_residual.resize(end - start);
            for (auto i = start; i < end; ++i) {
                const auto& [k, r] = rows[i];
                const auto* b = eval.blocks()[k].block;
                batch_residual[i - start] = b->row_dot(r, x) - b->target()[r];
            }
            for (auto i = start; i < end; ++i) {
                const auto& [k, r] = rows[i];
                const auto* b = eval.blocks()[k].block;
                const double s = step * scale * 2.0 * eval.blocks()[k].weight * batch_residual[i - start];
                const auto cols = b->row_columns(r);
                const auto vals = b->row_values(r);
                for (std::size_t j = 0; j < cols.size(); ++j)
                    x[cols[j]] -= s * vals[j];
            }
            for (auto i = start; i < end; ++i) {
                const auto& [k, r] = rows[i];
                for (auto c : eval.blocks()[k].block->row_columns(r))
                    x[c] = std::max(0.0, x[c]);
            }
        }
        step *= options.step_decay;
        fx = eval.objective(x);
        check_finite(fx, epoch);
        if (progress.update(fx, options.tolerance, options.patience)) {
            out.report.converged = true;
            break;
        }
    }
    out.x = std::move(x);
    return out;
}

} // namespace

std::vector<double> gradient(const DodeProblem& problem, std::span<const double> x)
{
    if (x.size() != problem.index.size())
        throw DimensionMismatch("x has the wrong length for this problem");
    Evaluator eval(problem);
    eval.objective(x);
    std::vector<double> g(x.size());
    eval.gradient(g);
    return g;
}

double estimate_curvature(const DodeProblem& problem, std::size_t iterations, std::span<const double> diagonal)
{
    const auto blocks = active_blocks(problem);
    const auto n = problem.index.size();
    if (blocks.empty() || n == 0)
        return 0.0;
    if (!diagonal.empty() && diagonal.size() != n)
        throw DimensionMismatch("preconditioner has the wrong length");
    std::vector<double> scale(n, 1.0);
    for (std::size_t i = 0; i < diagonal.size(); ++i)
        scale[i] = 1.0 / std::sqrt(diagonal[i]);
    std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(n))), sv(n), u(n), av;
    double lambda = 0.0;
    for (std::size_t it = 0; it < std::max<std::size_t>(iterations, 1); ++it) {
        for (std::size_t i = 0; i < n; ++i)
            sv[i] = scale[i] * v[i];
        std::fill(u.begin(), u.end(), 0.0);
        for (const auto& a : blocks) {
            av.resize(a.block->rows());
            for (std::size_t r = 0; r < av.size(); ++r)
                av[r] = a.block->row_dot(r, sv);
            a.block->add_transpose_product(av, a.weight, u);
        }
        for (std::size_t i = 0; i < n; ++i)
            u[i] *= scale[i];
        const double norm = std::sqrt(std::inner_product(u.begin(), u.end(), u.begin(), 0.0));
        if (norm == 0.0)
            return 0.0;
        lambda = norm;
        for (std::size_t i = 0; i < n; ++i)
            v[i] = u[i] / norm;
    }
    return lambda;
}

std::vector<double> curvature_diagonal(const DodeProblem& problem)
{
    std::vector<double> d(problem.index.size(), 0.0);
    for (const auto& a : active_blocks(problem)) {
        for (std::size_t r = 0; r < a.block->rows(); ++r) {
            const auto cols = a.block->row_columns(r);
            const auto vals = a.block->row_values(r);
            for (std::size_t j = 0; j < cols.size(); ++j)
                d[cols[j]] += a.weight * vals[j] * vals[j];
        }
    }
    for (auto& v : d) {
        if (!(v > 0.0))
            v = 1.0;
    }
    return d;
}

ErrorReport make_report(const DodeProblem& problem, std::span<const double> x)
{
    const auto obj = objective_value(problem, x);
    ErrorReport r;
    r.eps_b = obj.eps_b;
    r.eps_s = obj.eps_s;
    r.eps_lb = obj.eps_lb;
    r.eps_tau = obj.eps_tau;
    r.objective = obj.total;
    for (std::size_t i = 0; i < problem.index.q_count(); ++i)
        r.total_flow += x[i];
    return r;
}

void complete_slack(const DodeProblem& problem, std::span<double> x)
{
    const auto& index = problem.index;
    const auto& lb = problem.lower_bound;
    if (index.slack_count() == 0 || lb.rows() == 0)
        return;
    if (lb.rows() != index.slack_count())
        throw DimensionMismatch("lower-bound block does not have one row per slack");
    const auto nodes = index.node_count();
    for (std::size_t t = 0; t < index.intervals(); ++t) {
        for (std::size_t i = 0; i < nodes; ++i) {
            const auto r = t * nodes + i;
            double demand = 0.0;
            const auto cols = lb.row_columns(r);
            const auto vals = lb.row_values(r);
            for (std::size_t j = 0; j < cols.size(); ++j) {
                if (!index.is_slack(cols[j]))
                    demand += vals[j] * x[cols[j]];
            }
            x[index.slack_column(i, t)] = std::max(0.0, demand - lb.target()[r]);
        }
    }
}

OdEstimate solve(const DodeProblem& problem, const SolverOptions& options)
{
    options.validate();
    problem.validate();
    OdEstimate est = options.full_batch() ? solve_full_batch(problem, options) : solve_stochastic(problem, options);
    if (options.complete_slack)
        complete_slack(problem, est.x);
    const auto epochs = est.report.epochs_run;
    const auto converged = est.report.converged;
    est.report = make_report(problem, est.x);
    est.report.epochs_run = epochs;
    est.report.converged = converged;
    return est;
}

TwoStageResult two_stage_estimate(const DodeProblem& problem, const Weights& weights, const SolverOptions& options)
{
    DodeProblem base = problem;
    base.set_weights({0.0, 0.0, 0.0});
    TwoStageResult result;
    result.base = solve(base, options);
    result.extended_problem = with_total_flow(problem, result.base.q(problem.index));
    result.extended_problem.set_weights(weights);
    result.extended = solve(result.extended_problem, options);
    return result;
}

TwoStageResult two_stage_estimate(const ProblemInputs& inputs, const Weights& weights, const SolverOptions& options)
{
    return two_stage_estimate(assemble_problem(inputs, weights), weights, options);
}

std::vector<SweepRow> weight_sweep(const DodeProblem& problem, std::span<const Weights> grid,
                                   const SolverOptions& options)
{
    if (grid.empty())
        throw InvalidArgument("weight grid is empty");
    DodeProblem base = problem;
    base.set_weights({0.0, 0.0, 0.0});
    const auto stage1 = solve(base, options);
    const auto extended = with_total_flow(problem, stage1.q(problem.index));
    std::vector<SweepRow> rows;
    rows.reserve(grid.size());
    for (const auto& w : grid) {
        DodeProblem p = extended;
        p.set_weights(w);
        rows.push_back({w, solve(p, options).report});
    }
    return rows;
}

} // namespace dode
