#pragma once

#include "dode/problem.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace dode {

enum class InitMode { Zeros, Constant };

struct SolverOptions {
    std::size_t max_epochs = 500;
    std::size_t batch_rows = 0;       ///< rows per stochastic step; 0 = full batch
    double initial_step = 0.0;        ///< 0 = 1 / L estimated by power iteration
    double step_decay = 0.995;        ///< per-epoch factor, stochastic mode only
    double tolerance = 1e-6;          ///< relative objective change
    std::size_t patience = 3;         ///< consecutive epochs under tolerance
    std::size_t divergence_epochs = 10;
    std::size_t power_iterations = 20;
    std::uint64_t seed = 0;
    InitMode init_mode = InitMode::Zeros;
    double init_value = 0.0;
    /// Full-batch only: monotone accelerated steps with backtracking on the step size.
    bool accelerate = true;
    /// Full-batch only: scale steps by the inverse diagonal of sum_blocks w A^T A.
    bool precondition = true;
    /// Set each slack to max(0, l + d - alpha LB) after solving.
    bool complete_slack = true;

    void validate() const;
    bool full_batch() const noexcept { return batch_rows == 0; }
};

struct ErrorReport {
    double eps_b = 0.0;
    double eps_s = 0.0;
    double eps_lb = 0.0;
    double eps_tau = 0.0;
    double objective = 0.0;
    double total_flow = 0.0; ///< sum of q (slacks excluded)
    std::size_t epochs_run = 0;
    bool converged = false;
};

struct OdEstimate {
    std::vector<double> x;
    ErrorReport report;

    std::span<const double> q(const VariableIndex& index) const { return {x.data(), index.q_count()}; }
};

/// 2 * sum_blocks w * A^T (A x - b)
std::vector<double> gradient(const DodeProblem& problem, std::span<const double> x);

/// Largest eigenvalue of D^-1/2 (sum_blocks w A^T A) D^-1/2, estimated by power iteration from
/// the all-ones vector. An empty `diagonal` means D = I.
double estimate_curvature(const DodeProblem& problem, std::size_t iterations, std::span<const double> diagonal = {});

/// diag(sum_blocks w A^T A), with zero entries replaced by 1.
std::vector<double> curvature_diagonal(const DodeProblem& problem);

ErrorReport make_report(const DodeProblem& problem, std::span<const double> x);

/// Slack completion in place; a no-op when the problem has no slack columns.
void complete_slack(const DodeProblem& problem, std::span<double> x);

OdEstimate solve(const DodeProblem& problem, const SolverOptions& options = {});

struct TwoStageResult {
    OdEstimate base;
    OdEstimate extended;
    DodeProblem extended_problem;
};

/// Stage 1 solves the base block alone; stage 2 adds the total-flow block built from
/// stage 1's q and solves with `weights`. `problem` need not carry a total-flow block.
TwoStageResult two_stage_estimate(const DodeProblem& problem, const Weights& weights,
                                  const SolverOptions& options = {});

TwoStageResult two_stage_estimate(const ProblemInputs& inputs, const Weights& weights,
                                  const SolverOptions& options = {});

struct SweepRow {
    Weights weights;
    ErrorReport report;
};

/// Stage 1 once, then one stage-2 solve per grid entry. Throws InvalidArgument on an empty grid.
std::vector<SweepRow> weight_sweep(const DodeProblem& problem, std::span<const Weights> grid,
                                   const SolverOptions& options = {});

} // namespace dode
