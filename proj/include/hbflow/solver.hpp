#pragma once

#include "hbflow/huber.hpp"
#include "hbflow/linalg.hpp"
#include "hbflow/linesearch.hpp"
#include "hbflow/mesh.hpp"

#include <span>
#include <string>
#include <vector>

namespace hbflow {

struct SolverConfig {
    HuberParams params;
    /// Stop once ||J'(u_k)|| / ||J'(u_0)|| <= tol.
    double tol = 1e-6;
    int max_iters = 200;
    LineSearchConfig line_search;
    LinearSolverConfig linear;

    void validate() const;
};

/// One row of the convergence table, describing the state after update k.
struct IterationRecord {
    int k = 0;
    double rel_residual = 0.0;
    double objective = 0.0;
    double alpha = 0.0;
    int ls_iters = 0;

    // Diagnostics beyond the table columns.
    double objective_change = 0.0;       ///< J(u_k) - J(u_{k-1}) from the line search
    double directional_derivative = 0.0; ///< <J'(u_{k-1}), w>
    double preconditioner_energy = 0.0;  ///< w^T P w for the iteration's preconditioner P
    double curvature_ratio = 0.0;        ///< <J'(u_k), w> / <J'(u_{k-1}), w>, logged only
    std::size_t linear_iterations = 0;
    std::vector<double> trial_steps;
};

enum class SolveStatus { converged, max_iterations, line_search_failed };

struct SolveOutcome {
    Vector u;
    std::vector<IterationRecord> history;
    bool converged = false;
    SolveStatus status = SolveStatus::max_iterations;
    std::string diagnostic;
    DualField dual;
    double initial_residual_norm = 0.0;
    double final_objective = 0.0;
    double final_rel_residual = 0.0;

    [[nodiscard]] int iterations() const { return static_cast<int>(history.size()); }
};

/// Shear-thinning branch (1 < p < 2) vs Laplacian-preconditioned branch (p >= 2).
[[nodiscard]] inline bool uses_shear_thinning_branch(double p) { return p < 2.0; }

/// Solves the unit-weight stiffness system A u0 = load.
Vector solve_poisson_init(const Mesh& mesh, std::span<const double> load,
                          const LinearSolverConfig& linear = {});

/// w solving A_{eps,u} w = -J'(u) with weights (eps + |grad u|)^(p-2).
Vector descent_direction_shear_thinning(const Mesh& mesh, const DiscreteGradient& grad,
                                        std::span<const double> u, const HuberParams& params,
                                        std::span<const double> load,
                                        const LinearSolverConfig& linear = {});

/// w solving A w = -J'(u) with the unit-weight stiffness A.
Vector descent_direction_shear_thickening(const Mesh& mesh, const DiscreteGradient& grad,
                                          std::span<const double> u, const HuberParams& params,
                                          std::span<const double> load,
                                          const LinearSolverConfig& linear = {});

/// Preconditioned descent from the Poisson initial guess, or from `initial` when given.
SolveOutcome solve(const Mesh& mesh, const SolverConfig& config, std::span<const double> load,
                   std::span<const double> initial = {});
SolveOutcome solve(const Mesh& mesh, const SolverConfig& config, double f,
                   std::span<const double> initial = {});

struct ContinuationStage {
    double gamma = 0.0;
    SolveOutcome outcome;
};

struct ContinuationSchedule {
    double gamma_start = 10.0;
    double factor = 10.0;
    double gamma_end = 1e6;

    /// gamma_start * factor^i for every i with the value not above gamma_end.
    [[nodiscard]] std::vector<double> gammas() const;
};

/// Runs solve() for each gamma of the schedule, warm-starting from the previous
/// stage. A stage that does not converge ends the sequence; it is still returned.
std::vector<ContinuationStage> continuation_solve(const Mesh& mesh, const SolverConfig& config,
                                                  double f,
                                                  const ContinuationSchedule& schedule = {});

/// (sum_k meas_k |grad u|_k^p)^(1/p)
double w1p_seminorm(const Mesh& mesh, const DiscreteGradient& grad, std::span<const double> u,
                    double p);

/// (sum_tau meas/3 sum_vertices |u|^p)^(1/p), with u = 0 on the boundary.
double lp_norm(const Mesh& mesh, std::span<const double> u, double p);

const char* to_string(SolveStatus status);

} // namespace hbflow
