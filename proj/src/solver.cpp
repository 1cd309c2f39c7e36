#include "hbflow/solver.hpp"

#include "hbflow/assembly.hpp"
#include "hbflow/errors.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <sstream>

namespace hbflow {

namespace {

Vector negated(std::span<const double> v)
{
    Vector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        out[i] = -v[i];
    return out;
}

SparseMatrix shear_thinning_preconditioner(const RegularizedFunctional& functional,
                                           std::span<const double> u)
{
    const Vector xi = gradient_magnitudes(functional.grad(), u);
    const auto& params = functional.params();
    return functional.assembler().assemble(weights_preconditioner(xi, params.p, params.epsilon));
}

} // namespace

void SolverConfig::validate() const
{
    params.validate();
    line_search.validate();
    if (!(tol > 0.0))
        throw InvalidArgument("solver: tol must be positive");
    if (max_iters < 0)
        throw InvalidArgument("solver: max_iters must be nonnegative");
    if (!(linear.tol > 0.0))
        throw InvalidArgument("solver: linear tolerance must be positive");
}

Vector solve_poisson_init(const Mesh& mesh, std::span<const double> load,
                          const LinearSolverConfig& linear)
{
    return solve_spd(assemble_stiffness(mesh), load, linear).x;
}

Vector descent_direction_shear_thinning(const Mesh& mesh, const DiscreteGradient& grad,
                                        std::span<const double> u, const HuberParams& params,
                                        std::span<const double> load,
                                        const LinearSolverConfig& linear)
{
    const Vector residual = evaluate_gradient(mesh, grad, u, params, load);
    const Vector xi = gradient_magnitudes(grad, u);
    const SparseMatrix pk =
        assemble_weighted_stiffness(mesh, weights_preconditioner(xi, params.p, params.epsilon));
    return solve_spd(pk, negated(residual), linear).x;
}

Vector descent_direction_shear_thickening(const Mesh& mesh, const DiscreteGradient& grad,
                                          std::span<const double> u, const HuberParams& params,
                                          std::span<const double> load,
                                          const LinearSolverConfig& linear)
{
    const Vector residual = evaluate_gradient(mesh, grad, u, params, load);
    return solve_spd(assemble_stiffness(mesh), negated(residual), linear).x;
}

SolveOutcome solve(const Mesh& mesh, const SolverConfig& config, std::span<const double> load,
                   std::span<const double> initial)
{
    config.validate();
    const RegularizedFunctional functional(mesh, config.params, Vector(load.begin(), load.end()));
    const bool thinning = uses_shear_thinning_branch(config.params.p);

    // The Laplacian preconditioner does not depend on the iterate.
    std::optional<SparseMatrix> stiffness;
    if (!thinning)
        stiffness = functional.assembler().assemble(TriangleWeights(mesh.num_triangles(), 1.0));

    SolveOutcome out;
    if (!initial.empty()) {
        if (initial.size() != mesh.num_dofs())
            throw DimensionMismatch("solve initial guess", mesh.num_dofs(), initial.size());
        out.u.assign(initial.begin(), initial.end());
    } else if (stiffness) {
        out.u = solve_spd(*stiffness, load, config.linear).x;
    } else {
        out.u = solve_poisson_init(mesh, load, config.linear);
    }

    Vector gradient = functional.gradient(out.u);
    double value = functional.value(out.u);
    out.initial_residual_norm = norm2(gradient);
    out.final_objective = value;

    if (out.initial_residual_norm == 0.0) {
        out.converged = true;
        out.status = SolveStatus::converged;
        out.final_rel_residual = 0.0;
        out.dual = functional.dual(out.u);
        return out;
    }
    out.final_rel_residual = 1.0;

    for (int k = 0;; ++k) {
        if (k > 0 && out.final_rel_residual <= config.tol) {
            out.converged = true;
            out.status = SolveStatus::converged;
            break;
        }
        if (k == config.max_iters) {
            out.status = SolveStatus::max_iterations;
            out.diagnostic = "iteration limit reached";
            break;
        }

        const SparseMatrix pk =
            thinning ? shear_thinning_preconditioner(functional, out.u) : SparseMatrix{};
        const SparseMatrix& precond = thinning ? pk : *stiffness;
        const auto direction = solve_spd(precond, negated(gradient), config.linear);
        const Vector& w = direction.x;
        const double slope = dot(gradient, w);
        const double energy = dot(w, precond * w);
        if (!(slope < 0.0)) {
            out.status = SolveStatus::line_search_failed;
            out.diagnostic = "search direction is not a descent direction";
            break;
        }

        const ObjectiveIncrement increment(functional, out.u, w);
        const LineSearchResult ls =
            backtracking_search(std::cref(increment), 0.0, slope, config.line_search);
        if (ls.status != LineSearchStatus::accepted) {
            out.status = SolveStatus::line_search_failed;
            std::ostringstream msg;
            msg << "no sufficient decrease after " << ls.backtracks
                << " backtracks (last trial alpha = " << ls.alpha << ")";
            out.diagnostic = msg.str();
            break;
        }

        axpy(ls.alpha, w, out.u);
        value += ls.phi;
        gradient = functional.gradient(out.u);

        IterationRecord rec;
        rec.k = k + 1;
        rec.rel_residual = norm2(gradient) / out.initial_residual_norm;
        rec.objective = value;
        rec.objective_change = ls.phi;
        rec.alpha = ls.alpha;
        rec.ls_iters = ls.backtracks;
        rec.directional_derivative = slope;
        rec.preconditioner_energy = energy;
        rec.curvature_ratio = dot(gradient, w) / slope;
        rec.linear_iterations = direction.report.iterations;
        rec.trial_steps = ls.trials;
        out.history.push_back(std::move(rec));
        out.final_rel_residual = out.history.back().rel_residual;
        out.final_objective = value;
    }

    out.dual = functional.dual(out.u);
    return out;
}

SolveOutcome solve(const Mesh& mesh, const SolverConfig& config, double f,
                   std::span<const double> initial)
{
    const Vector load = assemble_load_vector(mesh, f);
    return solve(mesh, config, load, initial);
}

std::vector<double> ContinuationSchedule::gammas() const
{
    if (!(gamma_start > 0.0) || !(factor > 1.0))
        throw InvalidArgument("continuation: need gamma_start > 0 and factor > 1");
    if (gamma_start > gamma_end)
        throw InvalidArgument("continuation: gamma_start exceeds gamma_end");
    std::vector<double> out;
    for (int i = 0;; ++i) {
        const double gamma = gamma_start * std::pow(factor, i);
        if (gamma > gamma_end * (1.0 + 1e-12))
            break;
        out.push_back(gamma);
    }
    return out;
}

std::vector<ContinuationStage> continuation_solve(const Mesh& mesh, const SolverConfig& config,
                                                  double f, const ContinuationSchedule& schedule)
{
    const Vector load = assemble_load_vector(mesh, f);
    std::vector<ContinuationStage> stages;
    Vector warm;
    for (double gamma : schedule.gammas()) {
        SolverConfig stage_config = config;
        stage_config.params.gamma = gamma;
        ContinuationStage stage{gamma, solve(mesh, stage_config, load, warm)};
        const bool ok = stage.outcome.converged;
        warm = stage.outcome.u;
        stages.push_back(std::move(stage));
        if (!ok)
            break;
    }
    return stages;
}

double w1p_seminorm(const Mesh& mesh, const DiscreteGradient& grad, std::span<const double> u,
                    double p)
{
    const Vector xi = gradient_magnitudes(grad, u);
    const auto areas = mesh.areas();
    double sum = 0.0;
    for (std::size_t k = 0; k < xi.size(); ++k)
        sum += areas[k] * std::pow(xi[k], p);
    return std::pow(sum, 1.0 / p);
}

double lp_norm(const Mesh& mesh, std::span<const double> u, double p)
{
    if (u.size() != mesh.num_dofs())
        throw DimensionMismatch("lp_norm", mesh.num_dofs(), u.size());
    const auto areas = mesh.areas();
    const auto tris = mesh.triangles();
    double sum = 0.0;
    for (std::size_t k = 0; k < tris.size(); ++k)
        for (int v : tris[k]) {
            const int dof = mesh.dof_of_vertex(static_cast<std::size_t>(v));
            if (dof >= 0)
                sum += areas[k] / 3.0 * std::pow(std::abs(u[static_cast<std::size_t>(dof)]), p);
        }
    return std::pow(sum, 1.0 / p);
}

const char* to_string(SolveStatus status)
{
    switch (status) {
    case SolveStatus::converged:
        return "converged";
    case SolveStatus::max_iterations:
        return "max_iterations";
    case SolveStatus::line_search_failed:
        return "line_search_failed";
    }
    return "unknown";
}

} // namespace hbflow
