#pragma once

#include "hbflow/assembly.hpp"
#include "hbflow/linalg.hpp"
#include "hbflow/mesh.hpp"

#include <span>
#include <vector>

namespace hbflow {

struct HuberParams {
    double g = 0.2;       ///< plasticity threshold (Oldroyd number)
    double gamma = 1e3;   ///< Huber regularization parameter
    double p = 2.0;       ///< flow index
    double epsilon = 1e-6; ///< shear-thinning preconditioner smoothing

    /// Throws InvalidArgument unless g, gamma, epsilon > 0 and p > 1.
    void validate() const;
};

/// Huber-smoothed Euclidean norm scaled by g:
/// g|z| - g^2/(2 gamma) when gamma|z| >= g, (gamma/2)|z|^2 otherwise.
double huber_psi(const Point& z, const HuberParams& params);

/// Per-triangle multiplier w = g gamma grad u / max(g, gamma |grad u|) and active flags.
struct DualField {
    std::vector<Point> multiplier;
    /// true where gamma |grad u| >= g (yielded material)
    std::vector<bool> active;

    [[nodiscard]] std::vector<double> multiplier_norms() const;
    [[nodiscard]] double max_multiplier_norm() const;
};

DualField dual_field(const DiscreteGradient& grad, std::span<const double> u,
                     const HuberParams& params);

/// J(u) = sum_k meas_k [ xi_k^p / p + psi(grad u|_k) ] - load . u
double evaluate_objective(const Mesh& mesh, const DiscreteGradient& grad,
                          std::span<const double> u, const HuberParams& params,
                          std::span<const double> load);

/// J'(u) = A_u(u) u + A_max(u) u - load, assembled from the p-Laplacian and Huber weights.
Vector evaluate_gradient(const Mesh& mesh, const DiscreteGradient& grad,
                         std::span<const double> u, const HuberParams& params,
                         std::span<const double> load);

/// Nonsmooth objective with g|z| in place of psi; diagnostic only.
double evaluate_unregularized_objective(const Mesh& mesh, const DiscreteGradient& grad,
                                        std::span<const double> u, const HuberParams& params,
                                        std::span<const double> load);

/**
 * The discrete regularized functional bound to one mesh and load.
 *
 * Holds the discrete gradient and the stiffness assembler so repeated
 * evaluations only pay for the per-triangle passes.
 */
class RegularizedFunctional {
public:
    RegularizedFunctional(const Mesh& mesh, HuberParams params, Vector load);

    [[nodiscard]] const Mesh& mesh() const { return *mesh_; }
    [[nodiscard]] const HuberParams& params() const { return params_; }
    [[nodiscard]] const DiscreteGradient& grad() const { return grad_; }
    [[nodiscard]] const StiffnessAssembler& assembler() const { return assembler_; }
    [[nodiscard]] std::span<const double> load() const { return load_; }
    [[nodiscard]] std::size_t size() const { return load_.size(); }

    void set_gamma(double gamma);

    [[nodiscard]] double value(std::span<const double> u) const;
    [[nodiscard]] Vector gradient(std::span<const double> u) const;
    [[nodiscard]] DualField dual(std::span<const double> u) const;

private:
    const Mesh* mesh_;
    HuberParams params_;
    DiscreteGradient grad_;
    StiffnessAssembler assembler_;
    Vector load_;
};

/**
 * phi(alpha) = J(u + alpha w) - J(u), summed per triangle from the gradients
 * of u and w.
 *
 * The result carries a relative error of a few ulps of the increment itself,
 * not of |J(u)|, so decreases far below the resolution of J(u) stay visible.
 */
class ObjectiveIncrement {
public:
    ObjectiveIncrement(const RegularizedFunctional& functional, std::span<const double> u,
                       std::span<const double> w);

    double operator()(double alpha) const;

private:
    HuberParams params_;
    std::span<const double> areas_;
    Vector grad_u_;
    Vector grad_w_;
    double load_w_ = 0.0;
};

} // namespace hbflow
