#include "hbflow/huber.hpp"

#include "hbflow/errors.hpp"

#include <algorithm>
#include <cmath>

namespace hbflow {

namespace {

// Neumaier summation.
class CompensatedSum {
public:
    void add(double x)
    {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            c_ += (sum_ - t) + x;
        else
            c_ += (x - t) + sum_;
        sum_ = t;
    }
    [[nodiscard]] double value() const { return sum_ + c_; }

private:
    double sum_ = 0.0;
    double c_ = 0.0;
};

void check_sizes(const Mesh& mesh, const DiscreteGradient& grad, std::span<const double> u,
                 std::span<const double> load)
{
    if (grad.num_triangles() != mesh.num_triangles())
        throw DimensionMismatch("objective: gradient operator rows", mesh.num_triangles(),
                                grad.num_triangles());
    if (u.size() != grad.num_dofs())
        throw DimensionMismatch("objective: coefficient vector", grad.num_dofs(), u.size());
    if (load.size() != grad.num_dofs())
        throw DimensionMismatch("objective: load vector", grad.num_dofs(), load.size());
}

double objective_impl(std::span<const double> areas, const DiscreteGradient& grad,
                      std::span<const double> u, const HuberParams& params,
                      std::span<const double> load, bool regularized)
{
    const Vector g = grad.apply(u);
    const std::size_t m = grad.num_triangles();
    CompensatedSum sum;
    for (std::size_t k = 0; k < m; ++k) {
        const Point z{g[k], g[k + m]};
        const double xi = std::hypot(z[0], z[1]);
        const double plastic = regularized ? huber_psi(z, params) : params.g * xi;
        sum.add(areas[k] * (std::pow(xi, params.p) / params.p + plastic));
    }
    for (std::size_t i = 0; i < u.size(); ++i)
        sum.add(-load[i] * u[i]);
    return sum.value();
}

Vector gradient_impl(const StiffnessAssembler& assembler, const DiscreteGradient& grad,
                     std::span<const double> u, const HuberParams& params,
                     std::span<const double> load)
{
    const Vector xi = gradient_magnitudes(grad, u);
    const SparseMatrix a_u = assembler.assemble(weights_plaplacian(xi, params.p));
    const SparseMatrix a_max = assembler.assemble(weights_huber(xi, params.g, params.gamma));
    Vector out = a_u * u;
    axpy(1.0, a_max * u, out);
    axpy(-1.0, load, out);
    return out;
}

} // namespace

void HuberParams::validate() const
{
    if (!(g > 0.0))
        throw InvalidArgument("g must be positive");
    if (!(gamma > 0.0))
        throw InvalidArgument("gamma must be positive");
    if (!(p > 1.0))
        throw InvalidArgument("p must exceed 1");
    if (!(epsilon > 0.0))
        throw InvalidArgument("epsilon must be positive");
}

double huber_psi(const Point& z, const HuberParams& params)
{
    const double norm = std::hypot(z[0], z[1]);
    if (params.gamma * norm >= params.g)
        return params.g * norm - params.g * params.g / (2.0 * params.gamma);
    return 0.5 * params.gamma * norm * norm;
}

std::vector<double> DualField::multiplier_norms() const
{
    std::vector<double> out(multiplier.size());
    for (std::size_t k = 0; k < multiplier.size(); ++k)
        out[k] = std::hypot(multiplier[k][0], multiplier[k][1]);
    return out;
}

double DualField::max_multiplier_norm() const
{
    double worst = 0.0;
    for (double v : multiplier_norms())
        worst = std::max(worst, v);
    return worst;
}

DualField dual_field(const DiscreteGradient& grad, std::span<const double> u,
                     const HuberParams& params)
{
    params.validate();
    if (u.size() != grad.num_dofs())
        throw DimensionMismatch("dual_field", grad.num_dofs(), u.size());
    const Vector g = grad.apply(u);
    const std::size_t m = grad.num_triangles();
    DualField out;
    out.multiplier.resize(m);
    out.active.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
        const double xi = std::hypot(g[k], g[k + m]);
        const double scale = params.g * params.gamma / std::max(params.g, params.gamma * xi);
        out.multiplier[k] = {scale * g[k], scale * g[k + m]};
        out.active[k] = params.gamma * xi >= params.g;
    }
    return out;
}

double evaluate_objective(const Mesh& mesh, const DiscreteGradient& grad,
                          std::span<const double> u, const HuberParams& params,
                          std::span<const double> load)
{
    params.validate();
    check_sizes(mesh, grad, u, load);
    return objective_impl(mesh.areas(), grad, u, params, load, true);
}

double evaluate_unregularized_objective(const Mesh& mesh, const DiscreteGradient& grad,
                                        std::span<const double> u, const HuberParams& params,
                                        std::span<const double> load)
{
    params.validate();
    check_sizes(mesh, grad, u, load);
    return objective_impl(mesh.areas(), grad, u, params, load, false);
}

Vector evaluate_gradient(const Mesh& mesh, const DiscreteGradient& grad,
                         std::span<const double> u, const HuberParams& params,
                         std::span<const double> load)
{
    params.validate();
    check_sizes(mesh, grad, u, load);
    return gradient_impl(StiffnessAssembler(mesh), grad, u, params, load);
}

RegularizedFunctional::RegularizedFunctional(const Mesh& mesh, HuberParams params, Vector load)
    : mesh_(&mesh)
    , params_(params)
    , grad_(mesh)
    , assembler_(mesh)
    , load_(std::move(load))
{
    params_.validate();
    if (load_.size() != mesh.num_dofs())
        throw DimensionMismatch("RegularizedFunctional load", mesh.num_dofs(), load_.size());
}

void RegularizedFunctional::set_gamma(double gamma)
{
    HuberParams next = params_;
    next.gamma = gamma;
    next.validate();
    params_ = next;
}

double RegularizedFunctional::value(std::span<const double> u) const
{
    check_sizes(*mesh_, grad_, u, load_);
    return objective_impl(mesh_->areas(), grad_, u, params_, load_, true);
}

Vector RegularizedFunctional::gradient(std::span<const double> u) const
{
    check_sizes(*mesh_, grad_, u, load_);
    return gradient_impl(assembler_, grad_, u, params_, load_);
}

DualField RegularizedFunctional::dual(std::span<const double> u) const
{
    return dual_field(grad_, u, params_);
}

ObjectiveIncrement::ObjectiveIncrement(const RegularizedFunctional& functional,
                                       std::span<const double> u, std::span<const double> w)
    : params_(functional.params())
    , areas_(functional.mesh().areas())
{
    if (u.size() != functional.size())
        throw DimensionMismatch("ObjectiveIncrement base point", functional.size(), u.size());
    if (w.size() != functional.size())
        throw DimensionMismatch("ObjectiveIncrement direction", functional.size(), w.size());
    grad_u_ = functional.grad().apply(u);
    grad_w_ = functional.grad().apply(w);
    load_w_ = dot(functional.load(), w);
}

double ObjectiveIncrement::operator()(double alpha) const
{
    const std::size_t m = areas_.size();
    const double p = params_.p;
    const double g = params_.g;
    const double gamma = params_.gamma;
    CompensatedSum sum;
    for (std::size_t k = 0; k < m; ++k) {
        const double a1 = grad_u_[k];
        const double a2 = grad_u_[k + m];
        const double b1 = grad_w_[k];
        const double b2 = grad_w_[k + m];
        const double xi0 = std::hypot(a1, a2);
        const double xi1 = std::hypot(a1 + alpha * b1, a2 + alpha * b2);
        // xi1^2 - xi0^2 without cancellation.
        const double dsq = alpha * (b1 * (2.0 * a1 + alpha * b1) + b2 * (2.0 * a2 + alpha * b2));
        const double dxi = xi0 + xi1 > 0.0 ? dsq / (xi0 + xi1) : 0.0;

        double flow = 0.0;
        const double growth = xi0 > 0.0 ? std::expm1(p * std::log1p(dxi / xi0)) : 0.0;
        if (xi0 > 0.0 && std::isfinite(growth))
            flow = std::pow(xi0, p) * growth / p;
        else
            flow = (std::pow(xi1, p) - std::pow(xi0, p)) / p;

        const bool active0 = gamma * xi0 >= g;
        const bool active1 = gamma * xi1 >= g;
        double plastic = 0.0;
        if (active0 && active1)
            plastic = g * dxi;
        else if (!active0 && !active1)
            plastic = 0.5 * gamma * dsq;
        else
            plastic = huber_psi({a1 + alpha * b1, a2 + alpha * b2}, params_) -
                      huber_psi({a1, a2}, params_);
        const double term = areas_[k] * (flow + plastic);
        if (!std::isfinite(term))
            return term;
        sum.add(term);
    }
    sum.add(-alpha * load_w_);
    return sum.value();
}

} // namespace hbflow
