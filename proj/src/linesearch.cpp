#include "hbflow/linesearch.hpp"

#include "hbflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace hbflow {

namespace {

void require_descent(double dphi0)
{
    if (!(dphi0 < 0.0))
        throw NotDescentDirection("line search: directional derivative " +
                                  std::to_string(dphi0) + " is not negative");
}

} // namespace

void LineSearchConfig::validate() const
{
    if (!(sigma1 > 0.0 && sigma1 < 0.5))
        throw InvalidArgument("line search: sigma1 must lie in (0, 1/2)");
    if (!(lower_factor > 0.0 && lower_factor < upper_factor && upper_factor < 1.0))
        throw InvalidArgument("line search: need 0 < lower_factor < upper_factor < 1");
    if (!(min_step > 0.0))
        throw InvalidArgument("line search: min_step must be positive");
    if (!(alpha0 > 0.0))
        throw InvalidArgument("line search: alpha0 must be positive");
    if (max_backtracks < 0)
        throw InvalidArgument("line search: max_backtracks must be nonnegative");
}

double quadratic_minimizer(double phi0, double dphi0, double phi1)
{
    return -dphi0 / (2.0 * (phi1 - phi0 - dphi0));
}

double quadratic_step(double phi0, double dphi0, double phi1, double lower, double upper)
{
    require_descent(dphi0);
    const double curvature = phi1 - phi0 - dphi0;
    // Nonpositive curvature only happens when the Armijo test passed at 1.
    if (!(curvature > 0.0))
        return upper;
    return std::clamp(quadratic_minimizer(phi0, dphi0, phi1), lower, upper);
}

CubicModel fit_cubic(double phi0, double dphi0, double alpha_p, double phi_p, double alpha_2p,
                     double phi_2p)
{
    if (alpha_p == alpha_2p)
        throw InvalidArgument("fit_cubic: trial steps coincide");
    const double r1 = phi_p - phi0 - dphi0 * alpha_p;
    const double r2 = phi_2p - phi0 - dphi0 * alpha_2p;
    const double a1 = alpha_p * alpha_p;
    const double a2 = alpha_2p * alpha_2p;
    const double scale = 1.0 / (alpha_p - alpha_2p);
    return {scale * (r1 / a1 - r2 / a2), scale * (-alpha_2p * r1 / a1 + alpha_p * r2 / a2)};
}

std::optional<double> cubic_minimizer(const CubicModel& model, double dphi0)
{
    if (std::abs(model.c) < 1e-14)
        return std::nullopt;
    const double disc = model.d * model.d - 3.0 * model.c * dphi0;
    if (disc < 0.0)
        return std::nullopt;
    return (-model.d + std::sqrt(disc)) / (3.0 * model.c);
}

double cubic_step(double phi0, double dphi0, double alpha_p, double phi_p, double alpha_2p,
                  double phi_2p, double lower, double upper)
{
    require_descent(dphi0);
    if (!(alpha_p > 0.0) || !(alpha_2p > 0.0))
        throw InvalidArgument("cubic_step: trial steps must be positive");
    const auto model = fit_cubic(phi0, dphi0, alpha_p, phi_p, alpha_2p, phi_2p);
    const auto minimizer = cubic_minimizer(model, dphi0);
    if (!minimizer || !std::isfinite(*minimizer))
        return upper * alpha_p;
    return std::clamp(*minimizer, lower * alpha_p, upper * alpha_p);
}

LineSearchResult backtracking_search(const std::function<double(double)>& phi, double phi0,
                                     double dphi0, const LineSearchConfig& config)
{
    config.validate();
    require_descent(dphi0);

    LineSearchResult result;
    auto evaluate = [&](double alpha) {
        const double value = phi(alpha);
        ++result.evaluations;
        result.trials.push_back(alpha);
        // +inf counts as a failed trial.
        if (std::isnan(value) || value == -std::numeric_limits<double>::infinity())
            throw EvaluationError("line search: objective is not finite at alpha = " +
                                  std::to_string(alpha));
        return value;
    };

    double alpha = config.alpha0;
    double value = evaluate(alpha);
    double alpha_prev = 0.0;
    double value_prev = 0.0;
    while (true) {
        // Equality with phi0 means the step is below the resolution of phi.
        if (value < phi0 && value <= phi0 + config.sigma1 * alpha * dphi0) {
            result.alpha = alpha;
            result.phi = value;
            result.backtracks = result.evaluations - 1;
            result.status = LineSearchStatus::accepted;
            return result;
        }
        double next = 0.0;
        if (result.evaluations == 1) {
            // Quadratic model in the scaled variable alpha / alpha0.
            const double s = config.alpha0;
            next = s * quadratic_step(phi0, dphi0 * s, value, config.lower_factor,
                                      config.upper_factor);
        } else {
            next = cubic_step(phi0, dphi0, alpha, value, alpha_prev, value_prev,
                              config.lower_factor, config.upper_factor);
        }
        if (result.evaluations - 1 >= config.max_backtracks || next < config.min_step) {
            result.alpha = alpha;
            result.phi = value;
            result.backtracks = result.evaluations - 1;
            result.status = LineSearchStatus::step_too_small;
            return result;
        }
        alpha_prev = alpha;
        value_prev = value;
        alpha = next;
        value = evaluate(alpha);
    }
}

} // namespace hbflow
