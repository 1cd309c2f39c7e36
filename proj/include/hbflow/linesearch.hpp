#pragma once

#include <functional>
#include <optional>
#include <vector>

namespace hbflow {

struct LineSearchConfig {
    double sigma1 = 1e-4;       ///< sufficient-decrease constant, in (0, 1/2)
    double alpha0 = 1.0;        ///< first trial step
    double lower_factor = 0.1;  ///< each backtrack keeps at least this fraction
    double upper_factor = 0.5;  ///< and at most this fraction of the previous trial
    double min_step = 1e-12;
    int max_backtracks = 30;

    void validate() const;
};

enum class LineSearchStatus { accepted, step_too_small };

struct LineSearchResult {
    double alpha = 0.0;
    double phi = 0.0;            ///< objective at alpha
    int evaluations = 0;         ///< objective evaluations, the trial at alpha0 included
    int backtracks = 0;          ///< evaluations - 1
    LineSearchStatus status = LineSearchStatus::accepted;
    std::vector<double> trials;  ///< every step tried, in order
};

/// Stationary point of the quadratic through phi(0), phi'(0), phi(1), unclamped.
double quadratic_minimizer(double phi0, double dphi0, double phi1);

/// First backtrack: quadratic_minimizer clamped to [lower, upper].
/// Throws NotDescentDirection if dphi0 >= 0.
double quadratic_step(double phi0, double dphi0, double phi1, double lower = 0.1,
                      double upper = 0.5);

struct CubicModel {
    double c = 0.0; ///< alpha^3 coefficient
    double d = 0.0; ///< alpha^2 coefficient
};

/// Cubic c a^3 + d a^2 + phi'(0) a + phi(0) interpolating the last two trials.
CubicModel fit_cubic(double phi0, double dphi0, double alpha_p, double phi_p, double alpha_2p,
                     double phi_2p);

/// Local minimizer of the cubic model; empty if the model is degenerate
/// (|c| < 1e-14) or its derivative has no real root.
std::optional<double> cubic_minimizer(const CubicModel& model, double dphi0);

/// Later backtracks: cubic minimizer clamped to [lower alpha_p, upper alpha_p],
/// or upper * alpha_p when no minimizer exists.
double cubic_step(double phi0, double dphi0, double alpha_p, double phi_p, double alpha_2p,
                  double phi_2p, double lower = 0.1, double upper = 0.5);

/**
 * Backtracking on phi(alpha) = J(u + alpha w) with quadratic, then cubic,
 * interpolation. Only the sufficient-decrease (Armijo) condition is enforced,
 * together with phi(alpha) < phi0.
 *
 * Throws NotDescentDirection when dphi0 >= 0 and EvaluationError when phi
 * returns NaN or -Inf. A trial returning +Inf is rejected and backtracked.
 */
LineSearchResult backtracking_search(const std::function<double(double)>& phi, double phi0,
                                     double dphi0, const LineSearchConfig& config = {});

} // namespace hbflow
