// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "hbflow/assembly.hpp"
#include "hbflow/errors.hpp"
#include "hbflow/huber.hpp"
#include "hbflow/linesearch.hpp"
#include "hbflow/mesh.hpp"
#include "hbflow/solver.hpp"

#include "brute_force.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace hbflow;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

double rel_diff(double value, double reference)
{
    return std::abs(value - reference) / std::abs(reference);
}

/// Square mesh whose inscribed radius is closest to `h`.
int square_cells_for(double h)
{
    const double per_cell = (2.0 - std::sqrt(2.0)) / 2.0;
    const int n = static_cast<int>(std::floor(per_cell / h));
    const auto gap = [&](int k) { return std::abs(per_cell / k - h); };
    return gap(n) <= gap(n + 1) ? n : n + 1;
}

SolverConfig make_config(double p, double g, double gamma, int max_iters)
{
    SolverConfig config;
    config.params = {g, gamma, p, 1e-6};
    config.max_iters = max_iters;
    return config;
}

int max_backtracks(const SolveOutcome& out)
{
    int worst = 0;
    for (const auto& rec : out.history)
        worst = std::max(worst, rec.ls_iters);
    return worst;
}

bool monotone_objective(const SolveOutcome& out)
{
    for (std::size_t i = 1; i < out.history.size(); ++i)
        if (!(out.history[i].objective < out.history[i - 1].objective))
            return false;
    return true;
}

struct Verdict {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what)
    {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

std::string num(double x)
{
    std::ostringstream os;
    os << x;
    return os.str();
}

int failures = 0;

void report(int id, const char* title, Verdict& v)
{
    std::printf("criterion %2d %s  %s:%s\n", id, v.pass ? "PASS" : "FAIL", title,
                v.detail.str().c_str());
    std::fflush(stdout);
    if (!v.pass)
        ++failures;
}

// Every run of criteria 1 to 4 feeds the per-iteration checks of criteria 6 and 8.
struct RunLog {
    std::vector<std::pair<std::string, const SolveOutcome*>> runs;
    std::deque<SolveOutcome> owned_single;
    std::deque<std::vector<ContinuationStage>> owned_stages;
};

struct Criterion1 {
    Mesh mesh = build_unit_disk_mesh(0);
    SolveOutcome outcome;
    SolverConfig config;
};

Criterion1 criterion1()
{
    Criterion1 c;
    Verdict v;
    int level = 0;
    while (build_unit_disk_mesh(level).h() > 0.01)
        ++level;
    c.mesh = build_unit_disk_mesh(level);
    // The iteration cap sits far above the target count so the run reaches a
    // converged state for criterion 10 and the count itself is measured.
    c.config = make_config(1.75, 0.2, 1e3, 3000);
    const auto start = Clock::now();
    c.outcome = solve(c.mesh, c.config, 1.0);
    const double elapsed = seconds_since(start);

    const double j_ref = -0.029107;
    v.detail << " disk level " << level << " (h = " << c.mesh.h() << ", "
             << c.mesh.num_triangles() << " triangles), status "
             << to_string(c.outcome.status) << ", iterations " << c.outcome.iterations()
             << ", rel residual " << c.outcome.final_rel_residual << ", J "
             << c.outcome.final_objective << " (ref " << j_ref << ", rel diff "
             << rel_diff(c.outcome.final_objective, j_ref) << "), max backtracks "
             << max_backtracks(c.outcome) << ", time " << elapsed << " s";
    v.require(c.outcome.converged && c.outcome.final_rel_residual <= 1e-6, "converged to 1e-6");
    v.require(rel_diff(c.outcome.final_objective, j_ref) <= 0.03, "J within 3%");
    v.require(c.outcome.iterations() <= 20, "iterations <= 20");
    v.require(max_backtracks(c.outcome) <= 3, "backtracks <= 3");
    v.require(elapsed < 60.0, "runtime < 60 s");
    report(1, "shear-thinning disk, p = 1.75", v);
    return c;
}

void criterion2(RunLog& log)
{
    Verdict v;
    const double targets[] = {0.013, 0.005, 0.003};
    std::vector<int> cells;
    for (double h : targets)
        cells.push_back(square_cells_for(h));
    const auto start = Clock::now();
    double j_fine_g01 = 0.0;
    bool all_converged = true;
    for (double g : {0.1, 0.2, 0.3}) {
        std::vector<int> counts;
        for (std::size_t m = 0; m < cells.size(); ++m) {
            const Mesh mesh = build_unit_square_mesh(cells[m]);
            auto& out = log.owned_single.emplace_back(
                solve(mesh, make_config(1.5, g, 1e3, 1000), 3.0));
            counts.push_back(out.iterations());
            all_converged = all_converged && out.converged;
            if (g == 0.1 && m + 1 == cells.size())
                j_fine_g01 = out.final_objective;
        }
        const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
        v.detail << " g=" << g << ": iterations " << counts[0] << "/" << counts[1] << "/"
                 << counts[2] << ";";
        v.require(*hi - *lo <= 5, "iteration spread <= 5 at g = " + num(g));
    }
    const double elapsed = seconds_since(start);
    v.detail << " meshes n = " << cells[0] << "/" << cells[1] << "/" << cells[2]
             << ", finest J (g = 0.1) " << j_fine_g01 << " (ref -0.0416, rel diff "
             << rel_diff(j_fine_g01, -0.0416) << "), time " << elapsed << " s";
    v.require(all_converged, "every run converged");
    v.require(rel_diff(j_fine_g01, -0.0416) <= 0.05, "finest J within 5%");
    v.require(elapsed < 300.0, "runtime < 5 min");
    report(2, "mesh independence, p = 1.5", v);
}

void criterion3(RunLog& log)
{
    Verdict v;
    const int n = square_cells_for(0.003);
    const Mesh mesh = build_unit_square_mesh(n);
    const auto start = Clock::now();
    auto& out = log.owned_single.emplace_back(solve(mesh, make_config(4.0, 0.2, 1e3, 200), 3.0));
    const double j_ref = -0.18109;
    v.detail << " square n = " << n << " (h = " << mesh.h() << "), status "
             << to_string(out.status) << ", iterations " << out.iterations()
             << ", rel residual " << out.final_rel_residual << ", J " << out.final_objective
             << " (ref " << j_ref << ", rel diff " << rel_diff(out.final_objective, j_ref)
             << "), time " << seconds_since(start) << " s";
    v.require(out.converged, "converged");
    v.require(rel_diff(out.final_objective, j_ref) <= 0.03, "J within 3%");
    v.require(out.iterations() <= 16, "iterations <= 16");
    v.require(monotone_objective(out), "monotone J");
    report(3, "shear-thickening square, p = 4", v);
}

void criterion4(RunLog& log)
{
    Verdict v;
    const int n = 32;
    const int cap = 2000;
    const Mesh mesh = build_unit_square_mesh(n);
    const auto start = Clock::now();
    const double j_ref = -0.2343;
    bool any_match = false;
    v.detail << " square n = " << n << ", cap " << cap << " per solve;";
    for (double g : {0.3, 0.4}) {
        bool direct_failed = false;
        try {
            const SolveOutcome& direct = log.owned_single.emplace_back(
                solve(mesh, make_config(100.0, g, 1e6, cap), 3.0));
            direct_failed = !direct.converged;
            v.detail << " g=" << g << ": direct " << to_string(direct.status) << " (rel "
                     << direct.final_rel_residual << ")";
        } catch (const EvaluationError& e) {
            direct_failed = true;
            v.detail << " g=" << g << ": direct raised (" << e.what() << ")";
        }
        std::vector<ContinuationStage> none;
        const std::vector<ContinuationStage>* staged = &none;
        try {
            staged = &log.owned_stages.emplace_back(
                continuation_solve(mesh, make_config(100.0, g, 1e6, cap), 3.0));
        } catch (const EvaluationError& e) {
            v.detail << ", continuation raised (" << e.what() << ")";
        }
        const auto& stages = *staged;
        const bool completed = stages.size() == 6 && stages.back().outcome.converged;
        v.detail << ", continuation stages";
        for (const auto& s : stages)
            v.detail << " " << s.gamma << ":" << s.outcome.iterations()
                     << (s.outcome.converged ? "" : "*") << "/J=" << s.outcome.final_objective;
        v.detail << ";";

        bool stable = completed;
        for (const auto& s : stages)
            if (s.gamma >= 1e3 * (1 - 1e-12))
                stable = stable && rel_diff(s.outcome.final_objective, j_ref) <= 0.05;
        bool first_dominates = !stages.empty();
        for (std::size_t i = 1; i < stages.size(); ++i)
            first_dominates = first_dominates &&
                              stages[0].outcome.iterations() > stages[i].outcome.iterations();
        const std::string tag = " (g = " + num(g) + ")";
        v.require(direct_failed, "direct solve at gamma = 1e6 fails" + tag);
        v.require(completed, "continuation completes" + tag);
        v.require(first_dominates, "stage 1 needs the most iterations" + tag);
        any_match = any_match || stable;
    }
    v.detail << " time " << seconds_since(start) << " s";
    v.require(any_match, "stabilized J within 5% of -0.2343 for some g");
    report(4, "continuation, p = 100", v);
}

void criterion5()
{
    Verdict v;
    const Mesh mesh = build_unit_square_mesh(4);
    const DiscreteGradient grad(mesh);
    const Vector load = assemble_load_vector(mesh, 3.0);
    std::mt19937 rng(5);
    double worst = 0.0;
    for (double p : {1.5, 1.75, 2.0, 4.0, 10.0}) {
        const HuberParams params{0.2, 10.0, p, 1e-6};
        for (int trial = 0; trial < 20; ++trial) {
            // Kink at |grad u| = g / gamma = 0.02; states straddle it with a 20% margin.
            const Vector u = oracle::random_state(mesh, {p, 0.2, 10.0}, rng, 0.02, 0.2, 1e-2);
            const Vector exact = evaluate_gradient(mesh, grad, u, params, load);
            Vector fd(u.size());
            const double step = 1e-7;
            for (std::size_t i = 0; i < u.size(); ++i) {
                Vector plus = u;
                Vector minus = u;
                plus[i] += step;
                minus[i] -= step;
                fd[i] = (evaluate_objective(mesh, grad, plus, params, load) -
                         evaluate_objective(mesh, grad, minus, params, load)) /
                        (2.0 * step);
            }
            Vector diff = fd;
            axpy(-1.0, exact, diff);
            worst = std::max(worst, norm2(diff) / norm2(exact));
        }
    }
    v.detail << " square n = 4, 5 x 20 states, worst relative error " << worst;
    v.require(worst < 1e-5, "relative error < 1e-5");
    report(5, "gradient vs central differences", v);
}

void criterion6(const RunLog& log)
{
    Verdict v;
    std::size_t iterations = 0;
    double worst_identity = 0.0;
    std::size_t increases = 0;
    for (const auto& [name, out] : log.runs)
        for (const auto& rec : out->history) {
            ++iterations;
            worst_identity =
                std::max(worst_identity, std::abs(rec.directional_derivative +
                                                  rec.preconditioner_energy) /
                                             std::abs(rec.directional_derivative));
            if (!(rec.objective_change < 0.0))
                ++increases;
        }
    v.detail << " " << log.runs.size() << " runs, " << iterations
             << " iterations, worst identity error " << worst_identity
             << ", non-decreasing steps " << increases;
    v.require(iterations > 0, "iterations recorded");
    v.require(worst_identity <= 1e-8, "identity to 1e-8");
    v.require(increases == 0, "strict decrease");
    report(6, "descent identity", v);
}

void criterion7()
{
    Verdict v;
    const Mesh mesh = build_unit_square_mesh(16);
    const DiscreteGradient grad(mesh);
    const double gammas[] = {1e2, 1e3, 1e4};
    for (double p : {1.5, 4.0}) {
        const auto start = Clock::now();
        const auto stages = continuation_solve(mesh, make_config(p, 0.2, 1e6, 200000), 3.0);
        v.detail << " p=" << p << ": stages";
        for (const auto& s : stages)
            v.detail << " " << s.gamma << ":" << s.outcome.iterations()
                     << (s.outcome.converged ? "" : "*");
        const bool reference_ok = stages.size() == 6 && stages.back().outcome.converged;
        std::vector<double> errors;
        for (double gamma : gammas)
            for (const auto& s : stages)
                if (std::abs(s.gamma - gamma) <= 1e-9 * gamma && s.outcome.converged &&
                    reference_ok) {
                    Vector diff = s.outcome.u;
                    axpy(-1.0, stages.back().outcome.u, diff);
                    errors.push_back(w1p_seminorm(mesh, grad, diff, p));
                }
        const std::string tag = " (p = " + num(p) + ")";
        v.require(reference_ok, "converged gamma = 1e6 reference" + tag);
        if (errors.size() != 3) {
            v.require(false, "converged states at gamma = 1e2, 1e3, 1e4" + tag);
            v.detail << ", time " << seconds_since(start) << " s;";
            continue;
        }
        // Least-squares slope of log(error) against log(gamma).
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        for (int i = 0; i < 3; ++i) {
            const double x = std::log10(gammas[i]);
            const double y = std::log10(errors[i]);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        const double order = -(3.0 * sxy - sx * sy) / (3.0 * sxx - sx * sx);
        v.detail << ", errors " << errors[0] << "/" << errors[1] << "/" << errors[2]
                 << ", order " << order << " (need " << 1.0 / p - 0.2 << "), time "
                 << seconds_since(start) << " s;";
        v.require(order >= 1.0 / p - 0.2, "observed order" + tag);
    }
    report(7, "gamma convergence rate", v);
}

void criterion8(const RunLog& log, const LineSearchConfig& ls)
{
    Verdict v;
    const double tol = 1e-12;
    const auto near = [&](double a, double b) { return std::abs(a - b) <= tol; };
    const auto m3 = [](double a) { return a * a * a - 2.0 * a * a - a; };
    const CubicModel model = fit_cubic(0.0, -1.0, 0.5, m3(0.5), 1.0, m3(1.0));
    const auto raw = cubic_minimizer(model, -1.0);
    const auto q = [](double a) { return 3.0 * a * a - a; };
    const LineSearchResult example =
        backtracking_search([](double a) { return (a - 0.2) * (a - 0.2); }, 0.04, -0.4, ls);
    const LineSearchResult linear =
        backtracking_search([](double a) { return 1.0 - 2.0 * a; }, 1.0, -2.0, ls);

    bool units = near(quadratic_step(0.0, -1.0, 0.0), 0.5) &&
                 near(quadratic_step(0.0, -1.0, 1.0), 0.25) &&
                 near(quadratic_minimizer(0.0, -1.0, 100.0), 1.0 / 202.0) &&
                 near(quadratic_step(0.0, -1.0, 100.0), 0.1) && near(model.c, 1.0) &&
                 near(model.d, -2.0) && raw && near(*raw, (2.0 + std::sqrt(7.0)) / 3.0) &&
                 near(cubic_step(0.0, -1.0, 0.5, m3(0.5), 1.0, m3(1.0)), 0.25) &&
                 near(cubic_step(0.0, -1.0, 0.3, q(0.3), 1.0, q(1.0)), 0.15) &&
                 near(example.alpha, 0.2) && example.evaluations == 2 &&
                 linear.alpha == 1.0 && linear.evaluations == 1;

    std::size_t steps = 0;
    std::size_t armijo_violations = 0;
    std::size_t bound_violations = 0;
    for (const auto& [name, out] : log.runs)
        for (const auto& rec : out->history) {
            ++steps;
            if (!(rec.objective_change <= ls.sigma1 * rec.alpha * rec.directional_derivative))
                ++armijo_violations;
            const auto& t = rec.trial_steps;
            if (t.empty() || t.front() != ls.alpha0 || t.back() != rec.alpha)
                ++bound_violations;
            for (std::size_t i = 1; i < t.size(); ++i)
                if (t[i] < ls.lower_factor * t[i - 1] * (1 - 1e-15) ||
                    t[i] > ls.upper_factor * t[i - 1] * (1 + 1e-15))
                    ++bound_violations;
        }
    v.detail << " hand examples " << (units ? "reproduced" : "NOT reproduced") << ", " << steps
             << " accepted steps, Armijo violations " << armijo_violations
             << ", safeguard violations " << bound_violations;
    v.require(units, "hand examples to 1e-12");
    v.require(steps > 0 && armijo_violations == 0, "Armijo on every step");
    v.require(bound_violations == 0, "safeguards");
    report(8, "line search", v);
}

void criterion9()
{
    Verdict v;
    std::mt19937 rng(9);
    double worst = 0.0;
    int states = 0;
    for (int n : {2, 3}) {
        const Mesh mesh = build_unit_square_mesh(n);
        const DiscreteGradient grad(mesh);
        const Vector load = assemble_load_vector(mesh, 3.0);
        for (double p : {1.5, 2.0, 4.0}) {
            const HuberParams params{0.2, 10.0, p, 1e-6};
            const oracle::Params op{p, 0.2, 10.0};
            for (int trial = 0; trial < 50; ++trial, ++states) {
                const Vector u = oracle::random_state(mesh, op, rng, 0.05, 0.01, 0.0);
                const double j = evaluate_objective(mesh, grad, u, params, load);
                const double j_ref = oracle::objective(mesh, u, op, 3.0);
                worst = std::max(worst, std::abs(j - j_ref) / std::max(1.0, std::abs(j_ref)));
                const Vector d = evaluate_gradient(mesh, grad, u, params, load);
                const Vector d_ref = oracle::gradient(mesh, u, op, 3.0);
                for (std::size_t i = 0; i < d.size(); ++i)
                    worst = std::max(worst, std::abs(d[i] - d_ref[i]) /
                                                std::max(1.0, std::abs(d_ref[i])));
            }
        }
    }
    v.detail << " " << states << " states on square n = 2, 3, worst deviation " << worst;
    v.require(worst <= 1e-12, "agreement to 1e-12");
    report(9, "brute-force oracle equivalence", v);
}

void criterion10(const Criterion1& c1)
{
    Verdict v;
    const auto& out = c1.outcome;
    const double g = c1.config.params.g;
    const double max_norm = out.dual.max_multiplier_norm();
    bool center_inactive = true;
    int touching = 0;
    for (std::size_t k = 0; k < c1.mesh.num_triangles(); ++k)
        for (int vtx : c1.mesh.triangles()[k]) {
            const Point& x = c1.mesh.vertices()[vtx];
            if (x[0] == 0.0 && x[1] == 0.0) {
                ++touching;
                center_inactive = center_inactive && !out.dual.active[k];
            }
        }
    const int located = c1.mesh.locate({0.0, 0.0});
    v.detail << " criterion-1 run " << (out.converged ? "converged" : "not converged")
             << ", max |w| - g = " << max_norm - g << ", " << touching
             << " triangles at the origin, all inactive: " << (center_inactive ? "yes" : "no");
    v.require(out.converged, "converged state");
    v.require(max_norm <= g + 1e-10, "|w| <= g + 1e-10");
    v.require(located >= 0 && !out.dual.active[located] && center_inactive, "origin inactive");
    report(10, "dual feasibility and plug", v);
}

} // namespace

int main()
{
    const auto start = Clock::now();
    RunLog log;

    const Criterion1 c1 = criterion1();
    criterion2(log);
    criterion3(log);
    criterion4(log);

    log.runs.emplace_back("criterion 1", &c1.outcome);
    for (const auto& out : log.owned_single)
        log.runs.emplace_back("single", &out);
    for (const auto& stages : log.owned_stages)
        for (const auto& s : stages)
            log.runs.emplace_back("stage", &s.outcome);

    criterion5();
    criterion6(log);
    criterion7();
    criterion8(log, c1.config.line_search);
    criterion9();
    criterion10(c1);

    std::printf("%d of 10 criteria failed, total time %.1f s\n", failures, seconds_since(start));
    return failures == 0 ? 0 : 1;
}
