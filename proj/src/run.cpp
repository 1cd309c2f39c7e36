#include "hbflow/run.hpp"

#include "hbflow/assembly.hpp"
#include "hbflow/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

namespace hbflow {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

/// Shortest round-trip decimal form.
std::string format_double(double x)
{
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    return {buf.data(), res.ptr};
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    return s;
}

double parse_double(std::string_view key, std::string_view text)
{
    text = trim(text);
    double value = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size() || !std::isfinite(value))
        throw ConfigError("'" + std::string(key) + "': not a finite number: '" +
                          std::string(text) + "'");
    return value;
}

int parse_int(std::string_view key, std::string_view text)
{
    text = trim(text);
    int value = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
        throw ConfigError("'" + std::string(key) + "': not an integer: '" + std::string(text) +
                          "'");
    return value;
}

bool parse_bool(std::string_view key, std::string_view text)
{
    text = trim(text);
    if (text == "true" || text == "on" || text == "1" || text == "yes")
        return true;
    if (text == "false" || text == "off" || text == "0" || text == "no")
        return false;
    throw ConfigError("'" + std::string(key) + "': not a boolean: '" + std::string(text) + "'");
}

Vector to_vertex_values(const Mesh& mesh, std::span<const double> u)
{
    Vector out(mesh.num_vertices(), 0.0);
    for (std::size_t d = 0; d < u.size(); ++d)
        out[mesh.vertex_of_dof(d)] = u[d];
    return out;
}

const char* status_string(const RunReport& report)
{
    if (!report.error.empty())
        return "error";
    const SolveOutcome* last = report.final_outcome();
    return last ? to_string(last->status) : "error";
}

json stage_json(const ContinuationStage& stage, const Mesh& mesh, const DiscreteGradient& grad,
                double p)
{
    const SolveOutcome& o = stage.outcome;
    json j;
    j["gamma"] = stage.gamma;
    j["status"] = to_string(o.status);
    j["converged"] = o.converged;
    j["iterations"] = o.iterations();
    j["final_J"] = o.final_objective;
    j["final_rel_residual"] = o.final_rel_residual;
    j["w1p_seminorm"] = w1p_seminorm(mesh, grad, o.u, p);
    j["lp_norm"] = lp_norm(mesh, o.u, p);
    return j;
}

void open_for_writing(std::ofstream& os, const fs::path& path)
{
    os.open(path, std::ios::out | std::ios::trunc);
    if (!os)
        throw IoError("cannot open '" + path.string() + "' for writing");
}

void ensure_directory(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw IoError("cannot create output directory '" + dir.string() + "'" +
                      (ec ? ": " + ec.message() : std::string{}));
}

void write_stages_csv(std::ostream& os, const Mesh& mesh, const DiscreteGradient& grad,
                      const RunReport& report, double p)
{
    os << "gamma,iterations,J,rel_residual,converged,w1p_seminorm,lp_norm\n";
    for (const auto& stage : report.stages) {
        const SolveOutcome& o = stage.outcome;
        os << format_double(stage.gamma) << ',' << o.iterations() << ','
           << format_double(o.final_objective) << ',' << format_double(o.final_rel_residual)
           << ',' << (o.converged ? 1 : 0) << ','
           << format_double(w1p_seminorm(mesh, grad, o.u, p)) << ','
           << format_double(lp_norm(mesh, o.u, p)) << '\n';
    }
}

ExitCode exit_code_for(const RunReport& report)
{
    return report.converged ? ExitCode::success : ExitCode::nonconvergence;
}

} // namespace

const char* to_string(Domain domain)
{
    return domain == Domain::disk ? "disk" : "square";
}

Domain parse_domain(std::string_view text)
{
    text = trim(text);
    if (text == "square")
        return Domain::square;
    if (text == "disk")
        return Domain::disk;
    throw ConfigError("unknown domain '" + std::string(text) + "' (expected square or disk)");
}

void RunManifest::validate() const
{
    if (domain == Domain::square && (resolution < 1 || resolution > 4096))
        throw ConfigError("square resolution n must lie in [1, 4096]");
    if (domain == Domain::disk && (resolution < 0 || resolution > 9))
        throw ConfigError("disk refinement level must lie in [0, 9]");
    if (!std::isfinite(f))
        throw ConfigError("f must be finite");
    if (out.empty())
        throw ConfigError("output directory must not be empty");
    solver.validate();
    if (continuation)
        (void)schedule.gammas();
}

std::vector<std::string> preset_names()
{
    return {"exp1-thinning", "exp2-thinning", "exp1-thickening", "exp2-thickening",
            "exp3-continuation"};
}

RunManifest preset_manifest(std::string_view name)
{
    RunManifest m;
    m.preset = std::string(name);
    m.out = std::string(name);
    auto& params = m.solver.params;
    params.gamma = 1e3;
    params.epsilon = 1e-6;
    if (name == "exp1-thinning") {
        m.domain = Domain::disk;
        m.resolution = 6;
        params.p = 1.75;
        params.g = 0.2;
        m.f = 1.0;
    } else if (name == "exp2-thinning") {
        m.domain = Domain::square;
        m.resolution = 101;
        params.p = 1.5;
        params.g = 0.1;
        m.f = 3.0;
    } else if (name == "exp1-thickening") {
        m.domain = Domain::square;
        m.resolution = 101;
        params.p = 4.0;
        params.g = 0.2;
        m.f = 3.0;
    } else if (name == "exp2-thickening") {
        m.domain = Domain::disk;
        m.resolution = 5;
        params.p = 10.0;
        params.g = 0.1;
        m.f = 1.0;
    } else if (name == "exp3-continuation") {
        m.domain = Domain::square;
        m.resolution = 32;
        params.p = 100.0;
        params.g = 0.3;
        m.f = 3.0;
        m.continuation = true;
        m.schedule = {10.0, 10.0, 1e6};
    } else {
        std::string known;
        for (const auto& n : preset_names())
            known += (known.empty() ? "" : ", ") + n;
        throw ConfigError("unknown preset '" + std::string(name) + "' (known: " + known + ")");
    }
    return m;
}

void apply_setting(RunManifest& m, std::string_view key, std::string_view value)
{
    key = trim(key);
    auto& params = m.solver.params;
    if (key == "preset")
        m = preset_manifest(trim(value));
    else if (key == "domain")
        m.domain = parse_domain(value);
    else if (key == "n" || key == "level")
        m.resolution = parse_int(key, value);
    else if (key == "p")
        params.p = parse_double(key, value);
    else if (key == "g")
        params.g = parse_double(key, value);
    else if (key == "gamma")
        params.gamma = parse_double(key, value);
    else if (key == "epsilon")
        params.epsilon = parse_double(key, value);
    else if (key == "f")
        m.f = parse_double(key, value);
    else if (key == "tol")
        m.solver.tol = parse_double(key, value);
    else if (key == "max-iters")
        m.solver.max_iters = parse_int(key, value);
    else if (key == "sigma1")
        m.solver.line_search.sigma1 = parse_double(key, value);
    else if (key == "continuation")
        m.continuation = parse_bool(key, value);
    else if (key == "gamma-start")
        m.schedule.gamma_start = parse_double(key, value);
    else if (key == "gamma-factor")
        m.schedule.factor = parse_double(key, value);
    else if (key == "gamma-end")
        m.schedule.gamma_end = parse_double(key, value);
    else if (key == "out")
        m.out = std::string(trim(value));
    else
        throw ConfigError("unknown configuration key '" + std::string(key) + "'");
}

ConfigEntries read_config(std::istream& is)
{
    ConfigEntries entries;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string_view text = trim(line);
        if (text.empty() || text.front() == '#')
            continue;
        const auto eq = text.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string_view key = trim(text.substr(0, eq));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        entries.emplace_back(std::string(key), std::string(trim(text.substr(eq + 1))));
    }
    return entries;
}

ConfigEntries read_config_file(const fs::path& path)
{
    std::ifstream is(path);
    if (!is)
        throw IoError("cannot open config file '" + path.string() + "'");
    return read_config(is);
}

void apply_config(RunManifest& manifest, const ConfigEntries& entries)
{
    for (const auto& [key, value] : entries)
        if (key == "preset")
            apply_setting(manifest, key, value);
    for (const auto& [key, value] : entries)
        if (key != "preset")
            apply_setting(manifest, key, value);
}

Mesh build_mesh(const RunManifest& manifest)
{
    return manifest.domain == Domain::disk ? build_unit_disk_mesh(manifest.resolution)
                                           : build_unit_square_mesh(manifest.resolution);
}

int RunReport::total_iterations() const
{
    int total = 0;
    for (const auto& s : stages)
        total += s.outcome.iterations();
    return total;
}

RunReport execute(const RunManifest& manifest, const Mesh& mesh)
{
    manifest.validate();
    RunReport report;
    report.num_vertices = mesh.num_vertices();
    report.num_triangles = mesh.num_triangles();
    report.num_dofs = mesh.num_dofs();
    report.h = mesh.h();

    const auto start = std::chrono::steady_clock::now();
    try {
        if (manifest.continuation) {
            report.stages = continuation_solve(mesh, manifest.solver, manifest.f, manifest.schedule);
        } else {
            report.stages.push_back(
                {manifest.solver.params.gamma, solve(mesh, manifest.solver, manifest.f)});
        }
        report.converged = !report.stages.empty() &&
                           std::all_of(report.stages.begin(), report.stages.end(),
                                       [](const auto& s) { return s.outcome.converged; });
    } catch (const SolverFailure& e) {
        report.error = std::string("linear solver: ") + e.what();
    } catch (const EvaluationError& e) {
        report.error = e.what();
    }
    report.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

void write_history_csv(std::ostream& os, const std::vector<IterationRecord>& history)
{
    os << "it,rel_residual,J,alpha,ls_iters\n";
    for (const auto& r : history)
        os << r.k << ',' << format_double(r.rel_residual) << ',' << format_double(r.objective)
           << ',' << format_double(r.alpha) << ',' << r.ls_iters << '\n';
}

void write_summary_json(std::ostream& os, const RunManifest& manifest, const Mesh& mesh,
                        const RunReport& report)
{
    const auto& params = manifest.solver.params;
    const SolveOutcome* last = report.final_outcome();
    const DiscreteGradient grad(mesh);

    json j;
    j["preset"] = manifest.preset ? json(*manifest.preset) : json(nullptr);
    j["domain"] = to_string(manifest.domain);
    j["resolution"] = manifest.resolution;
    j["p"] = params.p;
    j["g"] = params.g;
    j["gamma"] = last ? report.stages.back().gamma : params.gamma;
    j["epsilon"] = params.epsilon;
    j["f"] = manifest.f;
    j["tol"] = manifest.solver.tol;
    j["max_iters"] = manifest.solver.max_iters;
    j["sigma1"] = manifest.solver.line_search.sigma1;
    j["continuation"] = manifest.continuation;
    j["status"] = status_string(report);
    j["converged"] = report.converged;
    std::string diagnostic = report.error;
    if (diagnostic.empty() && last)
        diagnostic = last->diagnostic;
    j["diagnostic"] = diagnostic;
    j["iterations"] = last ? last->iterations() : 0;
    j["total_iterations"] = report.total_iterations();
    j["final_J"] = last ? json(last->final_objective) : json(nullptr);
    j["final_rel_residual"] = last ? json(last->final_rel_residual) : json(nullptr);
    j["initial_residual_norm"] = last ? json(last->initial_residual_norm) : json(nullptr);
    j["max_multiplier_norm"] = last ? json(last->dual.max_multiplier_norm()) : json(nullptr);
    j["w1p_seminorm"] = last ? json(w1p_seminorm(mesh, grad, last->u, params.p)) : json(nullptr);
    j["lp_norm"] = last ? json(lp_norm(mesh, last->u, params.p)) : json(nullptr);
    j["h"] = report.h;
    j["num_vertices"] = report.num_vertices;
    j["num_triangles"] = report.num_triangles;
    j["num_dofs"] = report.num_dofs;
    j["wall_time_s"] = report.wall_time_s;
    json stages = json::array();
    for (const auto& s : report.stages)
        stages.push_back(stage_json(s, mesh, grad, params.p));
    j["stages"] = std::move(stages);
    os << j.dump(2) << '\n';
}

void write_solution_vtk(std::ostream& os, const Mesh& mesh, const SolveOutcome& outcome,
                        const HuberParams& params)
{
    const Vector u = to_vertex_values(mesh, outcome.u);
    const Vector grad_norm = gradient_magnitudes(DiscreteGradient(mesh), outcome.u);
    DualField dual = outcome.dual;
    if (dual.multiplier.size() != mesh.num_triangles())
        dual = dual_field(DiscreteGradient(mesh), outcome.u, params);
    Vector active(dual.active.size());
    for (std::size_t k = 0; k < active.size(); ++k)
        active[k] = dual.active[k] ? 1.0 : 0.0;
    const Vector multiplier = dual.multiplier_norms();

    const std::array<ScalarField, 1> point_data{{{"u", u}}};
    const std::array<ScalarField, 3> cell_data{
        {{"grad_norm", grad_norm}, {"active", active}, {"multiplier_norm", multiplier}}};
    write_vtk(os, mesh, point_data, cell_data);
}

namespace {

ExitCode run_and_write(const RunManifest& manifest, std::ostream& log, RunReport& report)
{
    try {
        manifest.validate();
    } catch (const std::invalid_argument& e) {
        log << "configuration error: " << e.what() << '\n';
        return ExitCode::config_error;
    }

    try {
        ensure_directory(manifest.out);
        const Mesh mesh = build_mesh(manifest);
        log << "mesh: " << to_string(manifest.domain) << " resolution " << manifest.resolution
            << ", " << mesh.num_vertices() << " vertices, " << mesh.num_triangles()
            << " triangles, h = " << mesh.h() << '\n';

        report = execute(manifest, mesh);
        const auto& params = manifest.solver.params;

        if (manifest.continuation) {
            for (std::size_t i = 0; i < report.stages.size(); ++i) {
                std::ofstream csv;
                open_for_writing(csv, manifest.out / ("history_stage" + std::to_string(i) + ".csv"));
                write_history_csv(csv, report.stages[i].outcome.history);
            }
            std::ofstream csv;
            open_for_writing(csv, manifest.out / "stages.csv");
            write_stages_csv(csv, mesh, DiscreteGradient(mesh), report, params.p);
        } else if (const SolveOutcome* last = report.final_outcome()) {
            std::ofstream csv;
            open_for_writing(csv, manifest.out / "history.csv");
            write_history_csv(csv, last->history);
        }

        if (const SolveOutcome* last = report.final_outcome()) {
            std::ofstream vtk;
            open_for_writing(vtk, manifest.out / "solution.vtk");
            HuberParams final_params = params;
            final_params.gamma = report.stages.back().gamma;
            write_solution_vtk(vtk, mesh, *last, final_params);
        }

        std::ofstream summary;
        open_for_writing(summary, manifest.out / "summary.json");
        write_summary_json(summary, manifest, mesh, report);
        if (!summary)
            throw IoError("failed writing '" + (manifest.out / "summary.json").string() + "'");

        for (const auto& stage : report.stages)
            log << "gamma " << stage.gamma << ": " << to_string(stage.outcome.status) << " after "
                << stage.outcome.iterations() << " iterations, J = " << stage.outcome.final_objective
                << ", relative residual " << stage.outcome.final_rel_residual << '\n';
        if (!report.error.empty())
            log << "error: " << report.error << '\n';
        return exit_code_for(report);
    } catch (const IoError& e) {
        log << "I/O error: " << e.what() << '\n';
        return ExitCode::io_error;
    } catch (const std::invalid_argument& e) {
        log << "configuration error: " << e.what() << '\n';
        return ExitCode::config_error;
    }
}

} // namespace

ExitCode run(const RunManifest& manifest, std::ostream& log)
{
    RunReport report;
    return run_and_write(manifest, log, report);
}

bool SweepGrid::has_axes() const
{
    return !g.empty() || !p.empty() || !gamma.empty() || !resolution.empty();
}

std::vector<RunManifest> SweepGrid::expand(const RunManifest& base) const
{
    if (!has_axes())
        return {};
    const auto axis = [](const auto& values, auto fallback) {
        using T = decltype(fallback);
        return values.empty() ? std::vector<T>{fallback} : std::vector<T>(values.begin(), values.end());
    };
    const auto& params = base.solver.params;
    const auto gs = axis(g, params.g);
    const auto ps = axis(p, params.p);
    const auto gammas = axis(gamma, params.gamma);
    const auto resolutions = axis(resolution, base.resolution);

    std::vector<RunManifest> points;
    for (double gv : gs)
        for (double pv : ps)
            for (int res : resolutions)
                for (double gammav : gammas) {
                    RunManifest m = base;
                    m.solver.params.g = gv;
                    m.solver.params.p = pv;
                    m.solver.params.gamma = gammav;
                    m.resolution = res;
                    m.out = base.out / ("point_" + std::to_string(points.size()));
                    points.push_back(std::move(m));
                }
    return points;
}

ExitCode sweep(const RunManifest& base, const SweepGrid& grid, std::ostream& log)
{
    std::vector<RunManifest> points;
    try {
        points = grid.expand(base);
        for (const auto& m : points)
            m.validate();
    } catch (const std::invalid_argument& e) {
        log << "configuration error: " << e.what() << '\n';
        return ExitCode::config_error;
    }

    std::ostringstream table;
    table << "point,domain,resolution,p,g,gamma,stage_gamma,iterations,final_J,"
             "final_rel_residual,converged,status\n";
    bool all_converged = true;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const RunManifest& m = points[i];
        log << "point " << i << ": p = " << m.solver.params.p << ", g = " << m.solver.params.g
            << ", gamma = " << m.solver.params.gamma << ", resolution = " << m.resolution << '\n';
        RunReport report;
        const ExitCode code = run_and_write(m, log, report);
        if (code == ExitCode::io_error)
            return code;
        all_converged = all_converged && code == ExitCode::success;

        std::ostringstream prefix;
        prefix << i << ',' << to_string(m.domain) << ',' << m.resolution << ','
               << format_double(m.solver.params.p) << ',' << format_double(m.solver.params.g)
               << ',' << format_double(m.solver.params.gamma) << ',';
        if (report.stages.empty()) {
            table << prefix.str() << ",,,,0,error\n";
            continue;
        }
        for (const auto& stage : report.stages) {
            const SolveOutcome& o = stage.outcome;
            table << prefix.str() << format_double(stage.gamma) << ',' << o.iterations() << ','
                  << format_double(o.final_objective) << ','
                  << format_double(o.final_rel_residual) << ',' << (o.converged ? 1 : 0) << ','
                  << to_string(o.status) << '\n';
        }
    }

    try {
        ensure_directory(base.out);
        std::ofstream csv;
        open_for_writing(csv, base.out / "sweep.csv");
        csv << table.str();
        if (!csv)
            throw IoError("failed writing '" + (base.out / "sweep.csv").string() + "'");
    } catch (const IoError& e) {
        log << "I/O error: " << e.what() << '\n';
        return ExitCode::io_error;
    }
    return all_converged ? ExitCode::success : ExitCode::nonconvergence;
}

} // namespace hbflow
