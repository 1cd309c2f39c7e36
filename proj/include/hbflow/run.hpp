#pragma once

#include "hbflow/mesh.hpp"
#include "hbflow/solver.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hbflow {

enum class Domain { square, disk };

const char* to_string(Domain domain);
Domain parse_domain(std::string_view text);

/**
 * Everything needed to reproduce one run.
 *
 * `resolution` is the number of cells per side for the square and the number
 * of refinements for the disk.
 */
struct RunManifest {
    Domain domain = Domain::square;
    int resolution = 16;
    SolverConfig solver;
    double f = 1.0;
    bool continuation = false;
    ContinuationSchedule schedule;
    std::filesystem::path out = "hbflow-out";
    std::optional<std::string> preset;

    /// Throws ConfigError or InvalidArgument.
    void validate() const;
};

enum class ExitCode : int {
    success = 0,
    nonconvergence = 1,
    config_error = 2,
    io_error = 3,
};

[[nodiscard]] std::vector<std::string> preset_names();

/// Throws ConfigError for an unknown name.
[[nodiscard]] RunManifest preset_manifest(std::string_view name);

/// Keys: domain, n, level, p, g, gamma, epsilon, f, tol, max-iters, sigma1,
/// continuation, out, preset. Setting `preset` replaces every other field.
void apply_setting(RunManifest& manifest, std::string_view key, std::string_view value);

using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

/// Parses `key = value` lines; blank lines and lines starting with '#' are skipped.
ConfigEntries read_config(std::istream& is);
/// Throws IoError when the file cannot be opened.
ConfigEntries read_config_file(const std::filesystem::path& path);

/// Applies a `preset` entry first, then the others in file order.
void apply_config(RunManifest& manifest, const ConfigEntries& entries);

[[nodiscard]] Mesh build_mesh(const RunManifest& manifest);

/// Result of the computation without any file output.
struct RunReport {
    std::vector<ContinuationStage> stages;
    std::size_t num_vertices = 0;
    std::size_t num_triangles = 0;
    std::size_t num_dofs = 0;
    double h = 0.0;
    double wall_time_s = 0.0;
    bool converged = false;
    /// Set when the solve raised instead of returning.
    std::string error;

    [[nodiscard]] const SolveOutcome* final_outcome() const
    {
        return stages.empty() ? nullptr : &stages.back().outcome;
    }
    [[nodiscard]] int total_iterations() const;
};

/// Runs one solve, or the continuation sequence, on `mesh`.
RunReport execute(const RunManifest& manifest, const Mesh& mesh);

/// Header "it,rel_residual,J,alpha,ls_iters"; one row per iteration.
void write_history_csv(std::ostream& os, const std::vector<IterationRecord>& history);

void write_summary_json(std::ostream& os, const RunManifest& manifest, const Mesh& mesh,
                        const RunReport& report);

/// Nodal u over all vertices, cell data grad_norm, active and multiplier_norm.
void write_solution_vtk(std::ostream& os, const Mesh& mesh, const SolveOutcome& outcome,
                        const HuberParams& params);

/**
 * Runs the manifest and writes into manifest.out:
 *   history.csv (or history_stage<i>.csv plus stages.csv with continuation),
 *   solution.vtk and summary.json.
 */
ExitCode run(const RunManifest& manifest, std::ostream& log);

/// Cartesian product over the axes that are set; no axis set means no points.
struct SweepGrid {
    std::vector<double> g;
    std::vector<double> p;
    std::vector<double> gamma;
    std::vector<int> resolution;

    [[nodiscard]] bool has_axes() const;
    [[nodiscard]] std::vector<RunManifest> expand(const RunManifest& base) const;
};

/// One run per grid point in out/point_<i>/ and the aggregate out/sweep.csv.
/// A failing point is recorded in the aggregate and the sweep moves on.
ExitCode sweep(const RunManifest& base, const SweepGrid& grid, std::ostream& log);

} // namespace hbflow
