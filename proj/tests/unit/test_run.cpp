#include "hbflow/errors.hpp"
#include "hbflow/run.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace hbflow;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("hbflow_test_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& path)
{
    std::ifstream is(path);
    std::stringstream buffer;
    buffer << is.rdbuf();
    return buffer.str();
}

nlohmann::json read_json(const fs::path& path)
{
    return nlohmann::json::parse(slurp(path));
}

RunManifest small_manifest(const fs::path& out)
{
    RunManifest m;
    m.domain = Domain::square;
    m.resolution = 8;
    m.solver.params = {0.1, 1e3, 1.5, 1e-6};
    m.solver.max_iters = 300;
    m.f = 3.0;
    m.out = out;
    return m;
}

int cli(const std::string& args)
{
    const std::string command = std::string(HBFLOW_CLI_PATH) + ' ' + args + " > /dev/null 2>&1";
    const int status = std::system(command.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST(Config, ParsesKeyValueLines)
{
    std::istringstream in("# comment\n\n  p = 1.75\ng=0.2 \n domain = disk\n");
    const ConfigEntries entries = read_config(in);
    ASSERT_EQ(entries.size(), 3u);
    EXPECT_EQ(entries[0], (std::pair<std::string, std::string>{"p", "1.75"}));
    EXPECT_EQ(entries[1], (std::pair<std::string, std::string>{"g", "0.2"}));
    EXPECT_EQ(entries[2], (std::pair<std::string, std::string>{"domain", "disk"}));
}

TEST(Config, MalformedLinesAreConfigErrors)
{
    std::istringstream no_equals("p 1.5\n");
    EXPECT_THROW(read_config(no_equals), ConfigError);
    std::istringstream no_key(" = 1.5\n");
    EXPECT_THROW(read_config(no_key), ConfigError);
    EXPECT_THROW(read_config_file("/nonexistent/hbflow.cfg"), IoError);
}

TEST(Config, ApplySettings)
{
    RunManifest m;
    apply_setting(m, "domain", "disk");
    apply_setting(m, "level", "3");
    apply_setting(m, "p", "1.75");
    apply_setting(m, "max-iters", "42");
    apply_setting(m, "continuation", "on");
    apply_setting(m, "gamma-end", "1e4");
    EXPECT_EQ(m.domain, Domain::disk);
    EXPECT_EQ(m.resolution, 3);
    EXPECT_EQ(m.solver.params.p, 1.75);
    EXPECT_EQ(m.solver.max_iters, 42);
    EXPECT_TRUE(m.continuation);
    EXPECT_EQ(m.schedule.gamma_end, 1e4);
    EXPECT_THROW(apply_setting(m, "colour", "red"), ConfigError);
    EXPECT_THROW(apply_setting(m, "p", "abc"), ConfigError);
    EXPECT_THROW(apply_setting(m, "n", "2.5"), ConfigError);
    EXPECT_THROW(apply_setting(m, "domain", "torus"), ConfigError);
    EXPECT_THROW(apply_setting(m, "continuation", "maybe"), ConfigError);
}

TEST(Config, PresetIsAppliedBeforeOtherEntries)
{
    RunManifest m;
    apply_config(m, {{"g", "0.3"}, {"preset", "exp1-thinning"}});
    EXPECT_EQ(m.preset, "exp1-thinning");
    EXPECT_EQ(m.domain, Domain::disk);
    EXPECT_EQ(m.solver.params.p, 1.75);
    EXPECT_EQ(m.solver.params.g, 0.3);
}

TEST(Presets, AllNamedPresetsResolve)
{
    const auto names = preset_names();
    ASSERT_EQ(names.size(), 5u);
    for (const auto& name : names) {
        const RunManifest m = preset_manifest(name);
        EXPECT_NO_THROW(m.validate()) << name;
        EXPECT_EQ(m.preset, name);
    }
    EXPECT_THROW(preset_manifest("exp9"), ConfigError);

    const RunManifest e1 = preset_manifest("exp1-thinning");
    EXPECT_EQ(e1.domain, Domain::disk);
    EXPECT_EQ(e1.solver.params.p, 1.75);
    EXPECT_EQ(e1.solver.params.g, 0.2);
    EXPECT_EQ(e1.solver.params.gamma, 1e3);
    EXPECT_EQ(e1.solver.params.epsilon, 1e-6);
    EXPECT_EQ(e1.f, 1.0);
    const RunManifest e4 = preset_manifest("exp1-thickening");
    EXPECT_EQ(e4.domain, Domain::square);
    EXPECT_EQ(e4.solver.params.p, 4.0);
    EXPECT_EQ(e4.f, 3.0);
    EXPECT_TRUE(preset_manifest("exp3-continuation").continuation);
}

TEST(Manifest, Validation)
{
    RunManifest m = small_manifest("out");
    EXPECT_NO_THROW(m.validate());
    m.resolution = 0;
    EXPECT_THROW(m.validate(), std::invalid_argument);
    m = small_manifest("out");
    m.solver.params.g = -1.0;
    EXPECT_THROW(m.validate(), std::invalid_argument);
    m = small_manifest("");
    EXPECT_THROW(m.validate(), std::invalid_argument);
}

TEST(Run, WritesOutputs)
{
    const fs::path dir = scratch_dir("outputs");
    std::ostringstream log;
    ASSERT_EQ(run(small_manifest(dir), log), ExitCode::success) << log.str();

    const std::string history = slurp(dir / "history.csv");
    EXPECT_EQ(history.rfind("it,rel_residual,J,alpha,ls_iters\n1,", 0), 0u);

    const std::string vtk = slurp(dir / "solution.vtk");
    EXPECT_NE(vtk.find("POINT_DATA 81\nSCALARS u double"), std::string::npos);
    EXPECT_NE(vtk.find("CELL_DATA 128\nSCALARS grad_norm double"), std::string::npos);
    EXPECT_NE(vtk.find("SCALARS active double"), std::string::npos);
    EXPECT_NE(vtk.find("SCALARS multiplier_norm double"), std::string::npos);

    const auto summary = read_json(dir / "summary.json");
    EXPECT_EQ(summary["status"], "converged");
    EXPECT_TRUE(summary["converged"].get<bool>());
    EXPECT_LE(summary["final_rel_residual"].get<double>(), 1e-6);
    EXPECT_LT(summary["final_J"].get<double>(), 0.0);
    EXPECT_EQ(summary["num_vertices"], 81);
    EXPECT_EQ(summary["num_triangles"], 128);
    EXPECT_EQ(summary["num_dofs"], 49);
    EXPECT_GT(summary["iterations"].get<int>(), 0);
    EXPECT_TRUE(summary.contains("wall_time_s"));
    EXPECT_TRUE(summary.contains("h"));
    fs::remove_all(dir);
}

TEST(Run, ZeroLoadSummary)
{
    const fs::path dir = scratch_dir("zero_load");
    RunManifest m = small_manifest(dir);
    m.f = 0.0;
    std::ostringstream log;
    ASSERT_EQ(run(m, log), ExitCode::success);
    const auto summary = read_json(dir / "summary.json");
    EXPECT_EQ(summary["iterations"], 0);
    EXPECT_EQ(summary["final_J"].get<double>(), 0.0);
    EXPECT_EQ(slurp(dir / "history.csv"), "it,rel_residual,J,alpha,ls_iters\n");
    fs::remove_all(dir);
}

TEST(Run, DeterministicOutputs)
{
    const fs::path a = scratch_dir("determinism_a");
    const fs::path b = scratch_dir("determinism_b");
    std::ostringstream log;
    RunManifest m = small_manifest(a);
    m.continuation = true;
    m.schedule = {10.0, 10.0, 1e3};
    ASSERT_EQ(run(m, log), ExitCode::success);
    m.out = b;
    ASSERT_EQ(run(m, log), ExitCode::success);
    for (const char* file : {"history_stage0.csv", "history_stage1.csv", "history_stage2.csv",
                             "stages.csv", "solution.vtk"})
        EXPECT_EQ(slurp(a / file), slurp(b / file)) << file;
    auto ja = read_json(a / "summary.json");
    auto jb = read_json(b / "summary.json");
    ja.erase("wall_time_s");
    jb.erase("wall_time_s");
    EXPECT_EQ(ja, jb);
    EXPECT_EQ(ja["stages"].size(), 3u);
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST(Run, NonconvergenceExitCode)
{
    const fs::path dir = scratch_dir("nonconvergence");
    RunManifest m = small_manifest(dir);
    m.solver.max_iters = 2;
    std::ostringstream log;
    EXPECT_EQ(run(m, log), ExitCode::nonconvergence);
    const auto summary = read_json(dir / "summary.json");
    EXPECT_EQ(summary["status"], "max_iterations");
    EXPECT_FALSE(summary["diagnostic"].get<std::string>().empty());
    fs::remove_all(dir);
}

TEST(Run, UnwritableOutputIsIoError)
{
    const fs::path dir = scratch_dir("blocker");
    fs::create_directories(dir);
    std::ofstream(dir / "file") << "x";
    std::ostringstream log;
    EXPECT_EQ(run(small_manifest(dir / "file" / "out"), log), ExitCode::io_error);
    EXPECT_NE(log.str().find("file"), std::string::npos);
    fs::remove_all(dir);
}

TEST(Sweep, EmptyGrid)
{
    const fs::path dir = scratch_dir("sweep_empty");
    std::ostringstream log;
    EXPECT_TRUE(SweepGrid{}.expand(small_manifest(dir)).empty());
    ASSERT_EQ(sweep(small_manifest(dir), SweepGrid{}, log), ExitCode::success);
    EXPECT_EQ(slurp(dir / "sweep.csv"),
              "point,domain,resolution,p,g,gamma,stage_gamma,iterations,final_J,"
              "final_rel_residual,converged,status\n");
    fs::remove_all(dir);
}

TEST(Sweep, CartesianProduct)
{
    const fs::path dir = scratch_dir("sweep_grid");
    SweepGrid grid;
    grid.g = {0.1, 0.2};
    grid.resolution = {4, 6};
    const auto points = grid.expand(small_manifest(dir));
    ASSERT_EQ(points.size(), 4u);
    EXPECT_EQ(points[1].solver.params.g, 0.1);
    EXPECT_EQ(points[1].resolution, 6);
    EXPECT_EQ(points[2].solver.params.g, 0.2);
    EXPECT_EQ(points[3].out, dir / "point_3");

    std::ostringstream log;
    ASSERT_EQ(sweep(small_manifest(dir), grid, log), ExitCode::success) << log.str();
    const std::string table = slurp(dir / "sweep.csv");
    EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 5);
    EXPECT_NE(table.find("\n3,square,6,1.5,0.2,1000,1000,"), std::string::npos);
    EXPECT_TRUE(fs::exists(dir / "point_2" / "summary.json"));
    fs::remove_all(dir);
}

TEST(Cli, ExitCodes)
{
    const fs::path dir = scratch_dir("cli");
    EXPECT_EQ(cli("presets"), 0);
    EXPECT_EQ(cli("--help"), 0);
    EXPECT_EQ(cli(""), 2);
    EXPECT_EQ(cli("run --bogus-flag 1"), 2);
    EXPECT_EQ(cli("run --preset nope --out " + dir.string()), 2);
    EXPECT_EQ(cli("run --p 0.5 --out " + dir.string()), 2);
    EXPECT_EQ(cli("run --config /nonexistent.cfg"), 3);
    EXPECT_EQ(cli("run --n 6 --p 1.5 --g 0.1 --f 3 --out " + dir.string()), 0);
    EXPECT_TRUE(fs::exists(dir / "summary.json"));
    EXPECT_EQ(cli("run --n 6 --p 1.5 --g 0.1 --f 3 --max-iters 1 --out " + dir.string()), 1);
    fs::remove_all(dir);
}

TEST(Cli, FlagsOverrideConfigFile)
{
    const fs::path dir = scratch_dir("cli_config");
    fs::create_directories(dir);
    std::ofstream(dir / "run.cfg") << "preset = exp2-thinning\nn = 6\ng = 0.3\nmax-iters = 400\n";
    const fs::path out = dir / "out";
    ASSERT_EQ(cli("run --config " + (dir / "run.cfg").string() + " --g 0.1 --out " + out.string()),
              0);
    const auto summary = read_json(out / "summary.json");
    EXPECT_EQ(summary["preset"], "exp2-thinning");
    EXPECT_EQ(summary["resolution"], 6);
    EXPECT_EQ(summary["g"].get<double>(), 0.1);
    EXPECT_EQ(summary["p"].get<double>(), 1.5);
    EXPECT_EQ(summary["max_iters"], 400);
    fs::remove_all(dir);
}

TEST(Cli, SweepWritesAggregate)
{
    const fs::path dir = scratch_dir("cli_sweep");
    ASSERT_EQ(cli("sweep --p 1.5 --f 3 --g-values 0.1,0.2 --n-values 4 --out " + dir.string()), 0);
    const std::string table = slurp(dir / "sweep.csv");
    EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 3);
    fs::remove_all(dir);
}
