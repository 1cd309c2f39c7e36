// hbflow: Herschel-Bulkley pipe flow with a Huber-regularized yield term.
//
//   hbflow run --preset exp1-thinning
//   hbflow run --domain square --n 62 --p 1.5 --g 0.2 --f 3 --out runs/g02
//   hbflow sweep --preset exp2-thinning --g-values 0.1,0.2,0.3 --n-values 22,62,101
//   hbflow presets

#include "hbflow/errors.hpp"
#include "hbflow/run.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

/// Flags shared by `run` and `sweep`, kept as text so that flags, presets and
/// config files go through the same parser.
struct ManifestFlags {
    std::optional<std::string> preset;
    std::optional<std::string> config;
    struct Field {
        std::string key;
        std::string help;
        std::optional<std::string> value;
    };
    std::vector<Field> fields{
        {"domain", "square or disk", {}},
        {"n", "square: cells per side", {}},
        {"level", "disk: refinement level", {}},
        {"p", "flow index, > 1", {}},
        {"g", "plasticity threshold, > 0", {}},
        {"gamma", "Huber parameter, > 0", {}},
        {"epsilon", "shear-thinning preconditioner smoothing", {}},
        {"f", "constant right-hand side", {}},
        {"tol", "relative residual tolerance", {}},
        {"max-iters", "descent iteration limit", {}},
        {"sigma1", "Armijo constant", {}},
        {"gamma-start", "first continuation gamma", {}},
        {"gamma-factor", "continuation factor", {}},
        {"gamma-end", "last continuation gamma", {}},
        {"out", "output directory", {}},
    };
    bool continuation = false;
    bool no_continuation = false;

    void attach(CLI::App& app)
    {
        app.add_option("--preset", preset, "Experiment preset (see `hbflow presets`)");
        app.add_option("--config", config, "key = value file; flags override it");
        for (auto& field : fields)
            app.add_option("--" + field.key, field.value, field.help);
        auto* on = app.add_flag("--continuation", continuation, "Run the gamma continuation");
        app.add_flag("--no-continuation", no_continuation, "Single solve at --gamma")
            ->excludes(on);
    }

    /// preset < config file < flags
    hbflow::RunManifest resolve() const
    {
        hbflow::RunManifest manifest;
        hbflow::ConfigEntries file;
        if (config)
            file = hbflow::read_config_file(*config);
        if (preset) {
            manifest = hbflow::preset_manifest(*preset);
            std::erase_if(file, [](const auto& e) { return e.first == "preset"; });
        }
        hbflow::apply_config(manifest, file);
        for (const auto& field : fields)
            if (field.value)
                hbflow::apply_setting(manifest, field.key, *field.value);
        if (continuation)
            manifest.continuation = true;
        if (no_continuation)
            manifest.continuation = false;
        return manifest;
    }
};

int to_int(hbflow::ExitCode code)
{
    return static_cast<int>(code);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Preconditioned descent for p-Laplacian flows with a yield stress"};
    app.require_subcommand(1);

    ManifestFlags run_flags;
    auto* run_cmd = app.add_subcommand("run", "Solve one configuration and write its outputs");
    run_flags.attach(*run_cmd);

    ManifestFlags sweep_flags;
    hbflow::SweepGrid grid;
    std::vector<int> levels;
    auto* sweep_cmd = app.add_subcommand("sweep", "Run a parameter grid and aggregate the results");
    sweep_flags.attach(*sweep_cmd);
    sweep_cmd->add_option("--g-values", grid.g, "Grid axis over g")->delimiter(',');
    sweep_cmd->add_option("--p-values", grid.p, "Grid axis over p")->delimiter(',');
    sweep_cmd->add_option("--gamma-values", grid.gamma, "Grid axis over gamma")->delimiter(',');
    auto* n_axis = sweep_cmd->add_option("--n-values", grid.resolution, "Grid axis over n")
                       ->delimiter(',');
    sweep_cmd->add_option("--level-values", levels, "Grid axis over disk levels")
        ->delimiter(',')
        ->excludes(n_axis);

    auto* presets_cmd = app.add_subcommand("presets", "List the experiment presets");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : to_int(hbflow::ExitCode::config_error);
    }

    if (presets_cmd->parsed()) {
        for (const auto& name : hbflow::preset_names())
            std::cout << name << '\n';
        return 0;
    }

    try {
        if (run_cmd->parsed())
            return to_int(hbflow::run(run_flags.resolve(), std::cout));
        if (!levels.empty())
            grid.resolution = levels;
        return to_int(hbflow::sweep(sweep_flags.resolve(), grid, std::cout));
    } catch (const hbflow::IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return to_int(hbflow::ExitCode::io_error);
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return to_int(hbflow::ExitCode::config_error);
    }
}
