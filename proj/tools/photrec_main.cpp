// photrec: reconstruct photon-number distributions from on/off detector
// statistics taken at a handful of low quantum efficiencies.
//
// Exit codes: 0 success, 2 bad usage or configuration, 3 the estimated
// moments were unphysical, 4 a solver failed to converge, 1 anything else.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include "photrec/pipeline.hpp"
#include "photrec/report_io.hpp"
#include "photrec/selfcheck.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitUnphysical = 3;
constexpr int kExitNotConverged = 4;

struct RunArgs {
    std::string config_path;
    std::string output_dir = "out";
    std::string estimator;
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool noiseless = false;
    bool verbose = false;
};

void apply_overrides(photrec::ExperimentConfig& config, const RunArgs& args)
{
    if (args.seed_set)
        config.seed = args.seed;
    if (args.noiseless)
        config.noiseless = true;
    if (!args.estimator.empty())
        config.estimator = photrec::estimator_from_string(args.estimator);
    config.output_dir = args.output_dir;
}

void print_run_summary(const photrec::ExperimentReport& report, bool verbose)
{
    std::cout << "status: " << photrec::to_string(report.status) << "\n";
    if (!report.note.empty())
        std::cout << "note: " << report.note << "\n";
    if (report.estimate) {
        const auto& est = *report.estimate;
        const double q =
            (est.second_moment - est.mean_photons * est.mean_photons) / est.mean_photons - 1.0;
        std::printf("moments: mean %.6f, second %.6f (Mandel Q %+.4f), %d iterations\n",
                    est.mean_photons, est.second_moment, q, est.iterations);
    }
    if (report.maxent && verbose) {
        std::printf("maxent: cutoff %zu, %d iterations%s%s\n", report.maxent->cutoff,
                    report.maxent->iterations,
                    report.maxent->negative_curvature ? ", negative curvature" : "",
                    report.maxent->degenerate_snap ? ", boundary snap" : "");
    }
    if (report.status == photrec::PipelineStatus::ok) {
        std::printf("fidelity: %.6f\n", report.fidelity);
        if (verbose && report.model_bias_bound > 0.0)
            std::printf("model bias bound: %.3g\n", report.model_bias_bound);
    }
    if (verbose) {
        for (const auto& ch : report.channels)
            std::printf("channel eta=%.4f: frequency %.8f%s\n", ch.eta, ch.frequency,
                        ch.excluded ? " (excluded)" : "");
    }
}

int do_run(const RunArgs& args)
{
    auto config = photrec::load_config(args.config_path);
    apply_overrides(config, args);
    const auto report = photrec::run_pipeline(config);
    photrec::write_run_outputs(report, config.output_dir);
    print_run_summary(report, args.verbose);
    std::cout << "wrote " << (std::filesystem::path(config.output_dir) / "report.json").string()
              << "\n";
    switch (report.status) {
    case photrec::PipelineStatus::ok:
        return kExitOk;
    case photrec::PipelineStatus::unphysical_moments:
        return kExitUnphysical;
    case photrec::PipelineStatus::not_converged:
        return kExitNotConverged;
    }
    return kExitOk;
}

int do_sweep(const RunArgs& args, const std::vector<double>& offsets)
{
    auto config = photrec::load_config(args.config_path);
    apply_overrides(config, args);
    if (!offsets.empty()) {
        config.sweep.mean_offsets = offsets;
        config.sweep.second_offsets = offsets;
    }
    const auto report = photrec::run_sweep(config);
    photrec::write_sweep_outputs(report, config.output_dir);

    double fmin = 1.0, fmax = 0.0;
    std::size_t masked = 0, cells = 0;
    for (const auto& row : report.grid.cells) {
        for (const auto& cell : row) {
            ++cells;
            if (!cell.physical) {
                ++masked;
                continue;
            }
            fmin = std::min(fmin, cell.fidelity);
            fmax = std::max(fmax, cell.fidelity);
        }
    }
    std::printf("grid: %zu cells, %zu masked unphysical\n", cells, masked);
    if (masked < cells)
        std::printf("fidelity over physical cells: min %.6f, max %.6f\n", fmin, fmax);
    std::cout << "wrote "
              << (std::filesystem::path(config.output_dir) / "sweep_report.json").string() << "\n";
    return kExitOk;
}

int do_figures(const std::string& report_path, const std::string& output_dir)
{
    const auto loaded = photrec::load_report(report_path);
    const auto written = photrec::emit_figure_data(loaded, output_dir);
    std::cout << "wrote " << written.string() << "\n";
    return kExitOk;
}

int do_selfcheck(bool verbose)
{
    bool all_ok = true;
    for (const auto& check : photrec::run_selfchecks()) {
        all_ok = all_ok && check.passed;
        if (check.passed && !verbose) {
            std::printf("PASS %s\n", check.name.c_str());
        } else {
            std::printf("%s %s — %s\n", check.passed ? "PASS" : "FAIL", check.name.c_str(),
                        check.detail.c_str());
        }
    }
    return all_ok ? kExitOk : 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"photon-number reconstruction from on/off detector statistics"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "photrec 0.1.0");

    RunArgs args;
    std::vector<double> sweep_offsets;
    std::string report_path;

    auto* run = app.add_subcommand("run", "simulate one experiment and reconstruct the state");
    run->add_option("-c,--config", args.config_path, "experiment config (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    run->add_option("-o,--output-dir", args.output_dir, "where report and figure data go");
    run->add_option("--seed", args.seed, "override the design seed")
        ->each([&args](const std::string&) { args.seed_set = true; });
    run->add_flag("--noiseless", args.noiseless,
                  "replace sampled frequencies with the model's exact values");
    run->add_option("--estimator", args.estimator, "two_step or full_povm")
        ->check(CLI::IsMember({"two_step", "full_povm"}));
    run->add_flag("-v,--verbose", args.verbose, "per-channel and solver detail");

    auto* sweep = app.add_subcommand("sweep", "fidelity under mis-estimated moments");
    sweep->add_option("-c,--config", args.config_path, "experiment config (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    sweep->add_option("-o,--output-dir", args.output_dir, "where report and figure data go");
    sweep->add_option("--offsets", sweep_offsets,
                      "relative offsets applied to both moments (comma separated)")
        ->delimiter(',');
    sweep->add_flag("-v,--verbose", args.verbose, "per-channel and solver detail");

    auto* figures = app.add_subcommand("figures", "regenerate figure data from a report");
    figures->add_option("-r,--report", report_path, "report.json or sweep_report.json")
        ->required()
        ->check(CLI::ExistingFile);
    figures->add_option("-o,--output-dir", args.output_dir, "where figure data goes");

    auto* selfcheck = app.add_subcommand("selfcheck", "run the built-in oracle checks");
    selfcheck->add_flag("-v,--verbose", args.verbose, "print detail for passing checks too");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (run->parsed())
            return do_run(args);
        if (sweep->parsed())
            return do_sweep(args, sweep_offsets);
        if (figures->parsed())
            return do_figures(report_path, args.output_dir);
        return do_selfcheck(args.verbose);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
