#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "photrec/pipeline.hpp"

namespace photrec {

// Configuration files and reports are JSON; figure data is CSV. All text
// produced here is deterministic: the same report serializes to the same
// bytes on every run (timings are kept out, in a sidecar file).

ExperimentConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const ExperimentConfig& config);
ExperimentConfig load_config(const std::filesystem::path& path);

std::string report_to_json_text(const ExperimentReport& report);
ExperimentReport report_from_json_text(const std::string& text);

std::string sweep_report_to_json_text(const SweepReport& report);
SweepReport sweep_report_from_json_text(const std::string& text);

// Bar-plot data: one row per photon number with true and inferred weight.
std::string distribution_csv(const ExperimentReport& report);

// Heatmap data: one row per grid cell with offsets, perturbed moments,
// mask flags and fidelity.
std::string grid_csv(const RobustnessGrid& grid);

// report.json, distribution.csv (successful runs only) and timings.txt.
void write_run_outputs(const ExperimentReport& report, const std::filesystem::path& dir);

// sweep_report.json, robustness_grid.csv and timings.txt.
void write_sweep_outputs(const SweepReport& report, const std::filesystem::path& dir);

// Either kind of report, for regenerating figure data.
struct LoadedReport {
    std::optional<ExperimentReport> run;
    std::optional<SweepReport> sweep;
};
LoadedReport load_report(const std::filesystem::path& path);

// Regenerate the figure CSV for a loaded report into `dir` and return the
// path written: distribution.csv for a run report (which must have inferred
// a distribution), robustness_grid.csv for a sweep report.
std::filesystem::path emit_figure_data(const LoadedReport& report, const std::filesystem::path& dir);

} // namespace photrec
