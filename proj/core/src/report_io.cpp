#include "photrec/report_io.hpp"

#include <json.hpp>

#include <array>
#include <charconv>
#include <fstream>
#include <stdexcept>

namespace photrec {

namespace {

using ordered_json = nlohmann::ordered_json;

// Shortest round-trip decimal form; identical input bits give identical text.
std::string format_double(double v)
{
    std::array<char, 32> buf;
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path.string() + " for reading");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return text;
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << text;
    out.flush();
    if (!out)
        throw std::runtime_error("failed writing " + path.string());
}

std::string timings_text(const StageTimings& t)
{
    // Sidecar only: wall-clock values differ run to run and would break the
    // byte-for-byte reproducibility of report.json.
    std::string s;
    s += "simulate_ms " + format_double(t.simulate_ms) + "\n";
    s += "estimate_ms " + format_double(t.estimate_ms) + "\n";
    s += "maxent_ms " + format_double(t.maxent_ms) + "\n";
    s += "total_ms " + format_double(t.total_ms) + "\n";
    return s;
}

ordered_json config_to_json(const ExperimentConfig& cfg)
{
    ordered_json state;
    state["kind"] = cfg.state.kind;
    if (cfg.state.kind == "fock")
        state["n"] = cfg.state.fock_n;
    else
        state["mean_photons"] = cfg.state.mean_photons;

    ordered_json j;
    j["state"] = state;
    j["design"] = {{"efficiencies", cfg.efficiencies},
                   {"shots_per_channel", cfg.shots_per_channel},
                   {"seed", cfg.seed}};
    j["estimator"] = to_string(cfg.estimator);
    j["noiseless"] = cfg.noiseless;
    j["tail_tol"] = cfg.tail_tol;
    j["solver"] = {{"moment",
                    {{"gradient_tol", cfg.solver.moment.gradient_tol},
                     {"max_iterations", cfg.solver.moment.max_iterations}}},
                   {"maxent",
                    {{"residual_tol", cfg.solver.maxent.residual_tol},
                     {"max_iterations", cfg.solver.maxent.max_iterations},
                     {"boundary_tol", cfg.solver.maxent.boundary_tol},
                     {"fock_snap_tol", cfg.solver.maxent.fock_snap_tol},
                     {"tail_tol", cfg.solver.maxent.tail_tol},
                     {"cutoff", cfg.solver.maxent.cutoff}}}};
    j["sweep"] = {{"mean_offsets", cfg.sweep.mean_offsets},
                  {"second_offsets", cfg.sweep.second_offsets}};
    return j;
}

ExperimentConfig config_from_json(const ordered_json& j)
{
    ExperimentConfig cfg;
    const auto& state = j.at("state");
    cfg.state.kind = state.at("kind").get<std::string>();
    if (cfg.state.kind == "fock")
        cfg.state.fock_n = state.at("n").get<std::size_t>();
    else
        cfg.state.mean_photons = state.at("mean_photons").get<double>();

    const auto& design = j.at("design");
    cfg.efficiencies = design.at("efficiencies").get<std::vector<double>>();
    cfg.shots_per_channel = design.at("shots_per_channel").get<std::int64_t>();
    cfg.seed = design.value("seed", std::uint64_t{0});

    cfg.estimator = estimator_from_string(j.value("estimator", std::string("two_step")));
    cfg.noiseless = j.value("noiseless", false);
    cfg.tail_tol = j.value("tail_tol", kDefaultTailTol);

    if (j.contains("solver")) {
        const auto& solver = j.at("solver");
        if (solver.contains("moment")) {
            const auto& m = solver.at("moment");
            cfg.solver.moment.gradient_tol =
                m.value("gradient_tol", cfg.solver.moment.gradient_tol);
            cfg.solver.moment.max_iterations =
                m.value("max_iterations", cfg.solver.moment.max_iterations);
        }
        if (solver.contains("maxent")) {
            const auto& me = solver.at("maxent");
            auto& opt = cfg.solver.maxent;
            opt.residual_tol = me.value("residual_tol", opt.residual_tol);
            opt.max_iterations = me.value("max_iterations", opt.max_iterations);
            opt.boundary_tol = me.value("boundary_tol", opt.boundary_tol);
            opt.fock_snap_tol = me.value("fock_snap_tol", opt.fock_snap_tol);
            opt.tail_tol = me.value("tail_tol", opt.tail_tol);
            opt.cutoff = me.value("cutoff", opt.cutoff);
        }
    }
    if (j.contains("sweep")) {
        const auto& sweep = j.at("sweep");
        cfg.sweep.mean_offsets = sweep.value("mean_offsets", cfg.sweep.mean_offsets);
        cfg.sweep.second_offsets = sweep.value("second_offsets", cfg.sweep.second_offsets);
    }
    return cfg;
}

ordered_json estimate_to_json(const MomentEstimate& est)
{
    ordered_json j;
    j["mean_photons"] = est.mean_photons;
    j["second_moment"] = est.second_moment;
    // Derived, for readers of the report; parsing ignores it.
    j["mandel_q"] =
        (est.second_moment - est.mean_photons * est.mean_photons) / est.mean_photons - 1.0;
    j["log_likelihood"] = est.log_likelihood;
    j["gradient_norm"] = est.gradient_norm;
    j["iterations"] = est.iterations;
    j["converged"] = est.converged;
    return j;
}

MomentEstimate estimate_from_json(const ordered_json& j)
{
    MomentEstimate est;
    est.mean_photons = j.at("mean_photons").get<double>();
    est.second_moment = j.at("second_moment").get<double>();
    est.log_likelihood = j.at("log_likelihood").get<double>();
    est.gradient_norm = j.at("gradient_norm").get<double>();
    est.iterations = j.at("iterations").get<int>();
    est.converged = j.at("converged").get<bool>();
    return est;
}

ordered_json maxent_to_json(const MaxEntState& st)
{
    ordered_json j;
    j["level"] = st.level == ObservationLevel::povm ? "povm" : "moments";
    j["multipliers"] = st.multipliers;
    j["targets"] = st.targets;
    j["efficiencies"] = st.efficiencies;
    j["cutoff"] = st.cutoff;
    j["log_partition"] = st.log_partition;
    j["residuals"] = st.residuals;
    j["iterations"] = st.iterations;
    j["converged"] = st.converged;
    j["negative_curvature"] = st.negative_curvature;
    j["degenerate_snap"] = st.degenerate_snap;
    j["snap_probs"] = st.snap_probs;
    j["tail_bound"] = st.tail_bound;
    return j;
}

MaxEntState maxent_from_json(const ordered_json& j)
{
    MaxEntState st;
    st.level = j.at("level").get<std::string>() == "povm" ? ObservationLevel::povm
                                                          : ObservationLevel::moments;
    st.multipliers = j.at("multipliers").get<std::vector<double>>();
    st.targets = j.at("targets").get<std::vector<double>>();
    st.efficiencies = j.at("efficiencies").get<std::vector<double>>();
    st.cutoff = j.at("cutoff").get<std::size_t>();
    st.log_partition = j.at("log_partition").get<double>();
    st.residuals = j.at("residuals").get<std::vector<double>>();
    st.iterations = j.at("iterations").get<int>();
    st.converged = j.at("converged").get<bool>();
    st.negative_curvature = j.at("negative_curvature").get<bool>();
    st.degenerate_snap = j.at("degenerate_snap").get<bool>();
    st.snap_probs = j.at("snap_probs").get<std::vector<double>>();
    st.tail_bound = j.at("tail_bound").get<double>();
    return st;
}

ordered_json grid_to_json(const RobustnessGrid& grid)
{
    ordered_json j;
    j["base_mean"] = grid.base_mean;
    j["base_second"] = grid.base_second;
    j["mean_offsets"] = grid.mean_offsets;
    j["second_offsets"] = grid.second_offsets;
    ordered_json cells = ordered_json::array();
    for (const auto& row : grid.cells) {
        ordered_json jrow = ordered_json::array();
        for (const auto& cell : row) {
            jrow.push_back({{"fidelity", cell.fidelity},
                            {"physical", cell.physical},
                            {"converged", cell.converged}});
        }
        cells.push_back(jrow);
    }
    j["cells"] = cells;
    return j;
}

RobustnessGrid grid_from_json(const ordered_json& j)
{
    RobustnessGrid grid;
    grid.base_mean = j.at("base_mean").get<double>();
    grid.base_second = j.at("base_second").get<double>();
    grid.mean_offsets = j.at("mean_offsets").get<std::vector<double>>();
    grid.second_offsets = j.at("second_offsets").get<std::vector<double>>();
    for (const auto& jrow : j.at("cells")) {
        std::vector<GridCell> row;
        for (const auto& jc : jrow) {
            GridCell cell;
            cell.fidelity = jc.at("fidelity").get<double>();
            cell.physical = jc.at("physical").get<bool>();
            cell.converged = jc.at("converged").get<bool>();
            row.push_back(cell);
        }
        grid.cells.push_back(std::move(row));
    }
    return grid;
}

} // namespace

ExperimentConfig config_from_json_text(const std::string& text)
{
    return config_from_json(ordered_json::parse(text));
}

std::string config_to_json_text(const ExperimentConfig& config)
{
    return config_to_json(config).dump(2) + "\n";
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    try {
        return config_from_json_text(read_text(path));
    } catch (const ordered_json::exception& e) {
        throw std::invalid_argument("invalid config " + path.string() + ": " + e.what());
    }
}

std::string report_to_json_text(const ExperimentReport& report)
{
    ordered_json j;
    j["format"] = "photrec-run-report";
    j["version"] = 1;
    j["config"] = config_to_json(report.config);
    j["status"] = to_string(report.status);
    j["note"] = report.note;
    j["rng_algorithm"] = report.rng_algorithm;

    ordered_json channels = ordered_json::array();
    for (const auto& ch : report.channels) {
        ordered_json jc;
        jc["eta"] = ch.eta;
        jc["shots"] = ch.shots;
        jc["off_count"] = ch.off_count ? ordered_json(*ch.off_count) : ordered_json(nullptr);
        jc["frequency"] = ch.frequency;
        jc["excluded"] = ch.excluded;
        channels.push_back(jc);
    }
    j["channels"] = channels;

    j["estimate"] = report.estimate ? estimate_to_json(*report.estimate) : ordered_json(nullptr);
    j["maxent"] = report.maxent ? maxent_to_json(*report.maxent) : ordered_json(nullptr);
    j["true_distribution"] = report.true_probs;
    j["inferred_distribution"] = report.inferred_probs;
    j["fidelity"] = report.fidelity;
    j["model_bias_bound"] = report.model_bias_bound;
    return j.dump(2) + "\n";
}

ExperimentReport report_from_json_text(const std::string& text)
{
    const ordered_json j = ordered_json::parse(text);
    if (j.value("format", std::string()) != "photrec-run-report")
        throw std::invalid_argument("not a run report");
    ExperimentReport report;
    report.config = config_from_json(j.at("config"));
    const std::string status = j.at("status").get<std::string>();
    if (status == "ok")
        report.status = PipelineStatus::ok;
    else if (status == "unphysical_moments")
        report.status = PipelineStatus::unphysical_moments;
    else if (status == "not_converged")
        report.status = PipelineStatus::not_converged;
    else
        throw std::invalid_argument("unknown report status '" + status + "'");
    report.note = j.at("note").get<std::string>();
    report.rng_algorithm = j.at("rng_algorithm").get<std::string>();
    for (const auto& jc : j.at("channels")) {
        ChannelSummary ch;
        ch.eta = jc.at("eta").get<double>();
        ch.shots = jc.at("shots").get<std::int64_t>();
        if (!jc.at("off_count").is_null())
            ch.off_count = jc.at("off_count").get<std::int64_t>();
        ch.frequency = jc.at("frequency").get<double>();
        ch.excluded = jc.at("excluded").get<bool>();
        report.channels.push_back(ch);
    }
    if (!j.at("estimate").is_null())
        report.estimate = estimate_from_json(j.at("estimate"));
    if (!j.at("maxent").is_null())
        report.maxent = maxent_from_json(j.at("maxent"));
    report.true_probs = j.at("true_distribution").get<std::vector<double>>();
    report.inferred_probs = j.at("inferred_distribution").get<std::vector<double>>();
    report.fidelity = j.at("fidelity").get<double>();
    report.model_bias_bound = j.at("model_bias_bound").get<double>();
    return report;
}

std::string sweep_report_to_json_text(const SweepReport& report)
{
    ordered_json j;
    j["format"] = "photrec-sweep-report";
    j["version"] = 1;
    j["config"] = config_to_json(report.config);
    j["grid"] = grid_to_json(report.grid);
    return j.dump(2) + "\n";
}

SweepReport sweep_report_from_json_text(const std::string& text)
{
    const ordered_json j = ordered_json::parse(text);
    if (j.value("format", std::string()) != "photrec-sweep-report")
        throw std::invalid_argument("not a sweep report");
    SweepReport report;
    report.config = config_from_json(j.at("config"));
    report.grid = grid_from_json(j.at("grid"));
    return report;
}

std::string distribution_csv(const ExperimentReport& report)
{
    std::string out = "n,true_prob,inferred_prob\n";
    const std::size_t rows = std::max(report.true_probs.size(), report.inferred_probs.size());
    for (std::size_t n = 0; n < rows; ++n) {
        const double t = n < report.true_probs.size() ? report.true_probs[n] : 0.0;
        const double q = n < report.inferred_probs.size() ? report.inferred_probs[n] : 0.0;
        out += std::to_string(n) + "," + format_double(t) + "," + format_double(q) + "\n";
    }
    return out;
}

std::string grid_csv(const RobustnessGrid& grid)
{
    std::string out = "mean_offset,second_offset,mean,second_moment,physical,converged,fidelity\n";
    for (std::size_t i = 0; i < grid.mean_offsets.size(); ++i) {
        for (std::size_t j = 0; j < grid.second_offsets.size(); ++j) {
            const GridCell& cell = grid.cells[i][j];
            out += format_double(grid.mean_offsets[i]) + ",";
            out += format_double(grid.second_offsets[j]) + ",";
            out += format_double(grid.base_mean * (1.0 + grid.mean_offsets[i])) + ",";
            out += format_double(grid.base_second * (1.0 + grid.second_offsets[j])) + ",";
            out += std::string(cell.physical ? "1" : "0") + ",";
            out += std::string(cell.converged ? "1" : "0") + ",";
            out += format_double(cell.fidelity) + "\n";
        }
    }
    return out;
}

void write_run_outputs(const ExperimentReport& report, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    write_text(dir / "report.json", report_to_json_text(report));
    if (report.status == PipelineStatus::ok)
        write_text(dir / "distribution.csv", distribution_csv(report));
    write_text(dir / "timings.txt", timings_text(report.timings));
}

void write_sweep_outputs(const SweepReport& report, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    write_text(dir / "sweep_report.json", sweep_report_to_json_text(report));
    write_text(dir / "robustness_grid.csv", grid_csv(report.grid));
    write_text(dir / "timings.txt", timings_text(report.timings));
}

LoadedReport load_report(const std::filesystem::path& path)
{
    const std::string text = read_text(path);
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const ordered_json::exception& e) {
        throw std::invalid_argument("invalid report " + path.string() + ": " + e.what());
    }
    const std::string format = j.value("format", std::string());
    LoadedReport loaded;
    if (format == "photrec-run-report")
        loaded.run = report_from_json_text(text);
    else if (format == "photrec-sweep-report")
        loaded.sweep = sweep_report_from_json_text(text);
    else
        throw std::invalid_argument(path.string() + " is not a photrec report");
    return loaded;
}

std::filesystem::path emit_figure_data(const LoadedReport& report, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    if (report.run) {
        if (report.run->status != PipelineStatus::ok || report.run->inferred_probs.empty())
            throw std::invalid_argument(
                "run report has no inferred distribution (status was not ok); nothing to plot");
        const auto path = dir / "distribution.csv";
        write_text(path, distribution_csv(*report.run));
        return path;
    }
    if (report.sweep) {
        const auto path = dir / "robustness_grid.csv";
        write_text(path, grid_csv(report.sweep->grid));
        return path;
    }
    throw std::invalid_argument("empty report: neither run nor sweep data present");
}

} // namespace photrec
