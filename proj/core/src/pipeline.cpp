#include "photrec/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "photrec/errors.hpp"
#include "photrec/metrics.hpp"

namespace photrec {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start)
{
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::vector<Efficiency> make_efficiencies(const std::vector<double>& values)
{
    std::vector<Efficiency> etas;
    etas.reserve(values.size());
    for (double v : values)
        etas.emplace_back(v);
    return etas;
}

} // namespace

PhotonDistribution StateSpec::realize(double tail_tol) const
{
    if (kind == "coherent")
        return coherent_distribution(mean_photons, tail_tol);
    if (kind == "thermal")
        return thermal_distribution(mean_photons, tail_tol);
    if (kind == "fock")
        return fock_distribution(fock_n);
    throw std::invalid_argument("unknown state kind '" + kind
                                + "' (expected coherent, thermal or fock)");
}

std::string to_string(EstimatorKind kind)
{
    return kind == EstimatorKind::two_step ? "two_step" : "full_povm";
}

EstimatorKind estimator_from_string(const std::string& name)
{
    if (name == "two_step")
        return EstimatorKind::two_step;
    if (name == "full_povm")
        return EstimatorKind::full_povm;
    throw std::invalid_argument("unknown estimator '" + name
                                + "' (expected two_step or full_povm)");
}

ExperimentDesign ExperimentConfig::design() const
{
    return ExperimentDesign(make_efficiencies(efficiencies), shots_per_channel, seed);
}

std::string to_string(PipelineStatus status)
{
    switch (status) {
    case PipelineStatus::ok:
        return "ok";
    case PipelineStatus::unphysical_moments:
        return "unphysical_moments";
    case PipelineStatus::not_converged:
        return "not_converged";
    }
    return "unknown";
}

ExperimentReport run_pipeline(const ExperimentConfig& config)
{
    const auto t_total = Clock::now();
    ExperimentReport report;
    report.config = config;

    const PhotonDistribution truth = config.state.realize(config.tail_tol);
    report.true_probs = truth.probabilities();

    // Stage one: on/off data, either sampled or synthesized exactly. In the
    // noiseless mode each frequency is set to the probability the chosen
    // estimator's own forward model assigns, so the inversion alone is probed.
    const auto t_sim = Clock::now();
    const ExperimentDesign design = config.design();
    std::vector<ChannelFrequency> channels;
    if (config.noiseless) {
        const double m1 = truth.moment(1);
        const double m2 = truth.moment(2);
        for (const auto& eta : design.efficiencies()) {
            const double f = config.estimator == EstimatorKind::two_step
                                 ? model_off_probability(m1, m2, eta)
                                 : truth.off_probability_exact(eta);
            channels.push_back(ChannelFrequency{eta, f});
            report.channels.push_back(
                ChannelSummary{eta.value(), design.shots_per_channel(), std::nullopt, f, false});
        }
    } else {
        report.rng_algorithm = rng_algorithm_description();
        for (const auto& rec : simulate_experiment(truth, design)) {
            channels.push_back(ChannelFrequency{rec.eta, rec.frequency()});
            report.channels.push_back(ChannelSummary{rec.eta.value(), rec.shots, rec.off_count,
                                                     rec.frequency(), false});
        }
    }
    report.timings.simulate_ms = ms_since(t_sim);

    // Stage two: invert the data into a number distribution.
    if (config.estimator == EstimatorKind::two_step) {
        const auto t_est = Clock::now();
        const MomentEstimate est = estimate_moments(channels, config.solver.moment);
        report.timings.estimate_ms = ms_since(t_est);
        report.estimate = est;

        if (!est.converged) {
            report.status = PipelineStatus::not_converged;
            report.note = "moment likelihood maximizer stopped at gradient norm "
                          + std::to_string(est.gradient_norm);
            report.timings.total_ms = ms_since(t_total);
            return report;
        }
        if (!physicality(est.mean_photons, est.second_moment,
                              config.solver.maxent.boundary_tol)) {
            report.status = PipelineStatus::unphysical_moments;
            report.note = "estimated moments have negative variance (second moment "
                          + std::to_string(est.second_moment) + " < square of mean "
                          + std::to_string(est.mean_photons) + ")";
            report.timings.total_ms = ms_since(t_total);
            return report;
        }

        const auto t_me = Clock::now();
        try {
            report.maxent =
                solve_moments(est.mean_photons, est.second_moment, config.solver.maxent);
        } catch (const UnphysicalMomentsError& e) {
            report.timings.maxent_ms = ms_since(t_me);
            report.status = PipelineStatus::unphysical_moments;
            report.note = e.what();
            report.timings.total_ms = ms_since(t_total);
            return report;
        } catch (const NearDegenerateError& e) {
            report.timings.maxent_ms = ms_since(t_me);
            report.status = PipelineStatus::not_converged;
            report.note = e.what();
            report.timings.total_ms = ms_since(t_total);
            return report;
        }
        report.timings.maxent_ms = ms_since(t_me);
    } else {
        // Full povm level: the off probabilities themselves are the
        // constraints. Channels at exactly 0 or 1 carry no invertible
        // information for the exponential family and are left out.
        std::vector<PovmChannel> povm;
        for (std::size_t i = 0; i < channels.size(); ++i) {
            const double f = channels[i].frequency;
            if (f > 0.0 && f < 1.0) {
                povm.push_back(PovmChannel{channels[i].eta, f});
            } else {
                report.channels[i].excluded = true;
            }
        }
        if (povm.empty()) {
            report.status = PipelineStatus::not_converged;
            report.note = "every channel frequency sits at 0 or 1; nothing to invert";
            report.timings.total_ms = ms_since(t_total);
            return report;
        }
        const auto t_me = Clock::now();
        report.maxent = solve_povm(povm, config.solver.maxent);
        report.timings.maxent_ms = ms_since(t_me);
    }

    if (!report.maxent->converged) {
        report.status = PipelineStatus::not_converged;
        report.note = "maximum-entropy solve stopped short of its residual tolerance";
        report.timings.total_ms = ms_since(t_total);
        return report;
    }

    // Stage three: score the reconstruction.
    const PhotonDistribution inferred = maxent_distribution(*report.maxent);
    report.inferred_probs = inferred.probabilities();
    report.fidelity = fidelity(truth, inferred);
    if (config.estimator == EstimatorKind::two_step) {
        const double m3 = inferred.moment(3);
        double worst = 0.0;
        for (const auto& eta : design.efficiencies())
            worst = std::max(worst, third_order_bias_bound(report.estimate->mean_photons,
                                                           report.estimate->second_moment, m3,
                                                           eta));
        report.model_bias_bound = worst;
    }
    report.status = PipelineStatus::ok;
    report.timings.total_ms = ms_since(t_total);
    return report;
}

RobustnessGrid robustness_sweep(const StateSpec& state, const GridSpec& grid,
                                const SolverConfig& solver, double tail_tol)
{
    if (grid.mean_offsets.empty() || grid.second_offsets.empty())
        throw std::invalid_argument("robustness grid needs at least one offset per axis");
    for (double d : grid.mean_offsets)
        if (!(std::abs(d) <= 0.5))
            throw std::invalid_argument("mean offsets beyond +-50% are not supported");
    for (double d : grid.second_offsets)
        if (!(std::abs(d) <= 0.5))
            throw std::invalid_argument("second-moment offsets beyond +-50% are not supported");

    const PhotonDistribution truth = state.realize(tail_tol);
    RobustnessGrid out;
    out.base_mean = truth.moment(1);
    out.base_second = truth.moment(2);
    out.mean_offsets = grid.mean_offsets;
    out.second_offsets = grid.second_offsets;
    out.cells.assign(grid.mean_offsets.size(),
                     std::vector<GridCell>(grid.second_offsets.size()));

    for (std::size_t i = 0; i < grid.mean_offsets.size(); ++i) {
        for (std::size_t j = 0; j < grid.second_offsets.size(); ++j) {
            const double m1 = out.base_mean * (1.0 + grid.mean_offsets[i]);
            const double m2 = out.base_second * (1.0 + grid.second_offsets[j]);
            GridCell& cell = out.cells[i][j];
            if (!physicality(m1, m2)) {
                continue; // masked: fidelity 0, physical false
            }
            cell.physical = true;
            try {
                const MaxEntState st = solve_moments(m1, m2, solver.maxent);
                cell.converged = st.converged;
                cell.fidelity = fidelity(truth, maxent_distribution(st));
            } catch (const UnphysicalMomentsError&) {
                cell.physical = false; // boundary-band rejection
            } catch (const NearDegenerateError&) {
                cell.converged = false;
            }
        }
    }
    return out;
}

SweepReport run_sweep(const ExperimentConfig& config)
{
    const auto t_total = Clock::now();
    SweepReport report;
    report.config = config;
    report.grid = robustness_sweep(config.state, config.sweep, config.solver, config.tail_tol);
    report.timings.total_ms = ms_since(t_total);
    return report;
}

} // namespace photrec
