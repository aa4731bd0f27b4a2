#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "photrec/maxent.hpp"
#include "photrec/moment_maxlik.hpp"
#include "photrec/onoff.hpp"
#include "photrec/photon_distribution.hpp"

namespace photrec {

// Which state the simulated source prepares.
struct StateSpec {
    std::string kind;           // "coherent" | "thermal" | "fock"
    double mean_photons = 0.0;  // coherent / thermal
    std::size_t fock_n = 0;     // fock

    PhotonDistribution realize(double tail_tol = kDefaultTailTol) const;
};

enum class EstimatorKind {
    two_step,  // moment likelihood, then maximum entropy on the moments
    full_povm, // maximum entropy directly on the off probabilities
};

std::string to_string(EstimatorKind kind);
EstimatorKind estimator_from_string(const std::string& name);

struct SolverConfig {
    MomentSolverOptions moment;
    MaxEntOptions maxent;
};

// Relative perturbations applied to the true moments in a robustness sweep.
struct GridSpec {
    std::vector<double> mean_offsets = {-0.05, -0.025, 0.0, 0.025, 0.05};
    std::vector<double> second_offsets = {-0.05, -0.025, 0.0, 0.025, 0.05};
};

struct ExperimentConfig {
    StateSpec state;
    std::vector<double> efficiencies;
    std::int64_t shots_per_channel = 0;
    std::uint64_t seed = 0;
    EstimatorKind estimator = EstimatorKind::two_step;
    bool noiseless = false; // feed the estimator its own model's exact frequencies
    double tail_tol = kDefaultTailTol;
    SolverConfig solver;
    GridSpec sweep;
    // Where outputs go. Deliberately not part of the result identity: two
    // runs of the same config into different directories match byte for byte.
    std::string output_dir;

    ExperimentDesign design() const;
};

enum class PipelineStatus {
    ok,
    unphysical_moments, // estimated moments admit no distribution
    not_converged,      // a solver stopped without meeting its tolerance
};

std::string to_string(PipelineStatus status);

// Wall-clock stage costs. Written to a sidecar file, never into the report
// itself, so reports stay reproducible byte for byte.
struct StageTimings {
    double simulate_ms = 0.0;
    double estimate_ms = 0.0;
    double maxent_ms = 0.0;
    double total_ms = 0.0;
};

struct ChannelSummary {
    double eta = 0.0;
    std::int64_t shots = 0;
    std::optional<std::int64_t> off_count; // absent in noiseless runs
    double frequency = 0.0;
    bool excluded = false; // povm level skips channels with frequency 0 or 1
};

struct ExperimentReport {
    ExperimentConfig config;
    std::string rng_algorithm; // empty for noiseless runs
    std::vector<ChannelSummary> channels;
    std::vector<double> true_probs;
    std::optional<MomentEstimate> estimate; // two-step runs only
    std::optional<MaxEntState> maxent;
    std::vector<double> inferred_probs; // empty unless status == ok
    double fidelity = 0.0;
    // Worst-channel bound on the off-probability model truncation error,
    // evaluated with the moments of the inferred distribution.
    double model_bias_bound = 0.0;
    PipelineStatus status = PipelineStatus::ok;
    std::string note; // human-readable reason when status != ok
    StageTimings timings;
};

// Simulate (or synthesize), estimate, reconstruct, score. Configuration
// errors throw; statistical failure modes come back in the report status.
ExperimentReport run_pipeline(const ExperimentConfig& config);

struct GridCell {
    double fidelity = 0.0;
    bool physical = false;
    bool converged = false;
};

struct RobustnessGrid {
    double base_mean = 0.0;
    double base_second = 0.0;
    std::vector<double> mean_offsets;
    std::vector<double> second_offsets;
    // cells[i][j]: mean offset i, second-moment offset j. Unphysical cells
    // are masked with fidelity 0.
    std::vector<std::vector<GridCell>> cells;
};

struct SweepReport {
    ExperimentConfig config;
    RobustnessGrid grid;
    StageTimings timings;
};

// Fidelity of the reconstruction when the moment estimate is off by the
// given relative amounts: step one is bypassed and perturbed true moments
// go straight into the maximum-entropy solve. Offsets beyond +-50% are
// rejected.
RobustnessGrid robustness_sweep(const StateSpec& state, const GridSpec& grid,
                                const SolverConfig& solver, double tail_tol = kDefaultTailTol);

SweepReport run_sweep(const ExperimentConfig& config);

} // namespace photrec
