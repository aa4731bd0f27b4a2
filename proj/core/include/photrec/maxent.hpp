#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "photrec/photon_distribution.hpp"

namespace photrec {

// Which functionals of the number distribution are constrained: its first
// two moments, or the off probabilities of a set of on/off channels.
enum class ObservationLevel { moments, povm };

struct MaxEntOptions {
    double residual_tol = 1e-8; // max |constraint value - target| at convergence
    int max_iterations = 100;
    // Relative half-width (times the mean) of the band around the variance
    // boundary m2 = m1^2 treated as degenerate at the moments level.
    double boundary_tol = 1e-6;
    // A degenerate mean within this distance of an integer snaps to a Fock
    // state; otherwise the boundary point is unreachable and an error.
    double fock_snap_tol = 1e-3;
    // Truncation control at the moments level: grow the basis support until
    // the relative mass the family would add past the cutoff stays below
    // this. At the povm level the cutoff is fixed (it is part of the model).
    double tail_tol = kDefaultTailTol;
    std::size_t cutoff = 0; // 0 = choose from the targets
};

// Exponential-family state q_n = Z^{-1} exp(-sum_k lambda_k g_k(n)) on
// {0..cutoff}, solved so the constraint means hit their targets. Boundary
// cases where no finite multipliers exist are returned as an explicit
// point-mass / two-point snap instead (degenerate_snap, snap_probs).
struct MaxEntState {
    ObservationLevel level = ObservationLevel::moments;
    std::vector<double> multipliers;
    std::vector<double> targets;
    std::vector<double> efficiencies; // povm level: eta of each constraint
    std::size_t cutoff = 0;
    double log_partition = 0.0;
    std::vector<double> residuals;
    int iterations = 0;
    bool converged = false;
    // Moments level: a negative multiplier on the highest-order constraint
    // makes the untruncated family diverge; the cutoff then acts as the
    // regularizer and no support growth is attempted.
    bool negative_curvature = false;
    bool degenerate_snap = false;
    std::vector<double> snap_probs; // set iff degenerate_snap
    // Relative mass the family would place past the cutoff (diagnostic).
    double tail_bound = 0.0;
};

// The distribution the state represents (normalized on its support).
PhotonDistribution maxent_distribution(const MaxEntState& state);

// Constraint means <g_k> under the state's distribution.
std::vector<double> constraint_values(const MaxEntState& state);

// Analytic Jacobian d<g_k>/d lambda_j = -Cov(g_k, g_j), row-major K x K.
std::vector<std::vector<double>> constraint_jacobian(const MaxEntState& state);

// Maximum-entropy distribution with given first and second moments,
// q_n ~ exp(-l1 n - l2 n^2). The mean must be strictly positive
// (std::invalid_argument otherwise). Throws UnphysicalMomentsError when no
// distribution has such moments and NearDegenerateError on the variance
// boundary away from integer means.
MaxEntState solve_moments(double mean_photons, double second_moment,
                          const MaxEntOptions& options = {});

// Same with only the mean constrained; the solution is exactly thermal.
MaxEntState solve_single_moment(double mean_photons, const MaxEntOptions& options = {});

// One on/off channel as a constraint: <(1-eta)^n> = off_probability.
struct PovmChannel {
    Efficiency eta;
    double off_probability = 0.0;
};

// Maximum-entropy distribution reproducing the given off probabilities
// exactly (POVM observation level). Probabilities must lie strictly in
// (0, 1) and efficiencies must be pairwise distinct.
MaxEntState solve_povm(std::span<const PovmChannel> channels, const MaxEntOptions& options = {});

} // namespace photrec
