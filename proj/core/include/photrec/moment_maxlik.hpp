#pragma once

#include <array>
#include <span>
#include <vector>

#include "photrec/onoff.hpp"
#include "photrec/photon_distribution.hpp"

namespace photrec {

// What the likelihood actually consumes from a channel: its efficiency and
// the observed (or, in noiseless runs, synthetic real-valued) off frequency.
struct ChannelFrequency {
    Efficiency eta;
    double frequency = 0.0;
};

std::vector<ChannelFrequency> to_frequencies(std::span<const OnOffRecord> records);

// Second-order small-eta model of the off probability,
//   p(eta) = 1 - m1 (eta + eta^2/2) + m2 eta^2/2,
// valid when eta^3 contributions are negligible. Throws ModelRangeError if
// the candidate moments push p outside (0, 1]; the closed top end admits
// the vacuum point m1 = m2 = 0, where p is exactly 1.
double model_off_probability(double mean_photons, double second_moment, Efficiency eta);

// Bound on the model truncation error |p_exact - p_model| from the leading
// neglected term: |m3 - 3 m2 + 2 m1| eta^3 / 6. Diagnostic only; the model
// above is what the estimator fits.
double third_order_bias_bound(double mean_photons, double second_moment, double third_moment,
                              Efficiency eta);

// Bernoulli log-likelihood per shot, summed over channels:
//   sum_nu [ f_nu log p_nu + (1 - f_nu) log(1 - p_nu) ].
// Terms with zero weight are dropped, so f = 0 and f = 1 are fine, but the
// model p_nu themselves must stay strictly inside (0, 1) or the weights
// become singular; ModelRangeError otherwise.
double normalized_log_likelihood(std::span<const ChannelFrequency> channels, double mean_photons,
                                 double second_moment);
double normalized_log_likelihood(std::span<const OnOffRecord> records, double mean_photons,
                                 double second_moment);

// Gradient of the above in (mean_photons, second_moment).
std::array<double, 2> likelihood_gradient(std::span<const ChannelFrequency> channels,
                                          double mean_photons, double second_moment);
std::array<double, 2> likelihood_gradient(std::span<const OnOffRecord> records,
                                          double mean_photons, double second_moment);

struct MomentSolverOptions {
    // The likelihood is extremely flat along the second moment (the small-eta
    // design barely constrains it), so a loose gradient leaves a visible
    // parameter error: keep this tight, Newton gets there in a step or two.
    double gradient_tol = 1e-11;
    int max_iterations = 200;
};

struct MomentEstimate {
    double mean_photons = 0.0;
    double second_moment = 0.0;
    double log_likelihood = 0.0;
    double gradient_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Maximum-likelihood moments from on/off frequencies. The likelihood is
// concave in (m1, m2); the solve runs a damped Newton iteration in
// log coordinates that keep m1 > 0 and m2 >= m1 throughout.
//
// Throws UnderdeterminedError with fewer than two distinct efficiencies and
// InfeasibleError if no starting point keeps every p_nu inside (0, 1).
MomentEstimate estimate_moments(std::span<const ChannelFrequency> channels,
                                const MomentSolverOptions& options = {});
MomentEstimate estimate_moments(std::span<const OnOffRecord> records,
                                const MomentSolverOptions& options = {});

} // namespace photrec
