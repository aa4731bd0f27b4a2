#pragma once

#include <cstddef>
#include <vector>

namespace photrec {

// Quantum efficiency of an on/off detector channel, strictly inside (0, 1).
// A value outside that range has no operational meaning here: eta = 0 never
// clicks, eta = 1 is a perfect photon counter and needs no reconstruction.
class Efficiency {
public:
    explicit Efficiency(double value);

    double value() const { return value_; }

private:
    double value_;
};

inline constexpr double kDefaultTailTol = 1e-12;

// Diagonal of a single-mode state in the Fock basis, truncated to a finite
// support {0..cutoff}. Probabilities are kept exactly as constructed (no
// hidden renormalization); tail_mass_bound() bounds what was cut off.
class PhotonDistribution {
public:
    // Takes the probabilities as given. They must be non-negative and sum
    // to at most 1 (within roundoff); any missing mass 1 - sum is recorded
    // as the tail bound.
    static PhotonDistribution from_probabilities(std::vector<double> probs);

    std::size_t cutoff() const { return probs_.size() - 1; }
    const std::vector<double>& probabilities() const { return probs_; }
    double probability(std::size_t n) const { return n < probs_.size() ? probs_[n] : 0.0; }
    double tail_mass_bound() const { return tail_bound_; }

    // k-th moment of the photon number, k >= 1.
    double moment(int k) const;

    // Probability of zero clicks at efficiency eta: sum_n (1-eta)^n p_n.
    double off_probability_exact(Efficiency eta) const;

    // Mandel Q = variance/mean - 1. Undefined for a vacuum-only state.
    double mandel_q() const;

private:
    PhotonDistribution(std::vector<double> probs, double tail_bound);

    std::vector<double> probs_;
    double tail_bound_;
};

// Closed-form states, truncated adaptively so the neglected tail mass is
// below tail_tol. mean_photons >= 0 in all cases.
PhotonDistribution coherent_distribution(double mean_photons, double tail_tol = kDefaultTailTol);
PhotonDistribution thermal_distribution(double mean_photons, double tail_tol = kDefaultTailTol);
PhotonDistribution fock_distribution(std::size_t n);

} // namespace photrec
