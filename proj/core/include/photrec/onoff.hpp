#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "photrec/photon_distribution.hpp"

namespace photrec {

// Result of one on/off channel: how many of `shots` repetitions gave no
// click at efficiency eta. frequency() is exactly off_count/shots.
struct OnOffRecord {
    Efficiency eta;
    std::int64_t shots = 0;
    std::int64_t off_count = 0;

    double frequency() const { return static_cast<double>(off_count) / static_cast<double>(shots); }
};

// Measurement layout: which efficiencies are probed, how many shots each,
// and the seed that makes the whole experiment reproducible.
class ExperimentDesign {
public:
    ExperimentDesign(std::vector<Efficiency> efficiencies, std::int64_t shots_per_channel,
                     std::uint64_t seed);

    const std::vector<Efficiency>& efficiencies() const { return efficiencies_; }
    std::int64_t shots_per_channel() const { return shots_; }
    std::uint64_t seed() const { return seed_; }

private:
    std::vector<Efficiency> efficiencies_;
    std::int64_t shots_;
    std::uint64_t seed_;
};

// Generator for one channel, keyed on (design seed, channel index) via a
// splitmix64 hash. Each index gets its own decoupled substream, so the
// draws do not depend on the order channels happen to be simulated in.
std::mt19937_64 channel_generator(std::uint64_t seed, std::size_t channel_index);

// One binomial draw: off_count ~ B(shots, off_probability_exact(eta)).
OnOffRecord simulate_channel(const PhotonDistribution& state, Efficiency eta, std::int64_t shots,
                             std::mt19937_64& gen);

std::vector<OnOffRecord> simulate_experiment(const PhotonDistribution& state,
                                             const ExperimentDesign& design);

// Human-readable description of the sampling scheme, recorded in reports so
// a run can state exactly how its randomness was produced.
std::string rng_algorithm_description();

} // namespace photrec
