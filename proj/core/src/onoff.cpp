#include "photrec/onoff.hpp"

#include <stdexcept>
#include <utility>

namespace photrec {

namespace {

// splitmix64 output function (Steele/Lea/Flood). Used only to expand the
// design seed into well-separated per-channel seeds.
std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

} // namespace

ExperimentDesign::ExperimentDesign(std::vector<Efficiency> efficiencies,
                                   std::int64_t shots_per_channel, std::uint64_t seed)
    : efficiencies_(std::move(efficiencies)), shots_(shots_per_channel), seed_(seed)
{
    if (efficiencies_.empty())
        throw std::invalid_argument("experiment design needs at least one efficiency");
    for (std::size_t i = 1; i < efficiencies_.size(); ++i) {
        if (!(efficiencies_[i - 1].value() < efficiencies_[i].value()))
            throw std::invalid_argument("experiment efficiencies must be strictly increasing");
    }
    if (shots_ <= 0)
        throw std::invalid_argument("shots per channel must be positive");
}

std::mt19937_64 channel_generator(std::uint64_t seed, std::size_t channel_index)
{
    const std::uint64_t sub = splitmix64(seed + (static_cast<std::uint64_t>(channel_index) + 1)
                                                    * 0x9E3779B97F4A7C15ULL);
    return std::mt19937_64(sub);
}

OnOffRecord simulate_channel(const PhotonDistribution& state, Efficiency eta, std::int64_t shots,
                             std::mt19937_64& gen)
{
    if (shots <= 0)
        throw std::invalid_argument("shots per channel must be positive");
    const double p = state.off_probability_exact(eta);
    std::int64_t off;
    if (p >= 1.0) {
        off = shots; // vacuum-like state: the detector can never click
    } else {
        std::binomial_distribution<std::int64_t> binom(shots, p);
        off = binom(gen);
    }
    return OnOffRecord{eta, shots, off};
}

std::vector<OnOffRecord> simulate_experiment(const PhotonDistribution& state,
                                             const ExperimentDesign& design)
{
    std::vector<OnOffRecord> records;
    records.reserve(design.efficiencies().size());
    for (std::size_t i = 0; i < design.efficiencies().size(); ++i) {
        auto gen = channel_generator(design.seed(), i);
        records.push_back(
            simulate_channel(state, design.efficiencies()[i], design.shots_per_channel(), gen));
    }
    return records;
}

std::string rng_algorithm_description()
{
#if defined(__GLIBCXX__)
    const char* lib = "GNU libstdc++";
#elif defined(_LIBCPP_VERSION)
    const char* lib = "LLVM libc++";
#else
    const char* lib = "unknown stdlib";
#endif
    return std::string("std::mt19937_64 per channel (seeds via splitmix64 of design seed + "
                       "channel index), off counts from std::binomial_distribution [")
           + lib + "]";
}

} // namespace photrec
