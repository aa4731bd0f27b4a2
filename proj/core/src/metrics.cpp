#include "photrec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace photrec {

double fidelity(const PhotonDistribution& a, const PhotonDistribution& b)
{
    const auto& pa = a.probabilities();
    const auto& pb = b.probabilities();
    const std::size_t n = std::min(pa.size(), pb.size());
    double f = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        f += std::sqrt(pa[i] * pb[i]);
    return f;
}

bool physicality(double mean_photons, double second_moment, double tol)
{
    if (!(mean_photons > 0.0))
        throw std::domain_error("physicality: mean photon number must be positive, got "
                                + std::to_string(mean_photons));
    return second_moment - mean_photons * mean_photons >= -tol * mean_photons;
}

} // namespace photrec
