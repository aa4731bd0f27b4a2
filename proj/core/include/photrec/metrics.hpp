#pragma once

#include "photrec/photon_distribution.hpp"

namespace photrec {

// Classical (Bhattacharyya) fidelity sum_n sqrt(p_n q_n). Supports of
// different length are compared as if padded with zeros; 1 means equal
// distributions, 0 means disjoint support.
double fidelity(const PhotonDistribution& a, const PhotonDistribution& b);

// Whether some photon-number distribution can have these first two
// moments: the implied variance must be non-negative, up to a slack of
// tol * mean_photons below zero. A non-positive mean is outside the
// domain of the question and throws std::domain_error.
bool physicality(double mean_photons, double second_moment, double tol = 0.0);

} // namespace photrec
