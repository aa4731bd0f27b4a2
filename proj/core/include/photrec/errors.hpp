#pragma once

#include <stdexcept>
#include <string>

namespace photrec {

// Thrown when candidate moments drive the quadratic off-probability model
// outside (0, 1) for some channel, i.e. the model itself breaks down there.
class ModelRangeError : public std::domain_error {
public:
    explicit ModelRangeError(const std::string& what) : std::domain_error(what) {}
};

// Estimated or requested moments violate second_moment >= mean^2.
// No distribution has such moments, so downstream solves refuse them.
class UnphysicalMomentsError : public std::domain_error {
public:
    explicit UnphysicalMomentsError(const std::string& what) : std::domain_error(what) {}
};

// Moments sit on the variance boundary (second_moment ~= mean^2) but the
// mean is not close to an integer: the limiting distribution is a point
// mass between basis states and the exponential-family solve cannot reach it.
class NearDegenerateError : public std::domain_error {
public:
    explicit NearDegenerateError(const std::string& what) : std::domain_error(what) {}
};

// Fewer than two distinct efficiencies: two moments cannot be separated.
class UnderdeterminedError : public std::invalid_argument {
public:
    explicit UnderdeterminedError(const std::string& what) : std::invalid_argument(what) {}
};

// No feasible starting point found for the likelihood maximizer.
class InfeasibleError : public std::runtime_error {
public:
    explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace photrec
