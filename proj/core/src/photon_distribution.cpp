#include "photrec/photon_distribution.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace photrec {

namespace {

double integer_power(double base, int k)
{
    double r = 1.0;
    for (int i = 0; i < k; ++i)
        r *= base;
    return r;
}

void check_tail_tol(double tail_tol)
{
    if (!(tail_tol > 0.0) || !(tail_tol < 1.0))
        throw std::invalid_argument("tail_tol must lie in (0, 1), got " + std::to_string(tail_tol));
}

} // namespace

Efficiency::Efficiency(double value) : value_(value)
{
    if (!(value > 0.0) || !(value < 1.0))
        throw std::invalid_argument("detector efficiency must lie strictly in (0, 1), got "
                                    + std::to_string(value));
}

PhotonDistribution::PhotonDistribution(std::vector<double> probs, double tail_bound)
    : probs_(std::move(probs)), tail_bound_(tail_bound)
{
}

PhotonDistribution PhotonDistribution::from_probabilities(std::vector<double> probs)
{
    if (probs.empty())
        throw std::invalid_argument("photon distribution needs at least the vacuum entry");
    double total = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0) || !std::isfinite(p))
            throw std::invalid_argument("photon-number probabilities must be finite and >= 0");
        total += p;
    }
    if (total > 1.0 + 1e-9)
        throw std::invalid_argument("photon-number probabilities sum to " + std::to_string(total)
                                    + " > 1");
    if (total <= 0.0)
        throw std::invalid_argument("photon-number probabilities sum to zero");
    double tail = total < 1.0 ? 1.0 - total : 0.0;
    return PhotonDistribution(std::move(probs), tail);
}

double PhotonDistribution::moment(int k) const
{
    if (k < 1)
        throw std::invalid_argument("moment order must be >= 1");
    double m = 0.0;
    for (std::size_t n = 1; n < probs_.size(); ++n)
        m += integer_power(static_cast<double>(n), k) * probs_[n];
    return m;
}

double PhotonDistribution::off_probability_exact(Efficiency eta) const
{
    const double s = 1.0 - eta.value(); // per-photon survival of "no click"
    double w = 1.0;
    double p = probs_[0];
    for (std::size_t n = 1; n < probs_.size(); ++n) {
        w *= s;
        p += w * probs_[n];
    }
    return p;
}

double PhotonDistribution::mandel_q() const
{
    const double m1 = moment(1);
    if (m1 <= 0.0)
        throw std::domain_error("Mandel Q undefined for a state with zero mean photon number");
    const double m2 = moment(2);
    return (m2 - m1 * m1) / m1 - 1.0;
}

PhotonDistribution coherent_distribution(double mean_photons, double tail_tol)
{
    if (!(mean_photons >= 0.0) || !std::isfinite(mean_photons))
        throw std::invalid_argument("coherent mean photon number must be finite and >= 0");
    check_tail_tol(tail_tol);

    // Poissonian number statistics. Extend until the analytic tail bound
    // p_{M+1} / (1 - mu/(M+2)) drops below tail_tol; valid once M+1 > mu.
    std::vector<double> probs;
    double term = std::exp(-mean_photons); // p_0
    probs.push_back(term);
    std::size_t n = 0;
    for (;;) {
        double next = term * mean_photons / static_cast<double>(n + 1); // p_{n+1}
        if (static_cast<double>(n + 1) > mean_photons) {
            double ratio = mean_photons / static_cast<double>(n + 2);
            double tail_bound = next / (1.0 - ratio);
            if (tail_bound <= tail_tol)
                break;
        }
        probs.push_back(next);
        term = next;
        ++n;
    }
    return PhotonDistribution::from_probabilities(std::move(probs));
}

PhotonDistribution thermal_distribution(double mean_photons, double tail_tol)
{
    if (!(mean_photons >= 0.0) || !std::isfinite(mean_photons))
        throw std::invalid_argument("thermal mean photon number must be finite and >= 0");
    check_tail_tol(tail_tol);

    if (mean_photons == 0.0)
        return fock_distribution(0);

    // Geometric weights p_n = (1-r) r^n with r = mu/(1+mu); the tail past M
    // is exactly r^{M+1}.
    const double r = mean_photons / (1.0 + mean_photons);
    std::vector<double> probs;
    double term = 1.0 - r;
    double tail = r; // tail past n=0
    probs.push_back(term);
    while (tail > tail_tol) {
        term *= r;
        tail *= r;
        probs.push_back(term);
    }
    return PhotonDistribution::from_probabilities(std::move(probs));
}

PhotonDistribution fock_distribution(std::size_t n)
{
    std::vector<double> probs(n + 1, 0.0);
    probs[n] = 1.0;
    return PhotonDistribution::from_probabilities(std::move(probs));
}

} // namespace photrec
