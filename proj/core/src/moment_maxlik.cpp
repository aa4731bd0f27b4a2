#include "photrec/moment_maxlik.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "photrec/errors.hpp"

namespace photrec {

namespace {

// p = 1 - m1 a + m2 b with a = eta + eta^2/2, b = eta^2/2.
struct ModelCoeffs {
    double a;
    double b;
};

ModelCoeffs model_coeffs(Efficiency eta)
{
    const double e = eta.value();
    return {e + 0.5 * e * e, 0.5 * e * e};
}

double model_off_raw(double m1, double m2, const ModelCoeffs& c)
{
    return 1.0 - m1 * c.a + m2 * c.b;
}

void check_moment_domain(double m1, double m2)
{
    if (!(m1 >= 0.0) || !(m2 >= 0.0) || !std::isfinite(m1) || !std::isfinite(m2))
        throw std::invalid_argument("candidate moments must be finite and >= 0");
}

bool all_in_range(std::span<const ChannelFrequency> channels, double m1, double m2)
{
    for (const auto& ch : channels) {
        const double p = model_off_raw(m1, m2, model_coeffs(ch.eta));
        if (!(p > 0.0) || !(p < 1.0))
            return false;
    }
    return true;
}

double log_likelihood_raw(std::span<const ChannelFrequency> channels, double m1, double m2)
{
    double ll = 0.0;
    for (const auto& ch : channels) {
        const double p = model_off_raw(m1, m2, model_coeffs(ch.eta));
        const double f = ch.frequency;
        if (f > 0.0)
            ll += f * std::log(p);
        if (f < 1.0)
            ll += (1.0 - f) * std::log(1.0 - p);
    }
    return ll;
}

// Gradient and Hessian in the original (m1, m2) coordinates. The Hessian is
// negative definite wherever every p_nu is interior, which makes the
// problem strictly concave on the feasible set.
struct Derivatives {
    double g1 = 0.0, g2 = 0.0;
    double h11 = 0.0, h12 = 0.0, h22 = 0.0;
};

Derivatives derivatives(std::span<const ChannelFrequency> channels, double m1, double m2)
{
    Derivatives d;
    for (const auto& ch : channels) {
        const ModelCoeffs c = model_coeffs(ch.eta);
        const double p = model_off_raw(m1, m2, c);
        const double f = ch.frequency;
        const double d1 = -c.a; // dp/dm1
        const double d2 = c.b;  // dp/dm2
        double w1 = 0.0;        // d ll / d p
        double w2 = 0.0;        // d^2 ll / d p^2
        if (f > 0.0) {
            w1 += f / p;
            w2 -= f / (p * p);
        }
        if (f < 1.0) {
            w1 -= (1.0 - f) / (1.0 - p);
            w2 -= (1.0 - f) / ((1.0 - p) * (1.0 - p));
        }
        d.g1 += w1 * d1;
        d.g2 += w1 * d2;
        d.h11 += w2 * d1 * d1;
        d.h12 += w2 * d1 * d2;
        d.h22 += w2 * d2 * d2;
    }
    return d;
}

void check_channels(std::span<const ChannelFrequency> channels)
{
    for (const auto& ch : channels) {
        if (!(ch.frequency >= 0.0) || !(ch.frequency <= 1.0))
            throw std::invalid_argument("off frequency must lie in [0, 1], got "
                                        + std::to_string(ch.frequency));
    }
}

// The likelihood weights 1/p and 1/(1-p) blow up at the interval ends, so
// the likelihood ops insist on strictly interior model probabilities even
// where model_off_probability itself would tolerate p = 1.
void check_interior(std::span<const ChannelFrequency> channels, double m1, double m2)
{
    for (const auto& ch : channels) {
        const double p = model_off_raw(m1, m2, model_coeffs(ch.eta));
        if (!(p > 0.0) || !(p < 1.0))
            throw ModelRangeError("model off probability " + std::to_string(p)
                                  + " not strictly inside (0, 1) at eta = "
                                  + std::to_string(ch.eta.value())
                                  + "; likelihood weights are singular there");
    }
}

} // namespace

std::vector<ChannelFrequency> to_frequencies(std::span<const OnOffRecord> records)
{
    std::vector<ChannelFrequency> out;
    out.reserve(records.size());
    for (const auto& r : records)
        out.push_back(ChannelFrequency{r.eta, r.frequency()});
    return out;
}

double model_off_probability(double mean_photons, double second_moment, Efficiency eta)
{
    check_moment_domain(mean_photons, second_moment);
    const double p = model_off_raw(mean_photons, second_moment, model_coeffs(eta));
    if (!(p > 0.0) || p > 1.0)
        throw ModelRangeError("model off probability " + std::to_string(p)
                              + " outside (0, 1] at eta = " + std::to_string(eta.value()));
    return p;
}

double third_order_bias_bound(double mean_photons, double second_moment, double third_moment,
                              Efficiency eta)
{
    const double e = eta.value();
    return std::abs(third_moment - 3.0 * second_moment + 2.0 * mean_photons) * e * e * e / 6.0;
}

double normalized_log_likelihood(std::span<const ChannelFrequency> channels, double mean_photons,
                                 double second_moment)
{
    check_channels(channels);
    check_moment_domain(mean_photons, second_moment);
    check_interior(channels, mean_photons, second_moment);
    return log_likelihood_raw(channels, mean_photons, second_moment);
}

double normalized_log_likelihood(std::span<const OnOffRecord> records, double mean_photons,
                                 double second_moment)
{
    const auto channels = to_frequencies(records);
    return normalized_log_likelihood(std::span<const ChannelFrequency>(channels), mean_photons,
                                     second_moment);
}

std::array<double, 2> likelihood_gradient(std::span<const ChannelFrequency> channels,
                                          double mean_photons, double second_moment)
{
    check_channels(channels);
    check_moment_domain(mean_photons, second_moment);
    check_interior(channels, mean_photons, second_moment);
    const Derivatives d = derivatives(channels, mean_photons, second_moment);
    return {d.g1, d.g2};
}

std::array<double, 2> likelihood_gradient(std::span<const OnOffRecord> records,
                                          double mean_photons, double second_moment)
{
    const auto channels = to_frequencies(records);
    return likelihood_gradient(std::span<const ChannelFrequency>(channels), mean_photons,
                               second_moment);
}

MomentEstimate estimate_moments(std::span<const ChannelFrequency> channels,
                                const MomentSolverOptions& options)
{
    check_channels(channels);
    std::set<double> distinct;
    for (const auto& ch : channels)
        distinct.insert(ch.eta.value());
    if (distinct.size() < 2)
        throw UnderdeterminedError("moment estimation needs at least two distinct efficiencies, got "
                                   + std::to_string(distinct.size()));

    // Starting point: invert the first-order model per channel, then the
    // coherent-like relation m2 = m1 (m1 + 1). Capped at 1/eta_max, where
    // that relation provably keeps every p_nu inside (0, 1).
    double eta_max = 0.0;
    double m1 = 0.0;
    for (const auto& ch : channels) {
        m1 += (1.0 - ch.frequency) / ch.eta.value();
        eta_max = std::max(eta_max, ch.eta.value());
    }
    m1 /= static_cast<double>(channels.size());
    m1 = std::clamp(m1, 1e-6, 1.0 / eta_max);
    double m2 = m1 * (m1 + 1.0);
    if (!all_in_range(channels, m1, m2))
        throw InfeasibleError("no feasible starting point for the moment likelihood");

    // Work in u = log m1, v = log(m2 - c m1); any (u, v) then maps to
    // m1 > 0, m2 > c m1, so iterates never leave the meaningful region.
    const double c = 1.0 - 1e-9;
    const double coord_cap = 46.0; // e^46 ~ 1e20, far beyond any sane moment
    double u = std::log(m1);
    double v = std::log(m2 - c * m1);

    double ll = log_likelihood_raw(channels, m1, m2);
    double gnorm = std::numeric_limits<double>::infinity();
    bool converged = false;
    int iter = 0;

    for (; iter < options.max_iterations; ++iter) {
        const Derivatives d = derivatives(channels, m1, m2);
        gnorm = std::hypot(d.g1, d.g2);
        if (gnorm <= options.gradient_tol) {
            converged = true;
            break;
        }

        // Chain rule to (u, v): m1 = e^u, m2 = e^v + c e^u.
        const double s = m2 - c * m1;
        const double gu = d.g1 * m1 + d.g2 * c * m1;
        const double gv = d.g2 * s;
        const double huu = m1 * m1 * (d.h11 + 2.0 * c * d.h12 + c * c * d.h22) + gu;
        const double huv = m1 * s * (d.h12 + c * d.h22);
        const double hvv = s * s * d.h22 + gv;

        // Newton step -H^{-1} g when the transformed Hessian is negative
        // definite; otherwise fall back to plain ascent along the gradient.
        double du = gu;
        double dv = gv;
        const double det = huu * hvv - huv * huv;
        const bool newton_ok = huu < 0.0 && det > 0.0;
        if (newton_ok) {
            du = -(hvv * gu - huv * gv) / det;
            dv = -(-huv * gu + huu * gv) / det;
        }

        auto try_direction = [&](double dir_u, double dir_v) {
            const double slope = gu * dir_u + gv * dir_v;
            if (!(slope > 0.0))
                return false;
            for (double t = 1.0; t > 1e-14; t *= 0.5) {
                const double ut = std::clamp(u + t * dir_u, -coord_cap, coord_cap);
                const double vt = std::clamp(v + t * dir_v, -coord_cap, coord_cap);
                const double m1t = std::exp(ut);
                const double m2t = std::exp(vt) + c * m1t;
                if (!all_in_range(channels, m1t, m2t))
                    continue;
                const double llt = log_likelihood_raw(channels, m1t, m2t);
                if (llt >= ll + 1e-4 * t * slope) {
                    u = ut;
                    v = vt;
                    m1 = m1t;
                    m2 = m2t;
                    ll = llt;
                    return true;
                }
            }
            return false;
        };

        bool moved = try_direction(du, dv);
        if (!moved && newton_ok)
            moved = try_direction(gu, gv);
        if (!moved)
            break; // stalled at line-search resolution; report as is
    }

    if (!converged) {
        const Derivatives d = derivatives(channels, m1, m2);
        gnorm = std::hypot(d.g1, d.g2);
        converged = gnorm <= options.gradient_tol;
    }

    MomentEstimate est;
    est.mean_photons = m1;
    est.second_moment = std::max(m2, m1); // n^2 >= n pointwise, so m2 >= m1 always
    est.log_likelihood = ll;
    est.gradient_norm = gnorm;
    est.iterations = iter;
    est.converged = converged;
    return est;
}

MomentEstimate estimate_moments(std::span<const OnOffRecord> records,
                                const MomentSolverOptions& options)
{
    const auto channels = to_frequencies(records);
    return estimate_moments(std::span<const ChannelFrequency>(channels), options);
}

} // namespace photrec
