#include "photrec/selfcheck.hpp"

#include <cmath>
#include <random>
#include <vector>

#include "photrec/errors.hpp"
#include "photrec/maxent.hpp"
#include "photrec/metrics.hpp"
#include "photrec/moment_maxlik.hpp"
#include "photrec/photon_distribution.hpp"

namespace photrec {

namespace {

// Collects the first failing comparison; later ones are skipped so the
// detail string points at the earliest problem.
struct Checker {
    bool ok = true;
    std::string detail;

    void close(double got, double want, double tol, const std::string& what)
    {
        if (!ok)
            return;
        if (!(std::abs(got - want) <= tol)) {
            ok = false;
            detail = what + ": got " + std::to_string(got) + ", want " + std::to_string(want)
                     + " within " + std::to_string(tol);
        }
    }

    void holds(bool cond, const std::string& what)
    {
        if (!ok)
            return;
        if (!cond) {
            ok = false;
            detail = what;
        }
    }

    CheckResult result(const std::string& name) const
    {
        return CheckResult{name, ok, ok ? "ok" : detail};
    }
};

std::vector<Efficiency> standard_etas()
{
    return {Efficiency(0.01), Efficiency(0.02), Efficiency(0.03), Efficiency(0.04),
            Efficiency(0.05)};
}

} // namespace

CheckResult check_closed_form_states()
{
    Checker c;
    const auto coh1 = coherent_distribution(1.0);
    const auto coh2 = coherent_distribution(2.0);
    const auto th1 = thermal_distribution(1.0);
    const auto f2 = fock_distribution(2);

    c.close(coh1.probability(0), 0.36787944117144233, 1e-15, "coherent(1) vacuum weight");
    c.close(coh2.probability(2), 0.2706705664732254, 1e-15, "coherent(2) two-photon weight");
    for (std::size_t n = 0; n <= 5; ++n)
        c.close(th1.probability(n), std::pow(0.5, static_cast<double>(n + 1)), 1e-15,
                "thermal(1) weight at n=" + std::to_string(n));
    c.close(th1.moment(1), 1.0, 1e-10, "thermal(1) mean");
    c.close(th1.moment(2), 3.0, 1e-8, "thermal(1) second moment");
    c.close(th1.mandel_q(), 1.0, 1e-8, "thermal(1) Mandel Q");
    c.close(coh1.moment(1), 1.0, 1e-10, "coherent(1) mean");
    c.close(coh1.moment(2), 2.0, 1e-9, "coherent(1) second moment");
    c.close(coh1.mandel_q(), 0.0, 1e-9, "coherent(1) Mandel Q");
    c.holds(f2.moment(1) == 2.0 && f2.moment(2) == 4.0, "fock(2) moments must be exact");
    c.close(f2.mandel_q(), -1.0, 1e-15, "fock(2) Mandel Q");

    const Efficiency eta(0.05);
    c.close(coh1.off_probability_exact(eta), 0.951229424500714, 2e-12, "coherent(1) off prob at 5%");
    c.close(f2.off_probability_exact(eta), 0.9025, 1e-15, "fock(2) off prob at 5%");
    c.close(th1.off_probability_exact(eta), 1.0 / 1.05, 2e-12, "thermal(1) off prob at 5%");
    c.holds(coh1.tail_mass_bound() <= 1e-12, "coherent(1) truncation above tail tolerance");
    return c.result("closed_form_states");
}

CheckResult check_model_exact_low_support()
{
    Checker c;
    // For support on n <= 2 the quadratic model is algebraically identical
    // to the exact off probability throughout the working efficiency range
    // (0, 0.2). Probed on a few corners plus random points of the simplex.
    std::vector<std::vector<double>> supports = {
        {0.3, 0.5, 0.2}, {0.6, 0.4}, {0.0, 1.0}, {0.0, 0.0, 1.0}, {1.0}};
    std::mt19937_64 gen(20240817);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int draw = 0; draw < 40; ++draw) {
        double a = unif(gen), b = unif(gen);
        if (a > b)
            std::swap(a, b);
        supports.push_back({a, b - a, 1.0 - b});
    }
    for (const auto& probs : supports) {
        const auto dist = PhotonDistribution::from_probabilities(probs);
        const double m1 = dist.moment(1);
        const double m2 = dist.moment(2);
        for (int i = 1; i <= 19; ++i) {
            const Efficiency eta(0.01 * i); // 0.01 .. 0.19, inside (0, 0.2)
            c.close(model_off_probability(m1, m2, eta), dist.off_probability_exact(eta), 1e-12,
                    "model vs exact off prob, eta=" + std::to_string(eta.value()));
        }
    }
    return c.result("model_exact_low_support");
}

CheckResult check_gradient_finite_difference()
{
    Checker c;
    // Fixed deterministic frequencies: model values at (1.2, 2.3) plus a
    // small per-channel perturbation so the gradient is not trivially zero.
    const double jitter[] = {3e-4, -2e-4, 1e-4, -4e-4, 2e-4};
    std::vector<ChannelFrequency> channels;
    std::size_t i = 0;
    for (const auto& eta : standard_etas()) {
        channels.push_back(
            ChannelFrequency{eta, model_off_probability(1.2, 2.3, eta) + jitter[i++]});
    }

    // 20 random feasible moment points; a draw is feasible when every model
    // probability it implies stays strictly inside (0, 1).
    std::mt19937_64 gen(20240818);
    std::uniform_real_distribution<double> mean_draw(0.2, 4.0);
    std::uniform_real_distribution<double> factor_draw(0.8, 1.6);
    int accepted = 0;
    while (accepted < 20) {
        const double m1 = mean_draw(gen);
        const double m2 = std::max(m1, m1 * (m1 + 1.0) * factor_draw(gen));
        bool feasible = true;
        for (const auto& ch : channels) {
            try {
                const double p = model_off_probability(m1, m2, ch.eta);
                feasible = feasible && p < 1.0;
            } catch (const ModelRangeError&) {
                feasible = false;
            }
        }
        if (!feasible)
            continue;
        ++accepted;

        const auto grad = likelihood_gradient(channels, m1, m2);
        const double h1 = 1e-5 * std::max(1.0, m1);
        const double h2 = 1e-5 * std::max(1.0, m2);
        const double fd1 = (normalized_log_likelihood(channels, m1 + h1, m2)
                            - normalized_log_likelihood(channels, m1 - h1, m2))
                           / (2.0 * h1);
        const double fd2 = (normalized_log_likelihood(channels, m1, m2 + h2)
                            - normalized_log_likelihood(channels, m1, m2 - h2))
                           / (2.0 * h2);
        const std::string at = " at (" + std::to_string(m1) + ", " + std::to_string(m2) + ")";
        c.close(grad[0], fd1, 1e-6 * std::max(1.0, std::abs(fd1)), "d ll / d mean" + at);
        c.close(grad[1], fd2, 1e-6 * std::max(1.0, std::abs(fd2)), "d ll / d second" + at);
    }
    return c.result("gradient_finite_difference");
}

CheckResult check_thermal_maxent_oracle()
{
    Checker c;
    // With only the mean constrained, maximum entropy is exactly thermal:
    // multiplier log(1 + 1/mu), geometric weights. Checked to 1e-8 on every
    // component of the truncated support, which needs the dual solved a
    // couple of orders tighter than that.
    MaxEntOptions tight;
    tight.residual_tol = 1e-10;
    for (double mu : {0.5, 1.0, 3.0}) {
        const auto st = solve_single_moment(mu, tight);
        c.holds(st.converged, "single-moment solve did not converge at mu=" + std::to_string(mu));
        c.close(st.multipliers[0], std::log1p(1.0 / mu), 1e-8,
                "thermal multiplier at mu=" + std::to_string(mu));
        const auto dist = maxent_distribution(st);
        const double r = mu / (1.0 + mu);
        double weight = 1.0 - r;
        for (std::size_t n = 0; n <= dist.cutoff(); ++n) {
            c.close(dist.probability(n), weight, 1e-8,
                    "thermal weight n=" + std::to_string(n) + " at mu=" + std::to_string(mu));
            weight *= r;
        }
        c.holds(st.tail_bound <= 1e-10,
                "thermal truncation too coarse at mu=" + std::to_string(mu));
    }
    // Constraining the second moment at its thermal value must leave the
    // quadratic multiplier at zero.
    const auto st = solve_moments(1.0, 3.0, tight);
    c.holds(st.converged, "solve_moments(1, 3) did not converge");
    c.close(st.multipliers[0], std::log(2.0), 1e-8, "solve_moments(1, 3) linear multiplier");
    c.close(st.multipliers[1], 0.0, 1e-8, "solve_moments(1, 3) quadratic multiplier");
    return c.result("thermal_maxent_oracle");
}

CheckResult check_constraint_jacobian()
{
    Checker c;
    std::vector<MaxEntState> states;
    states.push_back(solve_moments(1.0, 2.0));
    states.push_back(solve_moments(2.0, 5.8));
    {
        const auto truth = coherent_distribution(1.0);
        std::vector<PovmChannel> channels;
        for (const auto& eta : standard_etas())
            channels.push_back(PovmChannel{eta, truth.off_probability_exact(eta)});
        states.push_back(solve_povm(channels));
    }

    for (const auto& st : states) {
        const auto jac = constraint_jacobian(st);
        const std::size_t K = jac.size();
        // The nearly collinear povm constraints solve with huge cancelling
        // multipliers, which floors the value precision around 1e-12; the
        // difference step has to sit well above that floor.
        const double h = st.level == ObservationLevel::povm ? 1e-4 : 1e-6;
        for (std::size_t j = 0; j < K; ++j) {
            MaxEntState up = st;
            MaxEntState dn = st;
            up.multipliers[j] += h;
            dn.multipliers[j] -= h;
            const auto vu = constraint_values(up);
            const auto vd = constraint_values(dn);
            for (std::size_t k = 0; k < K; ++k) {
                const double fd = (vu[k] - vd[k]) / (2.0 * h);
                c.close(jac[k][j], fd, 1e-6 * std::max(1.0, std::abs(fd)),
                        "d<g_" + std::to_string(k) + ">/d lambda_" + std::to_string(j));
            }
        }
    }
    return c.result("constraint_jacobian");
}

CheckResult check_noiseless_moment_roundtrip()
{
    Checker c;
    for (const auto* kind : {"coherent", "fock"}) {
        const auto truth =
            kind == std::string("coherent") ? coherent_distribution(1.0) : fock_distribution(2);
        const double m1 = truth.moment(1);
        const double m2 = truth.moment(2);
        std::vector<ChannelFrequency> channels;
        for (const auto& eta : standard_etas())
            channels.push_back(ChannelFrequency{eta, model_off_probability(m1, m2, eta)});
        const auto est = estimate_moments(channels);
        c.holds(est.converged, std::string("noiseless estimate did not converge for ") + kind);
        c.close(est.mean_photons, m1, 1e-6, std::string("recovered mean for ") + kind);
        c.close(est.second_moment, m2, 1e-6, std::string("recovered second moment for ") + kind);
    }
    return c.result("noiseless_moment_roundtrip");
}

CheckResult check_povm_roundtrip()
{
    Checker c;
    // (a) Exact off probabilities of a coherent state are reproduced to the
    // solver tolerance.
    {
        const auto truth = coherent_distribution(1.0);
        std::vector<PovmChannel> channels;
        for (const auto& eta : standard_etas())
            channels.push_back(PovmChannel{eta, truth.off_probability_exact(eta)});
        const auto st = solve_povm(channels);
        c.holds(st.converged, "povm solve on coherent(1) targets did not converge");
        for (double r : st.residuals)
            c.close(r, 0.0, 1e-8, "povm residual on coherent(1) targets");
    }
    // (b) Round trip through a known member of the family: build a state
    // with chosen multipliers, read off its constraint values, solve, and
    // compare the reconstructed distribution.
    {
        MaxEntState probe;
        probe.level = ObservationLevel::povm;
        probe.cutoff = 60;
        probe.multipliers = {0.5, 0.2, 0.1, 0.05, 0.02};
        for (const auto& eta : standard_etas())
            probe.efficiencies.push_back(eta.value());
        const auto targets = constraint_values(probe);
        std::vector<PovmChannel> channels;
        for (std::size_t k = 0; k < targets.size(); ++k)
            channels.push_back(PovmChannel{Efficiency(probe.efficiencies[k]), targets[k]});
        MaxEntOptions options;
        options.cutoff = probe.cutoff;
        const auto st = solve_povm(channels, options);
        c.holds(st.converged, "povm round trip did not converge");
        for (double r : st.residuals)
            c.close(r, 0.0, 1e-8, "povm round-trip residual");
        const double f = fidelity(maxent_distribution(probe), maxent_distribution(st));
        c.holds(f >= 1.0 - 1e-6, "povm round-trip fidelity " + std::to_string(f) + " below 1-1e-6");
    }
    return c.result("povm_roundtrip");
}

CheckResult check_fidelity_properties()
{
    Checker c;
    const auto coh = coherent_distribution(1.0);
    c.close(fidelity(coh, coh), 1.0, 1e-11, "self fidelity of coherent(1)");
    c.holds(fidelity(fock_distribution(0), fock_distribution(1)) == 0.0,
            "disjoint supports must give zero fidelity");
    const auto half = PhotonDistribution::from_probabilities({0.5, 0.5});
    const auto vac = PhotonDistribution::from_probabilities({1.0});
    c.close(fidelity(half, vac), std::sqrt(0.5), 1e-15, "two-point vs vacuum fidelity");
    c.close(fidelity(vac, half), fidelity(half, vac), 1e-15, "fidelity symmetry");
    const auto vac_padded = PhotonDistribution::from_probabilities({1.0, 0.0, 0.0});
    c.close(fidelity(vac, vac_padded), 1.0, 1e-15, "padding must not change fidelity");
    return c.result("fidelity_properties");
}

std::vector<CheckResult> run_selfchecks()
{
    return {
        check_closed_form_states(),     check_model_exact_low_support(),
        check_gradient_finite_difference(), check_thermal_maxent_oracle(),
        check_constraint_jacobian(),    check_noiseless_moment_roundtrip(),
        check_povm_roundtrip(),         check_fidelity_properties(),
    };
}

} // namespace photrec
