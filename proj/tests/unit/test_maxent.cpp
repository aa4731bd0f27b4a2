#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include <photrec/errors.hpp>
#include <photrec/maxent.hpp>
#include <photrec/metrics.hpp>
#include <photrec/photon_distribution.hpp>

using namespace photrec;

namespace {

std::vector<Efficiency> design_etas()
{
    return {Efficiency(0.01), Efficiency(0.02), Efficiency(0.03), Efficiency(0.04),
            Efficiency(0.05)};
}

// Independent evaluation of the dual psi(l) = log Z + l1 t1 + l2 t2 for the
// two-moment family, written from scratch so the grid-search oracle below
// shares nothing with the solver under test.
double dual_value(double l1, double l2, double t1, double t2, std::size_t cutoff)
{
    double shift = -std::numeric_limits<double>::infinity();
    std::vector<double> expo(cutoff + 1);
    for (std::size_t n = 0; n <= cutoff; ++n) {
        const double x = static_cast<double>(n);
        expo[n] = -l1 * x - l2 * x * x;
        shift = std::max(shift, expo[n]);
    }
    double z = 0.0;
    for (double e : expo)
        z += std::exp(e - shift);
    return shift + std::log(z) + l1 * t1 + l2 * t2;
}

double variance_of(const PhotonDistribution& d)
{
    const double m1 = d.moment(1);
    return d.moment(2) - m1 * m1;
}

} // namespace

TEST_SUITE("maxent") {

TEST_CASE("single-moment solutions are exactly thermal") {
    MaxEntOptions tight;
    tight.residual_tol = 1e-10;
    for (double mu : {0.5, 1.0, 3.0}) {
        const auto st = solve_single_moment(mu, tight);
        REQUIRE(st.converged);
        CHECK(std::abs(st.multipliers[0] - std::log1p(1.0 / mu)) < 1e-8);
        const auto dist = maxent_distribution(st);
        const double r = mu / (1.0 + mu);
        double weight = 1.0 - r;
        for (std::size_t n = 0; n <= dist.cutoff(); ++n) {
            CHECK(std::abs(dist.probability(n) - weight) < 1e-8);
            weight *= r;
        }
    }
    // Vacuum target short-circuits to a point mass.
    const auto vac = solve_single_moment(0.0);
    CHECK(vac.degenerate_snap);
    CHECK(maxent_distribution(vac).probability(0) == 1.0);
}

TEST_CASE("second moment at the thermal value leaves the quadratic multiplier at zero") {
    MaxEntOptions tight;
    tight.residual_tol = 1e-10;
    const auto st = solve_moments(1.0, 3.0, tight);
    REQUIRE(st.converged);
    CHECK(std::abs(st.multipliers[0] - std::log(2.0)) < 1e-8);
    CHECK(std::abs(st.multipliers[1]) < 1e-8);
    const double f = fidelity(maxent_distribution(st), thermal_distribution(1.0));
    CHECK(f > 1.0 - 1e-9);
}

TEST_CASE("all multipliers zero gives the uniform distribution") {
    MaxEntState st;
    st.level = ObservationLevel::moments;
    st.cutoff = 14;
    st.multipliers = {0.0, 0.0};
    st.targets = {0.0, 0.0};
    const auto dist = maxent_distribution(st);
    for (std::size_t n = 0; n <= 14; ++n)
        CHECK(std::abs(dist.probability(n) - 1.0 / 15.0) < 1e-15);
}

TEST_CASE("uniform povm constraint value is the truncated geometric average") {
    // lambda = 0, cutoff M: <(1-eta)^n> = (1/(M+1)) sum (1-eta)^n.
    MaxEntState st;
    st.level = ObservationLevel::povm;
    st.cutoff = 20;
    st.multipliers = {0.0};
    st.targets = {0.0};
    st.efficiencies = {0.05};
    const auto vals = constraint_values(st);
    REQUIRE(vals.size() == 1);
    CHECK(std::abs(vals[0] - 0.6280365463922711) < 1e-14);

    // Feeding that value back as a target must be solved by lambda = 0.
    std::vector<PovmChannel> channels = {PovmChannel{Efficiency(0.05), 0.6280365463922711}};
    MaxEntOptions options;
    options.cutoff = 20;
    const auto solved = solve_povm(channels, options);
    REQUIRE(solved.converged);
    CHECK(std::abs(solved.residuals[0]) <= 1e-8);
    CHECK(std::abs(solved.multipliers[0]) < 1e-6);
}

TEST_CASE("solve_moments(1, 2) agrees with an independent dense grid search") {
    const auto st = solve_moments(1.0, 2.0);
    REQUIRE(st.converged);

    // Coarse box around the origin, then three shrinking refinements down
    // to a 1e-5 grid pitch. Nothing here touches the Newton code path.
    const std::size_t cutoff = 60;
    double best1 = 0.0, best2 = 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (double l1 = -1.0; l1 <= 1.0 + 1e-12; l1 += 0.02) {
        for (double l2 = -0.2; l2 <= 0.8 + 1e-12; l2 += 0.01) {
            const double v = dual_value(l1, l2, 1.0, 2.0, cutoff);
            if (v < best) {
                best = v;
                best1 = l1;
                best2 = l2;
            }
        }
    }
    double step = 0.01;
    for (int round = 0; round < 3; ++round) {
        const double c1 = best1, c2 = best2;
        for (double l1 = c1 - 2.0 * step; l1 <= c1 + 2.0 * step + 1e-12; l1 += step / 10.0) {
            for (double l2 = c2 - 2.0 * step; l2 <= c2 + 2.0 * step + 1e-12; l2 += step / 10.0) {
                const double v = dual_value(l1, l2, 1.0, 2.0, cutoff);
                if (v < best) {
                    best = v;
                    best1 = l1;
                    best2 = l2;
                }
            }
        }
        step /= 10.0;
    }

    CHECK(std::abs(st.multipliers[0] - best1) <= 1e-4);
    CHECK(std::abs(st.multipliers[1] - best2) <= 1e-4);

    // And the distributions agree pointwise well below the grid pitch.
    const auto solver_q = maxent_distribution(st);
    MaxEntState grid_st;
    grid_st.level = ObservationLevel::moments;
    grid_st.cutoff = solver_q.cutoff();
    grid_st.multipliers = {best1, best2};
    grid_st.targets = {1.0, 2.0};
    const auto grid_q = maxent_distribution(grid_st);
    for (std::size_t n = 0; n <= solver_q.cutoff(); ++n)
        CHECK(std::abs(solver_q.probability(n) - grid_q.probability(n)) <= 1e-5);
}

TEST_CASE("zero-variance targets snap to Fock states") {
    const auto st = solve_moments(2.0, 4.0);
    CHECK(st.converged);
    CHECK(st.degenerate_snap);
    const auto dist = maxent_distribution(st);
    CHECK(dist.probability(2) == 1.0);
    CHECK(fidelity(dist, fock_distribution(2)) == 1.0);

    // Slightly off the exact point but still inside the snap band.
    const auto near = solve_moments(2.0000004, 4.0000016);
    CHECK(near.degenerate_snap);
    CHECK(maxent_distribution(near).probability(2) == 1.0);
}

TEST_CASE("zero variance away from an integer mean has no solution") {
    CHECK_THROWS_AS(solve_moments(2.5, 6.25), NearDegenerateError);
}

TEST_CASE("impossible moments are rejected") {
    CHECK_THROWS_AS(solve_moments(2.0, 3.9), UnphysicalMomentsError); // below mean^2
    CHECK_THROWS_AS(solve_moments(0.5, 0.3), UnphysicalMomentsError); // below mean
    CHECK_THROWS_AS(solve_moments(0.0, 0.0), std::invalid_argument);  // mean must be > 0
    CHECK_THROWS_AS(solve_moments(-1.0, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(solve_moments(1.0, std::numeric_limits<double>::quiet_NaN()),
                    std::invalid_argument);
}

TEST_CASE("m2 = m1 below one photon pins the support to {0, 1}") {
    const auto st = solve_moments(0.5, 0.5);
    CHECK(st.converged);
    CHECK(st.degenerate_snap);
    const auto dist = maxent_distribution(st);
    CHECK(std::abs(dist.probability(0) - 0.5) < 1e-12);
    CHECK(std::abs(dist.probability(1) - 0.5) < 1e-12);
    CHECK(dist.cutoff() == 1);

    const auto st2 = solve_moments(0.2, 0.2);
    CHECK(std::abs(maxent_distribution(st2).probability(1) - 0.2) < 1e-12);
}

TEST_CASE("reconstructions are normalized and respect moment ordering") {
    std::vector<MaxEntState> states;
    states.push_back(solve_moments(1.0, 2.0));
    states.push_back(solve_moments(0.8, 1.1));
    states.push_back(solve_moments(2.0, 10.0));
    states.push_back(solve_moments(1.0, 3.5));
    states.push_back(solve_single_moment(1.7));
    for (const auto& st : states) {
        const auto dist = maxent_distribution(st);
        double total = 0.0;
        for (double q : dist.probabilities()) {
            CHECK(q >= 0.0);
            total += q;
        }
        CHECK(std::abs(total - 1.0) <= 1e-10);
        const double m1 = dist.moment(1);
        const double m2 = dist.moment(2);
        CHECK(m2 >= m1 - 1e-12);
        CHECK(m2 >= m1 * m1 - 1e-12);
    }
}

TEST_CASE("residuals report the achieved constraint match") {
    MaxEntOptions options;
    const auto st = solve_moments(1.3, 2.9, options);
    REQUIRE(st.converged);
    REQUIRE(st.residuals.size() == 2);
    const auto vals = constraint_values(st);
    CHECK(std::abs(vals[0] - 1.3) <= options.residual_tol);
    CHECK(std::abs(vals[1] - 2.9) <= options.residual_tol);
    CHECK(std::abs(st.residuals[0] - (vals[0] - 1.3)) < 1e-12);
    CHECK(std::abs(st.residuals[1] - (vals[1] - 2.9)) < 1e-12);
}

TEST_CASE("entropy is maximal among feasible perturbations") {
    const auto st = solve_moments(1.0, 2.0);
    const auto dist = maxent_distribution(st);
    const std::size_t top = std::min<std::size_t>(dist.cutoff(), 8);
    std::vector<double> q(dist.probabilities().begin(),
                          dist.probabilities().begin() + static_cast<std::ptrdiff_t>(top) + 1);
    // The slice keeps the exponential form, so it maximizes entropy for its
    // own sum and moments (a hair under the full-support values).
    double sum0 = 0.0, m10 = 0.0, m20 = 0.0;
    for (std::size_t n = 0; n <= top; ++n) {
        const double x = static_cast<double>(n);
        sum0 += q[n];
        m10 += q[n] * x;
        m20 += q[n] * x * x;
    }

    // Constraint rows on the restricted support: normalization, n, n^2.
    std::array<std::vector<double>, 3> rows;
    for (std::size_t n = 0; n <= top; ++n) {
        const double x = static_cast<double>(n);
        rows[0].push_back(1.0);
        rows[1].push_back(x);
        rows[2].push_back(x * x);
    }
    // Orthonormalize the rows so directions can be projected out of them.
    for (std::size_t r = 0; r < 3; ++r) {
        for (std::size_t s = 0; s < r; ++s) {
            double dot = 0.0;
            for (std::size_t n = 0; n <= top; ++n)
                dot += rows[r][n] * rows[s][n];
            for (std::size_t n = 0; n <= top; ++n)
                rows[r][n] -= dot * rows[s][n];
        }
        double norm = 0.0;
        for (double v : rows[r])
            norm += v * v;
        norm = std::sqrt(norm);
        for (double& v : rows[r])
            v /= norm;
    }

    const auto entropy = [](const std::vector<double>& p) {
        double h = 0.0;
        for (double v : p)
            if (v > 0.0)
                h -= v * std::log(v);
        return h;
    };
    const double h0 = entropy(q);

    std::mt19937_64 gen(4242);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    int tried = 0;
    while (tried < 100) {
        std::vector<double> delta(top + 1);
        for (double& d : delta)
            d = unif(gen);
        for (const auto& row : rows) {
            double dot = 0.0;
            for (std::size_t n = 0; n <= top; ++n)
                dot += delta[n] * row[n];
            for (std::size_t n = 0; n <= top; ++n)
                delta[n] -= dot * row[n];
        }
        double norm = 0.0;
        for (double d : delta)
            norm += d * d;
        if (norm < 1e-12)
            continue; // degenerate draw, take another
        ++tried;

        // Step size keeps every entry positive with a factor-two margin.
        double eps = std::numeric_limits<double>::infinity();
        for (std::size_t n = 0; n <= top; ++n)
            if (delta[n] != 0.0)
                eps = std::min(eps, 0.5 * q[n] / std::abs(delta[n]));
        std::vector<double> perturbed(top + 1);
        double sum = 0.0, m1 = 0.0, m2 = 0.0;
        for (std::size_t n = 0; n <= top; ++n) {
            perturbed[n] = q[n] + eps * delta[n];
            const double x = static_cast<double>(n);
            sum += perturbed[n];
            m1 += perturbed[n] * x;
            m2 += perturbed[n] * x * x;
        }
        // The projection preserves all three constraints to rounding...
        CHECK(std::abs(sum - sum0) < 1e-12);
        CHECK(std::abs(m1 - m10) < 1e-10);
        CHECK(std::abs(m2 - m20) < 1e-10);
        // ...and the entropy can only go down.
        CHECK(entropy(perturbed) <= h0 + 1e-12);
    }
}

TEST_CASE("doubling the cutoff does not move a converged solution") {
    for (const auto& [m1, m2] :
         std::vector<std::pair<double, double>>{{1.0, 2.0}, {0.8, 1.1}, {2.0, 5.2}}) {
        const auto st = solve_moments(m1, m2);
        REQUIRE(st.converged);
        REQUIRE(st.multipliers[1] >= 0.0);
        MaxEntOptions wide;
        wide.cutoff = 2 * st.cutoff;
        const auto st2 = solve_moments(m1, m2, wide);
        REQUIRE(st2.converged);
        const auto a = maxent_distribution(st);
        const auto b = maxent_distribution(st2);
        for (std::size_t n = 0; n <= st2.cutoff; ++n)
            CHECK(std::abs(a.probability(n) - b.probability(n)) < 1e-10);
    }
}

TEST_CASE("heavy tails grow the support until the mass bound clears") {
    // (2, 10) is exactly thermal mu=2: lambda2 = 0, geometric tail r=2/3,
    // so the initial guess of ~31 levels cannot hold 1e-12 of tail mass and
    // the solver has to double its way up.
    MaxEntOptions tight;
    tight.residual_tol = 1e-10;
    const auto st = solve_moments(2.0, 10.0, tight);
    REQUIRE(st.converged);
    CHECK(st.cutoff >= 100);
    CHECK(std::abs(st.multipliers[1]) < 1e-7);
    CHECK(st.tail_bound <= 1e-12);
    const double f = fidelity(maxent_distribution(st), thermal_distribution(2.0));
    CHECK(f > 1.0 - 1e-8);
}

TEST_CASE("super-thermal variance flips the quadratic multiplier negative") {
    // Variance 2.5 at mean 1 exceeds the thermal 2: only possible inside a
    // truncated family, so the truncation is part of the answer.
    const auto st = solve_moments(1.0, 3.5);
    REQUIRE(st.converged);
    CHECK(st.negative_curvature);
    CHECK(st.multipliers[1] < 0.0);
    for (double r : st.residuals)
        CHECK(std::abs(r) <= 1e-8);
}

TEST_CASE("growing quadratic multiplier squeezes toward a point mass") {
    double prev_var = std::numeric_limits<double>::infinity();
    for (double t : {0.5, 1.0, 2.0, 4.0}) {
        MaxEntState st;
        st.level = ObservationLevel::moments;
        st.cutoff = 20;
        st.multipliers = {-2.0 * t, t}; // exponent -t (n-1)^2 + const
        st.targets = {0.0, 0.0};
        const auto dist = maxent_distribution(st);
        const double var = variance_of(dist);
        CHECK(var < prev_var);
        prev_var = var;
        CHECK(std::abs(dist.moment(1) - 1.0) < 0.2);
    }
    CHECK(prev_var < 0.05);
}

TEST_CASE("constraint jacobian is minus the covariance, checked by differences") {
    std::vector<MaxEntState> states;
    states.push_back(solve_moments(1.3, 2.9));
    {
        const auto truth = thermal_distribution(1.0);
        std::vector<PovmChannel> channels;
        for (const auto& eta : design_etas())
            channels.push_back(PovmChannel{eta, truth.off_probability_exact(eta)});
        states.push_back(solve_povm(channels));
    }
    for (const auto& st : states) {
        const auto jac = constraint_jacobian(st);
        const std::size_t K = jac.size();
        // povm states carry huge cancelling multipliers, so constraint values
        // only resolve to ~1e-12 and the step must stay well above that.
        const double h = st.level == ObservationLevel::povm ? 1e-4 : 1e-6;
        for (std::size_t j = 0; j < K; ++j) {
            auto up = st;
            auto dn = st;
            up.multipliers[j] += h;
            dn.multipliers[j] -= h;
            const auto vu = constraint_values(up);
            const auto vd = constraint_values(dn);
            for (std::size_t k = 0; k < K; ++k) {
                const double fd = (vu[k] - vd[k]) / (2.0 * h);
                CHECK(std::abs(jac[k][j] - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
                CHECK(std::abs(jac[k][j] - jac[j][k])
                      <= 1e-9 * std::max(1.0, std::abs(jac[k][j])));
            }
            CHECK(jac[j][j] < 0.0); // minus a variance
        }
    }
}

TEST_CASE("povm roundtrip hits its targets without reproducing multipliers") {
    // Build a state with chosen multipliers, hand its constraint values to
    // the solver. The nearly collinear (1-eta)^n constraints mean the
    // recovered multipliers need not match, but the achieved probabilities
    // and the distribution itself must.
    MaxEntState probe;
    probe.level = ObservationLevel::povm;
    probe.cutoff = 60;
    probe.multipliers = {0.5, 0.2, 0.1, 0.05, 0.02};
    for (const auto& eta : design_etas())
        probe.efficiencies.push_back(eta.value());
    probe.targets.assign(5, 0.0);
    const auto targets = constraint_values(probe);

    std::vector<PovmChannel> channels;
    for (std::size_t k = 0; k < targets.size(); ++k)
        channels.push_back(PovmChannel{Efficiency(probe.efficiencies[k]), targets[k]});
    MaxEntOptions options;
    options.cutoff = probe.cutoff;
    const auto st = solve_povm(channels, options);
    REQUIRE(st.converged);
    for (double r : st.residuals)
        CHECK(std::abs(r) <= 1e-8);
    const double f = fidelity(maxent_distribution(probe), maxent_distribution(st));
    CHECK(f >= 1.0 - 1e-6);
}

TEST_CASE("povm solve on exact coherent probabilities") {
    const auto truth = coherent_distribution(1.0);
    std::vector<PovmChannel> channels;
    for (const auto& eta : design_etas())
        channels.push_back(PovmChannel{eta, truth.off_probability_exact(eta)});
    const auto st = solve_povm(channels);
    REQUIRE(st.converged);
    for (double r : st.residuals)
        CHECK(std::abs(r) <= 1e-8);
    CHECK(fidelity(maxent_distribution(st), truth) > 0.999);
}

TEST_CASE("povm input validation") {
    CHECK_THROWS_AS(solve_povm(std::vector<PovmChannel>{}), std::invalid_argument);
    std::vector<PovmChannel> bad_p = {PovmChannel{Efficiency(0.05), 1.0}};
    CHECK_THROWS_AS(solve_povm(bad_p), std::invalid_argument);
    std::vector<PovmChannel> dup = {PovmChannel{Efficiency(0.05), 0.9},
                                    PovmChannel{Efficiency(0.05), 0.91}};
    CHECK_THROWS_AS(solve_povm(dup), std::invalid_argument);
}

} // TEST_SUITE
