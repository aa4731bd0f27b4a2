#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include <photrec/photon_distribution.hpp>

using namespace photrec;

TEST_SUITE("photon_distribution") {

TEST_CASE("coherent weights are Poissonian") {
    const auto d = coherent_distribution(1.0);
    CHECK(std::abs(d.probability(0) - 0.36787944117144233) < 1e-15); // e^{-1}
    CHECK(std::abs(coherent_distribution(2.0).probability(2) - 0.2706705664732254) < 1e-15);

    // Each weight obeys p_{n+1} = p_n mu / (n+1).
    for (std::size_t n = 0; n + 1 <= d.cutoff(); ++n)
        CHECK(std::abs(d.probability(n + 1) - d.probability(n) / static_cast<double>(n + 1))
              < 1e-16);

    CHECK(std::abs(d.moment(1) - 1.0) < 1e-10);
    CHECK(std::abs(d.moment(2) - 2.0) < 1e-9);
    CHECK(std::abs(d.mandel_q()) < 1e-9);
    CHECK(d.tail_mass_bound() <= 1e-12);
}

TEST_CASE("thermal weights are geometric with exact tail accounting") {
    const auto d = thermal_distribution(1.0);
    for (std::size_t n = 0; n <= 6; ++n)
        CHECK(std::abs(d.probability(n) - std::pow(0.5, static_cast<double>(n + 1))) < 1e-15);
    CHECK(std::abs(d.moment(1) - 1.0) < 1e-10);
    CHECK(std::abs(d.moment(2) - 3.0) < 1e-8); // thermal: N2 = mu (1 + 2 mu)... = 3 at mu=1
    CHECK(std::abs(d.mandel_q() - 1.0) < 1e-8);

    // The generator stops once the exact geometric tail r^{M+1} is below
    // the tolerance, so the recorded bound is the true remainder.
    const double r = 0.5;
    CHECK(std::abs(d.tail_mass_bound() - std::pow(r, static_cast<double>(d.cutoff() + 1)))
          < 1e-15);
    CHECK(d.tail_mass_bound() <= 1e-12);

    CHECK(thermal_distribution(0.0).probability(0) == 1.0);
}

TEST_CASE("fock states are point masses with exact moments") {
    const auto d = fock_distribution(2);
    CHECK(d.cutoff() == 2);
    CHECK(d.probability(2) == 1.0);
    CHECK(d.probability(0) == 0.0);
    CHECK(d.probability(7) == 0.0); // beyond the stored support
    CHECK(d.moment(1) == 2.0);
    CHECK(d.moment(2) == 4.0);
    CHECK(d.moment(3) == 8.0);
    CHECK(d.mandel_q() == -1.0);
    CHECK(d.tail_mass_bound() == 0.0);
}

TEST_CASE("off probabilities match closed forms") {
    const Efficiency eta(0.05);
    // coherent: e^{-eta mu}; fock(m): (1-eta)^m; thermal: 1/(1+eta mu).
    CHECK(std::abs(coherent_distribution(1.0).off_probability_exact(eta) - 0.951229424500714)
          < 2e-12);
    CHECK(std::abs(coherent_distribution(1.0).off_probability_exact(Efficiency(0.02))
                   - 0.9801986733067553)
          < 2e-12);
    CHECK(std::abs(fock_distribution(2).off_probability_exact(eta) - 0.9025) < 1e-15);
    CHECK(std::abs(thermal_distribution(1.0).off_probability_exact(eta) - 1.0 / 1.05) < 2e-12);
}

TEST_CASE("off probability strictly decreases with efficiency") {
    const std::vector<PhotonDistribution> states = {
        coherent_distribution(1.0), coherent_distribution(3.0), thermal_distribution(0.5),
        fock_distribution(1), fock_distribution(4)};
    for (const auto& st : states) {
        double prev = 1.0;
        for (double e = 0.01; e < 0.999; e += 0.02) {
            const double p = st.off_probability_exact(Efficiency(e));
            CHECK(p < prev);
            CHECK(p > 0.0);
            prev = p;
        }
    }
}

TEST_CASE("from_probabilities validates its input") {
    CHECK_THROWS_AS(PhotonDistribution::from_probabilities({}), std::invalid_argument);
    CHECK_THROWS_AS(PhotonDistribution::from_probabilities({0.5, -0.1}), std::invalid_argument);
    CHECK_THROWS_AS(PhotonDistribution::from_probabilities({0.8, 0.4}), std::invalid_argument);
    CHECK_THROWS_AS(PhotonDistribution::from_probabilities({0.0, 0.0}), std::invalid_argument);

    // Sub-normalized input is allowed; the deficit becomes the tail bound.
    const auto d = PhotonDistribution::from_probabilities({0.6, 0.3});
    CHECK(std::abs(d.tail_mass_bound() - 0.1) < 1e-15);
}

TEST_CASE("moment and mandel_q guard their domains") {
    const auto d = coherent_distribution(1.0);
    CHECK_THROWS_AS(d.moment(0), std::invalid_argument);
    CHECK_THROWS_AS(d.moment(-2), std::invalid_argument);
    CHECK_THROWS_AS(fock_distribution(0).mandel_q(), std::domain_error);
}

TEST_CASE("efficiency must be strictly between 0 and 1") {
    CHECK_THROWS_AS(Efficiency(0.0), std::invalid_argument);
    CHECK_THROWS_AS(Efficiency(1.0), std::invalid_argument);
    CHECK_THROWS_AS(Efficiency(-0.05), std::invalid_argument);
    CHECK_THROWS_AS(Efficiency(1.5), std::invalid_argument);
    CHECK(Efficiency(0.03).value() == 0.03);
}

TEST_CASE("generator domain errors") {
    CHECK_THROWS_AS(coherent_distribution(-1.0), std::invalid_argument);
    CHECK_THROWS_AS(thermal_distribution(-0.5), std::invalid_argument);
    CHECK_THROWS_AS(coherent_distribution(1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(coherent_distribution(1.0, 1.5), std::invalid_argument);
}

} // TEST_SUITE
