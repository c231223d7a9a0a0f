#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "coagfrag/oracles.hpp"

using namespace coagfrag;

TEST_CASE("constant-kernel densities match the closed form at t = 1") {
    // c(t, k) = t^{k-1} / (1+t)^{k+1}, monodisperse start
    auto out = smoluchowski_ode(constant_kernel(2.0), {0.0, 1.0}, 200, 1.0, 1e-3);
    for (std::size_t k = 1; k <= 20; ++k) {
        const double closed = std::exp2(-static_cast<double>(k + 1));
        REQUIRE(std::fabs(out.c[k] - closed) <= 1e-6);
    }
    REQUIRE(std::fabs(out.c[1] - 0.25) <= 1e-6);
}

TEST_CASE("integration at t = 0 returns the initial condition") {
    std::vector<double> c0{0.0, 0.5, 0.25, 0.125};
    auto out = smoluchowski_ode(additive_kernel(), c0, 16, 0.0, 1e-3);
    for (std::size_t k = 1; k <= 3; ++k) REQUIRE(out.c[k] == c0[k]);
    auto mf = massflow_ode(additive_kernel(), c0, 16, 0.0, 1e-3);
    for (std::size_t k = 1; k <= 3; ++k) REQUIRE(mf.c[k] == c0[k]);
}

TEST_CASE("truncation-corrected mass is conserved") {
    auto out = smoluchowski_ode(constant_kernel(2.0), {0.0, 1.0}, 200, 1.0, 1e-3);
    REQUIRE(std::fabs(out.mass() + out.truncation_flux - 1.0) <= 1e-6);

    // with a small xmax the truncation flux is material and still accounted for
    auto tight = smoluchowski_ode(constant_kernel(2.0), {0.0, 1.0}, 12, 1.0, 1e-3);
    REQUIRE(tight.truncation_flux > 1e-4);
    REQUIRE(std::fabs(tight.mass() + tight.truncation_flux - 1.0) <= 1e-6);
}

TEST_CASE("mass flow densities equal size-weighted number densities") {
    std::vector<double> c0{0.0, 1.0};
    auto number = smoluchowski_ode(constant_kernel(2.0), c0, 200, 1.0, 1e-3);
    std::vector<double> ct0{0.0, 1.0};
    auto mass = massflow_ode(constant_kernel(2.0), ct0, 200, 1.0, 1e-3);
    for (std::size_t k = 1; k <= 200; ++k) {
        REQUIRE(std::fabs(mass.c[k] - static_cast<double>(k) * number.c[k]) <= 1e-6);
    }
}

TEST_CASE("mass flow total density is conserved up to truncation") {
    auto out = massflow_ode(constant_kernel(2.0), {0.0, 1.0}, 200, 1.0, 1e-3);
    REQUIRE(std::fabs(out.number() + out.truncation_flux - 1.0) <= 1e-6);
}

TEST_CASE("halving the step changes the result at fourth order") {
    auto coarse = smoluchowski_ode(multiplicative_kernel(), {0.0, 1.0}, 64, 0.5, 2e-3);
    auto fine = smoluchowski_ode(multiplicative_kernel(), {0.0, 1.0}, 64, 0.5, 1e-3);
    double max_diff = 0.0;
    for (std::size_t k = 1; k <= 64; ++k) max_diff = std::fmax(max_diff, std::fabs(coarse.c[k] - fine.c[k]));
    REQUIRE(max_diff <= 1e-8);
}

TEST_CASE("gel time of the multiplicative kernel") {
    REQUIRE(gel_time_multiplicative(1.0) == 1.0);
    REQUIRE(gel_time_multiplicative(2.0) == 0.5);
    REQUIRE_THROWS_AS(gel_time_multiplicative(0.0), UsageError);

    // the scalar moment equation m' = m^2 blows up past the predicted time
    double m = 1.0;
    const double dt = 1e-5;
    const double t_target = 0.99 * gel_time_multiplicative(1.0);
    double prev = m;
    for (double t = 0.0; t < t_target; t += dt) {
        const double k1 = m * m;
        const double k2 = (m + 0.5 * dt * k1) * (m + 0.5 * dt * k1);
        const double k3 = (m + 0.5 * dt * k2) * (m + 0.5 * dt * k2);
        const double k4 = (m + dt * k3) * (m + dt * k3);
        m += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        REQUIRE(m >= prev);
        prev = m;
    }
    REQUIRE(m >= 99.0);  // 1/(1-t) at t = 0.99
}

TEST_CASE("expected explosion time of the doubling chain") {
    REQUIRE(mf1_expected_explosion_time(2.0) == 2.0);
    REQUIRE(std::fabs(mf1_expected_explosion_time(3.0) - 4.0 / 3.0) < 1e-15);
    REQUIRE(mf1_expected_explosion_time(1.0001) > 1e3);
    REQUIRE_THROWS_AS(mf1_expected_explosion_time(1.0), UsageError);
    REQUIRE_THROWS_AS(mf1_expected_explosion_time(0.5), UsageError);
}

TEST_CASE("slowest-decrease path of the shifted-half chain") {
    REQUIRE(ex410_nonexplosion_prob(1.0) == 0.5);
    REQUIRE(ex410_nonexplosion_prob(2.0) == 0.25);
    REQUIRE_THROWS_AS(ex410_nonexplosion_prob(0.5), UsageError);

    REQUIRE(ex410_slowest_path(1.0, 0) == 1.0);
    REQUIRE(ex410_slowest_path(1.0, 1) == 0.75);
    REQUIRE(ex410_slowest_path(1.0, 2) == 0.625);
    REQUIRE(ex410_slowest_path(1.0, 3) == 0.5625);

    // kappa(eta_k) = eta_{k+1} along the path
    auto kappa = [](double x) { return x >= 0.5 ? 0.5 * x + 0.25 : 0.5 * x; };
    for (std::size_t k = 0; k <= 20; ++k) {
        REQUIRE(std::fabs(kappa(ex410_slowest_path(1.0, k)) - ex410_slowest_path(1.0, k + 1)) < 1e-16);
    }
}

TEST_CASE("halving-chain rates diverge harmonically") {
    REQUIRE(ex411_rate(0) == 0.5);
    REQUIRE(std::fabs(ex411_rate(1) - 0.5 * (std::log(2.0) + 1.0)) < 1e-15);

    // partial sums of 2/(k ln2 + 1) track (2/ln2) H_k up to a converging constant
    auto diff_at = [](std::size_t K) {
        double s = 0.0, h = 0.0;
        for (std::size_t k = 1; k <= K; ++k) {
            s += 1.0 / ex411_rate(k);
            h += 1.0 / static_cast<double>(k);
        }
        return s - 2.0 / std::log(2.0) * h;
    };
    const double d4 = diff_at(10'000);
    const double d5 = diff_at(100'000);
    REQUIRE(std::fabs(d4 - d5) < 1e-3);
}

TEST_CASE("alternating growth path hits the Fibonacci pairs") {
    REQUIRE(fibonacci_path(0) == std::pair<double, double>{1.0, 1.0});
    REQUIRE(fibonacci_path(1) == std::pair<double, double>{1.0, 2.0});
    REQUIRE(fibonacci_path(2) == std::pair<double, double>{3.0, 2.0});
    REQUIRE(fibonacci_path(3) == std::pair<double, double>{3.0, 5.0});
    REQUIRE(fibonacci_path(4) == std::pair<double, double>{8.0, 5.0});
    REQUIRE(fibonacci_path(5) == std::pair<double, double>{8.0, 13.0});

    // both components grow at least like the golden ratio
    const double phi = 0.5 * (1.0 + std::sqrt(5.0));
    for (std::size_t k = 1; k <= 30; ++k) {
        auto [x, y] = fibonacci_path(k);
        REQUIRE(std::fmin(x, y) >= 0.4 * std::pow(phi, static_cast<double>(k)) - 1.0);
    }
}

TEST_CASE("step-size validation") {
    REQUIRE_THROWS_AS(smoluchowski_ode(constant_kernel(1.0), {0.0, 1.0}, 8, 1.0, 0.0), UsageError);
}
