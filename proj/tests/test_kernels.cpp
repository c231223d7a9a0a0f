#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "coagfrag/kernels.hpp"

using namespace coagfrag;

TEST_CASE("kernel symmetrization") {
    CoagKernel k{[](double x, double y) { return x * x * y; }, std::nullopt, "xxy"};
    auto s = sym_coag(k);
    REQUIRE(s(1.0, 2.0) == 3.0);  // (2 + 4)/2

    CoagKernel sym_already = additive_kernel();
    auto s2 = sym_coag(sym_already);
    for (double x : {0.5, 1.0, 7.0}) {
        for (double y : {0.25, 2.0, 9.0}) REQUIRE(s2(x, y) == sym_already(x, y));
    }

    RandomStream rng(5, 0, StreamTag::kProbe);
    CoagKernel rough{[](double x, double y) { return std::pow(x, 1.3) + 0.2 * y; }, std::nullopt, "rough"};
    auto sym = sym_coag(rough);
    auto sym2 = sym_coag(sym);
    for (int i = 0; i < 1000; ++i) {
        const double x = 0.1 + 10.0 * rng.uniform();
        const double y = 0.1 + 10.0 * rng.uniform();
        REQUIRE(sym(x, y) == sym(y, x));
        REQUIRE(sym2(x, y) == sym(x, y));  // idempotent
    }
}

TEST_CASE("homogeneity check") {
    std::vector<HomogeneityProbe> probes;
    RandomStream rng(6, 0, StreamTag::kProbe);
    for (int i = 0; i < 50; ++i) {
        probes.push_back({0.1 + 5.0 * rng.uniform(), 0.2 + 3.0 * rng.uniform(), 0.2 + 3.0 * rng.uniform()});
    }
    probes.push_back({1000.0, 1.0, 2.0});

    for (double beta : {0.5, 1.0, 1.5}) {
        REQUIRE(homogeneity_check(product_power_kernel(beta), 2.0 * beta, probes));
    }
    REQUIRE(homogeneity_check(additive_kernel(), 1.0, probes));
    REQUIRE_FALSE(homogeneity_check(additive_kernel(), 2.0, probes));
    CoagKernel affine{[](double x, double y) { return x * y + 1.0; }, std::nullopt, "xy+1"};
    for (double alpha : {0.0, 0.5, 1.0, 2.0, 3.0}) {
        REQUIRE_FALSE(homogeneity_check(affine, alpha, probes));
    }
    REQUIRE(homogeneity_check(constant_kernel(2.0), 0.0, probes));
}

TEST_CASE("kernel builders evaluate correctly") {
    REQUIRE(product_power_kernel(1.0)(2.0, 3.0) == 6.0);
    REQUIRE(additive_kernel()(2.0, 3.0) == 5.0);
    REQUIRE(multiplicative_kernel()(2.0, 3.0) == 6.0);
    REQUIRE(constant_kernel(2.0)(9.0, 0.1) == 2.0);
    REQUIRE(product_power_kernel(1.0).homogeneity == 2.0);
    REQUIRE(additive_kernel().homogeneity == 1.0);
}

TEST_CASE("uniform binary fragmentation") {
    auto law = uniform_binary([](double x) { return std::pow(x, -1.0); });
    REQUIRE(law.rate(2.0) == 0.25);  // Fbar(x)/2

    RandomStream rng(9, 0, StreamTag::kProbe);
    for (int i = 0; i < 200; ++i) {
        auto z = law.fragments(3.0, rng);
        REQUIRE(z.size() == 2);
        REQUIRE(std::fabs(z[0] + z[1] - 3.0) <= 3.0 * 1e-12);
    }

    // empirical fragment CDF at x = 1 is uniform (Kolmogorov distance <= 0.01)
    const int n = 100'000;
    std::vector<double> ys;
    ys.reserve(2 * n);
    for (int i = 0; i < n; ++i) {
        for (double z : law.fragments(1.0, rng)) ys.push_back(z);
    }
    std::sort(ys.begin(), ys.end());
    double dist = 0.0;
    for (std::size_t i = 0; i < ys.size(); ++i) {
        const double ecdf = static_cast<double>(i + 1) / static_cast<double>(ys.size());
        dist = std::fmax(dist, std::fabs(ecdf - ys[i]));
    }
    REQUIRE(dist <= 0.01);
}

TEST_CASE("deterministic binary fragmentation") {
    auto half = [](double x) { return 0.5 * x; };
    auto shifted = [](double x) { return x >= 0.5 ? 0.5 * x + 0.25 : 0.5 * x; };

    RandomStream rng(3, 0, StreamTag::kProbe);
    auto law_half = deterministic_binary([](double) { return 1.0; }, half);
    REQUIRE(law_half.fragments(1.0, rng) == std::vector<double>{0.5, 0.5});

    auto law_shift = deterministic_binary([](double) { return 1.0; }, shifted);
    REQUIRE(law_shift.fragments(1.0, rng) == std::vector<double>{0.75, 0.25});
    REQUIRE(law_shift.fragments(0.4, rng) == std::vector<double>{0.2, 0.2});

    auto bad = deterministic_binary([](double) { return 1.0; }, [](double x) { return 2.0 * x; });
    REQUIRE_THROWS_AS(bad.fragments(1.0, rng), ModelError);
    // the closed breakpoint state splits off a zero fragment: fragment sampling
    // must fail loudly, while the closed-form marginal stays usable
    REQUIRE_THROWS_AS(law_shift.fragments(0.5, rng), ModelError);
    REQUIRE(binary_sym_marginal(law_shift, 0.5).total() == 1.0);
}

TEST_CASE("binary symmetrized marginals") {
    auto law = deterministic_binary([](double) { return 2.0; }, [](double x) { return 0.25 * x; });
    auto m = binary_sym_marginal(law, 1.0);
    REQUIRE(m.atoms.size() == 2);
    REQUIRE(m.atoms[0].y == 0.25);
    REQUIRE(m.atoms[0].weight == 1.0);
    REQUIRE(m.atoms[1].y == 0.75);
    REQUIRE(m.atoms[1].weight == 1.0);

    auto sym = deterministic_binary([](double) { return 3.0; }, [](double x) { return 0.5 * x; });
    auto ms = binary_sym_marginal(sym, 2.0);
    REQUIRE(ms.atoms.size() == 1);
    REQUIRE(ms.atoms[0].y == 1.0);
    REQUIRE(ms.atoms[0].weight == 3.0);

    auto uni = uniform_binary([](double) { return 5.0; });
    auto mu = binary_sym_marginal(uni, 2.0);
    REQUIRE(mu.atoms.empty());
    REQUIRE(mu.uniform_density == 2.5);
    REQUIRE(mu.total() == 5.0);

    FragLaw bare;
    bare.total_rate = [](double) { return 1.0; };
    bare.sample_fragments = [](double x, RandomStream&) { return std::vector<double>{x / 2, x / 2}; };
    REQUIRE_THROWS_AS(binary_sym_marginal(bare, 1.0), UsageError);
}

TEST_CASE("marginal intensity Monte Carlo identities") {
    auto law = uniform_binary([](double x) { return 2.0 + x; });

    // phi = 1: average fragment count is 2, zero variance
    auto [count, count_se] = marginal_intensity_mc(law, 1.5, [](double) { return 1.0; }, 100, 1);
    REQUIRE(std::fabs(count - 2.0 * law.rate(1.5)) < 1e-12);
    REQUIRE(count_se < 1e-12);

    // phi = y: mass conservation, zero variance
    auto [mass, mass_se] = marginal_intensity_mc(law, 1.5, [](double y) { return y; }, 100, 1);
    REQUIRE(std::fabs(mass - 1.5 * law.rate(1.5)) < 1e-10);
    REQUIRE(mass_se < 1e-10);

    // phi = y^2 at x = 1: integral of y^2 Fbar/x dy = Fbar/3
    const double fbar = 3.0;
    auto [sq, sq_se] = marginal_intensity_mc(law, 1.0, [](double y) { return y * y; }, 200'000, 2);
    REQUIRE(std::fabs(sq - fbar / 3.0) <= 3.0 * sq_se);
}

TEST_CASE("mass flow law from deterministic binary is the two-point size-biased chain") {
    auto law = deterministic_binary([](double) { return 1.0; },
                                    [](double x) { return x >= 0.5 ? 0.5 * x + 0.25 : 0.5 * x; });
    auto mf = massflow_from_frag(law);
    REQUIRE(mf.rate(0.8) == law.rate(0.8));

    // halving kernel: next is x/2 with probability one
    auto halving = massflow_from_frag(deterministic_binary([](double) { return 1.0; },
                                                           [](double x) { return 0.5 * x; }));
    RandomStream rng(4, 0, StreamTag::kProbe);
    for (int i = 0; i < 50; ++i) REQUIRE(halving.next(1.0, rng) == 0.5);

    // shifted kernel at x > 1/2: kappa w.p. kappa/x, else x - kappa
    const double x = 0.8, kappa = 0.5 * x + 0.25;
    int up = 0;
    const int n = 40'000;
    for (int i = 0; i < n; ++i) {
        const double y = mf.next(x, rng);
        if (y == kappa) {
            ++up;
        } else {
            REQUIRE(y == x - kappa);
        }
    }
    const double p = kappa / x;
    const double se = std::sqrt(p * (1 - p) / n);
    REQUIRE(std::fabs(static_cast<double>(up) / n - p) <= 3.0 * se);

    // breakpoint state: the zero-mass piece is never selected
    for (int i = 0; i < 20; ++i) REQUIRE(mf.next(0.5, rng) == 0.5);
}

TEST_CASE("mass flow law from uniform binary is size-biased uniform") {
    auto mf = massflow_from_frag(uniform_binary([](double) { return 1.0; }));
    RandomStream rng(12, 0, StreamTag::kProbe);
    const int n = 100'000;
    std::vector<double> ys;
    ys.reserve(n);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double y = mf.next(1.0, rng);
        ys.push_back(y);
        sum += y;
    }
    const double mean = sum / n;
    const double sd = std::sqrt(1.0 / 18.0);  // variance of density 2y on (0,1)
    REQUIRE(std::fabs(mean - 2.0 / 3.0) <= 3.0 * sd / std::sqrt(static_cast<double>(n)));

    // Kolmogorov distance to the CDF y^2
    std::sort(ys.begin(), ys.end());
    double dist = 0.0;
    for (std::size_t i = 0; i < ys.size(); ++i) {
        const double ecdf = static_cast<double>(i + 1) / static_cast<double>(ys.size());
        dist = std::fmax(dist, std::fabs(ecdf - ys[i] * ys[i]));
    }
    REQUIRE(dist <= 0.01);

    // generic sample-and-pick path must agree with the closed form
    auto generic_law = uniform_binary([](double) { return 1.0; });
    generic_law.marginal_closed_form = nullptr;
    auto generic = massflow_from_frag(generic_law);
    double gsum = 0.0;
    for (int i = 0; i < n; ++i) gsum += generic.next(1.0, rng);
    REQUIRE(std::fabs(gsum / n - 2.0 / 3.0) <= 3.0 * sd / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("mass flow moment ratio") {
    // uniform binary: 2/(alpha + 2) for any x
    auto uni = massflow_from_frag(uniform_binary([](double x) { return 1.0 + x; }));
    for (double alpha : {0.5, 1.0, 2.0, 4.0}) {
        auto [est, se] = massflow_moment_ratio(uni, 1.7, alpha, 200'000,
                                               static_cast<std::uint64_t>(10.0 * alpha));
        REQUIRE(std::fabs(est - 2.0 / (alpha + 2.0)) <= 3.0 * se + 1e-12);
    }

    // deterministic binary: (kappa/x)^{alpha+1} + ((x-kappa)/x)^{alpha+1}
    auto shifted = [](double x) { return x >= 0.5 ? 0.5 * x + 0.25 : 0.5 * x; };
    auto det = massflow_from_frag(deterministic_binary([](double x) { return 1.0 / x; }, shifted));
    const double x = 0.51, alpha = 1.0;
    const double k = shifted(x);
    const double closed = std::pow(k / x, alpha + 1.0) + std::pow((x - k) / x, alpha + 1.0);
    REQUIRE(closed > 0.98);  // the ratio degenerates toward 1 as x drops to 1/2
    auto [est, se] = massflow_moment_ratio(det, x, alpha, 1'000'000, 77);
    REQUIRE(std::fabs(est - closed) <= 3.0 * se);
}

TEST_CASE("mass identity holds for built-in and custom laws") {
    REQUIRE(mass_identity_check(uniform_binary([](double x) { return 2.0 * x; }), 1.3, 1000, 1));
    REQUIRE(mass_identity_check(
        deterministic_binary([](double) { return 4.0; }, [](double x) { return 0.3 * x; }), 2.0, 1000, 1));

    // ternary Dirichlet-style splitter exercised through the sampled path
    FragLaw ternary;
    ternary.name = "ternary";
    ternary.total_rate = [](double) { return 1.0; };
    ternary.sample_fragments = [](double x, RandomStream& rng) {
        double a = rng.uniform_open(), b = rng.uniform_open();
        if (a > b) std::swap(a, b);
        return std::vector<double>{x * a, x * (b - a), x * (1.0 - b)};
    };
    RandomStream probe(1, 0, StreamTag::kProbe);
    for (int i = 0; i < 10; ++i) (void)ternary.fragments(1.0, probe);
    REQUIRE(mass_identity_check(ternary, 1.0, 20'000, 5));
}

TEST_CASE("rate equality between fragmentation representations") {
    auto law = uniform_binary([](double x) { return std::pow(x, -0.5); });
    auto mf = massflow_from_frag(law);
    for (double x : {0.1, 0.5, 1.0, 3.0, 10.0}) REQUIRE(mf.rate(x) == law.rate(x));
}

TEST_CASE("sources and efflux") {
    auto s = point_source(2.0, 1.5);
    REQUIRE(s.total == 2.0);
    REQUIRE(s.first_moment == 3.0);
    RandomStream rng(2, 0, StreamTag::kProbe);
    REQUIRE(s.sampler(rng) == 1.5);
    REQUIRE(s.sample_mass_biased(rng) == 1.5);

    auto d = discrete_source({{1.0, 1.0}, {3.0, 1.0}});
    REQUIRE(d.total == 2.0);
    REQUIRE(d.first_moment == 4.0);
    int heavy = 0;
    const int n = 40'000;
    for (int i = 0; i < n; ++i) heavy += d.sample_mass_biased(rng) == 3.0 ? 1 : 0;
    // mass-biased atom probabilities 1/4 and 3/4
    REQUIRE(std::fabs(heavy / static_cast<double>(n) - 0.75) <= 3.0 * std::sqrt(0.1875 / n));

    auto e = power_efflux(2.0, 1.0);
    REQUIRE(e(3.0) == 6.0);
    REQUIRE(power_efflux(1.0, 0.0)(9.0) == 1.0);
}

TEST_CASE("ternary fragment sampler obeys the mass-conservation contract") {
    FragLaw bad;
    bad.total_rate = [](double) { return 1.0; };
    bad.sample_fragments = [](double x, RandomStream&) { return std::vector<double>{x / 2, x / 3}; };
    RandomStream rng(1, 0, StreamTag::kProbe);
    REQUIRE_THROWS_AS(bad.fragments(1.0, rng), ModelError);
}
