#pragma once

#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "coagfrag/config.hpp"
#include "coagfrag/direct_sim.hpp"
#include "coagfrag/drift.hpp"
#include "coagfrag/ensemble.hpp"
#include "coagfrag/explosion.hpp"
#include "coagfrag/mass_flow.hpp"
#include "coagfrag/oracles.hpp"

namespace coagfrag {

/// Outcome of one named validation: a verdict plus human-readable
/// measured-vs-expected lines.
struct ValidationResult {
    std::string name;
    bool pass = false;
    bool report_only = false;
    std::vector<std::string> lines;
};

namespace validation_detail {

inline std::string fmt(const char* pattern, ...) {
    char buf[512];
    va_list args;
    va_start(args, pattern);
    std::vsnprintf(buf, sizeof(buf), pattern, args);
    va_end(args);
    return buf;
}

struct MeanAccumulator {
    double sum = 0.0, sum_sq = 0.0;
    std::uint64_t count = 0;
    void add(double v) {
        sum += v;
        sum_sq += v * v;
        ++count;
    }
    double mean() const { return sum / static_cast<double>(count); }
    double std_error() const {
        if (count < 2) return 0.0;
        const double m = mean();
        double var = (sum_sq - sum * m) / static_cast<double>(count - 1);
        return std::sqrt(std::fmax(var, 0.0) / static_cast<double>(count));
    }
};

inline StopRule<ParticleSystem> particle_stop(std::uint64_t max_jumps, double horizon, double ceiling,
                                              const BoundaryGuards& guards, bool use_guard = true) {
    StopRule<ParticleSystem> stop;
    stop.max_jumps = max_jumps;
    stop.time_horizon = horizon;
    stop.rate_ceiling = ceiling;
    if (use_guard) stop.state_guard = make_boundary_guard(guards);
    return stop;
}

// --- criterion 1: single-particle mass flow coagulation explosion time ----

inline ValidationResult mf1_mean_tau(unsigned workers) {
    ValidationResult res{"mf1_mean_tau"};
    MassFlowConfig cfg;
    cfg.n = 1;
    cfg.coag = multiplicative_kernel();  // (xy)^{alpha/2} with alpha = 2

    const std::uint64_t reps = 10'000;
    auto taus = run_replicates(reps, workers, [&cfg](std::uint64_t r) {
        auto law = build_law(cfg);
        auto stop = particle_stop(1'000'000, 1e300, 1e12, cfg.guards);
        auto traj = simulate_chain(law, ParticleSystem{1, {1.0}}, derive_seed(101, r), stop,
                                   {r, false, nullptr});
        auto v = classify(traj, stop);
        return std::pair<double, bool>{v.tau_lower, v.kind == VerdictKind::kExploded};
    });
    MeanAccumulator acc;
    std::uint64_t exploded = 0;
    for (const auto& [tau, expl] : taus) {
        acc.add(tau);
        exploded += expl ? 1 : 0;
    }
    const double oracle = mf1_expected_explosion_time(2.0);
    const double err = std::fabs(acc.mean() - oracle);
    res.pass = exploded == reps && err <= 3.0 * acc.std_error();
    res.lines.push_back(fmt("mean tau at rate ceiling = %.6f vs oracle %.6f (|diff| %.2e <= 3 se %.2e)",
                            acc.mean(), oracle, err, 3.0 * acc.std_error()));
    res.lines.push_back(fmt("exploded %llu / %llu replicates", (unsigned long long)exploded,
                            (unsigned long long)reps));
    return res;
}

inline ValidationResult mf1_sqrt_no_explosion(unsigned workers) {
    ValidationResult res{"mf1_sqrt_no_explosion"};
    MassFlowConfig cfg;
    cfg.n = 1;
    cfg.coag = product_power_kernel(0.5);  // alpha = 1: constant unit rate

    const std::uint64_t reps = 1'000;
    auto outcomes = run_replicates(reps, workers, [&cfg](std::uint64_t r) {
        auto law = build_law(cfg);
        auto stop = particle_stop(1'000'000, 200.0, 1e12, cfg.guards);
        auto traj = simulate_chain(law, ParticleSystem{1, {1.0}}, derive_seed(102, r), stop,
                                   {r, false, nullptr});
        return classify(traj, stop).kind;
    });
    std::uint64_t exploded = 0, survived = 0;
    for (auto k : outcomes) {
        exploded += k == VerdictKind::kExploded ? 1 : 0;
        survived += k == VerdictKind::kSurvived ? 1 : 0;
    }
    res.pass = exploded == 0;
    res.lines.push_back(fmt("alpha = 1: exploded %llu / %llu to horizon (survived %llu)",
                            (unsigned long long)exploded, (unsigned long long)reps,
                            (unsigned long long)survived));
    return res;
}

// --- criterion 2: fragmentation dichotomy of the shifted-half chain -------

inline ValidationResult ex410_dichotomy(double x0, unsigned workers) {
    ValidationResult res{x0 == 1.0 ? "ex410_x0_1" : "ex410_x0_2"};
    MassFlowConfig cfg;
    cfg.n = 1;
    cfg.mf_frag = massflow_from_frag(deterministic_binary(
        [](double x) { return 1.0 / x; }, [](double x) { return x >= 0.5 ? 0.5 * x + 0.25 : 0.5 * x; }));
    cfg.guards.x_min = 0.5;  // dipping below 1/2 is the deterministic explosion funnel

    const std::uint64_t reps = 10'000;
    auto outcomes = run_replicates(reps, workers, [&cfg, x0](std::uint64_t r) {
        auto law = build_law(cfg);
        auto stop = particle_stop(60, 1e300, 1e300, cfg.guards);
        auto traj = simulate_chain(law, ParticleSystem{1, {x0}}, derive_seed(103, r), stop,
                                   {r, false, nullptr});
        return classify(traj, stop).kind != VerdictKind::kExploded;
    });
    std::uint64_t survived = 0;
    for (bool s : outcomes) survived += s ? 1 : 0;
    const double frac = static_cast<double>(survived) / static_cast<double>(reps);
    const double expected = ex410_nonexplosion_prob(x0);
    const double se = std::sqrt(frac * (1.0 - frac) / static_cast<double>(reps));
    res.pass = std::fabs(frac - expected) <= 3.0 * se;
    res.lines.push_back(
        fmt("x0 = %g: non-explosion fraction over 60 jumps = %.4f vs 1/(2 x0) = %.4f (3 se = %.4f)",
            x0, frac, expected, 3.0 * se));
    return res;
}

// --- criterion 3: regular halving chain ------------------------------------

inline MassFlowConfig ex411_config() {
    MassFlowConfig cfg;
    cfg.n = 1;
    cfg.mf_frag = massflow_from_frag(deterministic_binary(
        [](double x) { return 1.0 - std::log(x); }, [](double x) { return 0.5 * x; }));
    cfg.guards.x_min = 1e-305;  // the chain legitimately reaches 2^{-1000}
    return cfg;
}

inline ValidationResult ex411_chain(unsigned) {
    ValidationResult res{"ex411_chain"};
    auto cfg = ex411_config();
    auto law = build_law(cfg);
    auto stop = particle_stop(1000, 1e300, 1e300, cfg.guards);
    SimulateOptions<ParticleSystem> opt;
    opt.record_states = true;
    auto traj = simulate_chain(law, ParticleSystem{1, {1.0}}, 1, stop, opt);
    bool exact = traj.jumps() == 1000;
    for (std::size_t k = 0; exact && k <= 1000; ++k) {
        exact = traj.states[k].sizes == std::vector<double>{std::exp2(-static_cast<double>(k))};
    }
    res.pass = exact;
    res.lines.push_back(fmt("deterministic chain x_k = 2^-k reproduced exactly for k <= 1000: %s",
                            exact ? "yes" : "no"));
    return res;
}

inline ValidationResult ex411_tau1000(unsigned workers) {
    ValidationResult res{"ex411_tau1000"};
    auto cfg = ex411_config();
    double oracle = 0.0;
    for (std::size_t k = 0; k < 1000; ++k) oracle += 1.0 / ex411_rate(k);

    const std::uint64_t reps = 1'000;
    auto outcomes = run_replicates(reps, workers, [&cfg](std::uint64_t r) {
        auto law = build_law(cfg);
        auto stop = particle_stop(1000, 1e300, 1e300, cfg.guards);
        auto traj = simulate_chain(law, ParticleSystem{1, {1.0}}, derive_seed(104, r), stop,
                                   {r, false, nullptr});
        return std::pair<double, bool>{traj.final_time(),
                                       classify(traj, stop).kind == VerdictKind::kExploded};
    });
    MeanAccumulator acc;
    std::uint64_t exploded = 0;
    for (const auto& [tau, expl] : outcomes) {
        acc.add(tau);
        exploded += expl ? 1 : 0;
    }
    const double err = std::fabs(acc.mean() - oracle);
    res.pass = exploded == 0 && err <= 3.0 * acc.std_error();
    res.lines.push_back(fmt("mean tau_1000 = %.4f vs series %.4f (|diff| %.2e <= 3 se %.2e)",
                            acc.mean(), oracle, err, 3.0 * acc.std_error()));
    res.lines.push_back(fmt("exploded verdicts: %llu / %llu", (unsigned long long)exploded,
                            (unsigned long long)reps));
    return res;
}

// --- criterion 4: shattering explosion of the direct simulation -----------

inline DirectSimConfig thm43_config() {
    DirectSimConfig cfg;
    cfg.n = 1;
    cfg.frag = uniform_binary([](double x) { return 1.0 / x; });
    return cfg;
}

inline ValidationResult thm43_explosion(unsigned workers) {
    ValidationResult res{"thm43_explosion"};
    auto cfg = thm43_config();
    const std::uint64_t reps = 1'000;
    auto outcomes = run_replicates(reps, workers, [&cfg](std::uint64_t r) {
        auto law = build_law(cfg);
        auto stop = particle_stop(1'000'000, 1e300, 1e12, cfg.guards);
        auto traj = simulate_chain(law, ParticleSystem{1, {1.0}}, derive_seed(105, r), stop,
                                   {r, false, nullptr});
        return classify(traj, stop).kind == VerdictKind::kExploded;
    });
    std::uint64_t exploded = 0;
    for (bool e : outcomes) exploded += e ? 1 : 0;
    res.pass = exploded * 100 >= reps * 99;
    res.lines.push_back(fmt("exploded %llu / %llu (need >= 99%%)", (unsigned long long)exploded,
                            (unsigned long long)reps));
    return res;
}

inline ValidationResult thm43_cauchy(unsigned workers) {
    ValidationResult res{"thm43_cauchy"};
    auto cfg = thm43_config();
    cfg.guards.x_min = 1e-260;  // deepest size before the breakage rate overflows

    // tau_{2J} - tau_J over J = 2^10 .. 2^16 requires 2^17 jumps; fragment
    // sizes underflow the double range centuries of jumps earlier
    const std::uint64_t needed = std::uint64_t{1} << 17;
    auto outcomes = run_replicates(8, workers, [&cfg, needed](std::uint64_t r) {
        auto law = build_law(cfg);
        auto stop = particle_stop(needed, 1e300, 1e250, cfg.guards);
        auto traj = simulate_chain(law, ParticleSystem{1, {1.0}}, derive_seed(106, r), stop,
                                   {r, false, nullptr});
        return traj.jump_times;
    });

    std::uint64_t max_jumps_attained = 0;
    for (const auto& times : outcomes) {
        max_jumps_attained = std::max<std::uint64_t>(max_jumps_attained, times.size() - 1);
    }
    bool pass = true;
    for (std::uint64_t j = std::uint64_t{1} << 10; j <= (std::uint64_t{1} << 16); j *= 2) {
        bool all_have = true;
        double prev_gap = 1e300;
        bool decreasing = true;
        for (const auto& times : outcomes) {
            if (times.size() <= 2 * j) {
                all_have = false;
                break;
            }
            const double gap = times[2 * j] - times[j];
            decreasing = decreasing && gap <= prev_gap;
            prev_gap = gap;
        }
        if (!all_have || !decreasing) {
            pass = false;
            break;
        }
    }
    res.pass = pass;
    res.lines.push_back(fmt("required jump depth 2^17 = %llu; deepest trajectory before the dust "
                            "boundary: %llu jumps",
                            (unsigned long long)needed, (unsigned long long)max_jumps_attained));
    if (!pass) {
        res.lines.push_back(
            "tau_J at J = 2^10..2^16 is unreachable in 64-bit sizes: fragment sizes underflow "
            "(the smallest particle shrinks by a factor ~e^1.7 per jump), so the stated range "
            "cannot be measured; the feasible dyadic range is covered by the unit tests");
        // diagnostic: the same contraction on the feasible range
        const auto& times = outcomes.front();
        double prev = 1e300;
        bool feasible_ok = true;
        for (std::uint64_t j = 8; 2 * j < times.size(); j *= 2) {
            const double gap = times[2 * j] - times[j];
            feasible_ok = feasible_ok && gap <= prev;
            prev = gap;
        }
        res.lines.push_back(fmt("diagnostic |tau_2J - tau_J| nonincreasing over feasible dyadic J: %s",
                                feasible_ok ? "yes" : "no"));
    }
    return res;
}

// --- criterion 5: regularity with source and fragmentation ----------------

inline ValidationResult thm42_regularity(unsigned workers) {
    ValidationResult res{"thm42_regularity"};
    DirectSimConfig cfg;
    cfg.n = 10;
    cfg.frag = uniform_binary([](double x) { return 1.0 + x; });  // F = (1+x)/2, C_F = 1/2
    cfg.source = point_source(1.0, 1.0);                          // C_S = 1

    // rate envelope n [S + (C_e + C_F)(M0_0 + k k_F + M1_0 + k C_S)] with
    // C_e = 0, C_F = 1/2, k_F = 3 (binary), M0_0 = M1_0 = 1: 20 + 20 k
    const double n = 10.0, S = 1.0, c_f = 0.5, k_f = 3.0, c_s = 1.0, m0 = 1.0, m1 = 1.0;
    struct Outcome {
        bool exploded;
        bool envelope_ok;
    };
    const std::uint64_t reps = 1'000;
    auto outcomes = run_replicates(reps, workers, [&](std::uint64_t r) {
        auto law = build_law(cfg);
        auto stop = particle_stop(2'000'000, 10.0, 1e12, cfg.guards);
        auto traj = simulate_chain(law, ParticleSystem{10, std::vector<double>(10, 1.0)},
                                   derive_seed(107, r), stop, {r, false, nullptr});
        bool envelope_ok = true;
        for (std::size_t k = 0; k < traj.rates.size(); ++k) {
            const double bound = n * (S + c_f * (m0 + static_cast<double>(k) * k_f + m1 +
                                                 static_cast<double>(k) * c_s));
            envelope_ok = envelope_ok && traj.rates[k] <= bound;
        }
        return Outcome{classify(traj, stop).kind == VerdictKind::kExploded, envelope_ok};
    });
    std::uint64_t exploded = 0, enveloped = 0;
    for (const auto& o : outcomes) {
        exploded += o.exploded ? 1 : 0;
        enveloped += o.envelope_ok ? 1 : 0;
    }
    res.pass = exploded == 0 && enveloped == reps;
    res.lines.push_back(fmt("exploded %llu / %llu to horizon t = 10", (unsigned long long)exploded,
                            (unsigned long long)reps));
    res.lines.push_back(fmt("rates within the affine envelope 20 + 20k on %llu / %llu runs",
                            (unsigned long long)enveloped, (unsigned long long)reps));
    return res;
}

// --- criterion 6: homogeneous mass flow coagulation explosion --------------

inline ValidationResult thm44_explosion(unsigned workers) {
    ValidationResult res{"thm44_explosion"};
    res.pass = true;
    for (std::uint64_t n : {1ull, 2ull, 8ull}) {
        MassFlowConfig cfg;
        cfg.n = n;
        cfg.coag = product_power_kernel(0.75);  // homogeneous alpha = 3/2
        const std::uint64_t reps = 1'000;
        auto outcomes = run_replicates(reps, workers, [&cfg, n](std::uint64_t r) {
            auto law = build_law(cfg);
            auto stop = particle_stop(1'000'000, 1e300, 1e12, cfg.guards);
            auto traj = simulate_chain(law, ParticleSystem{n, std::vector<double>(n, 1.0)},
                                       derive_seed(108 + n, r), stop, {r, false, nullptr});
            return classify(traj, stop).kind == VerdictKind::kExploded;
        });
        std::uint64_t exploded = 0;
        for (bool e : outcomes) exploded += e ? 1 : 0;
        const bool ok = exploded * 100 >= reps * 99;
        res.pass = res.pass && ok;
        res.lines.push_back(fmt("n = %llu: exploded %llu / %llu (need >= 99%%)",
                                (unsigned long long)n, (unsigned long long)exploded,
                                (unsigned long long)reps));
    }
    return res;
}

// --- criterion 7: hydrodynamic consistency against the truncated ODE ------

inline ValidationResult const_kernel_tv(unsigned) {
    ValidationResult res{"const_kernel_tv"};
    const std::size_t n = 10'000;
    DirectSimConfig cfg;
    cfg.n = n;
    cfg.coag = constant_kernel(2.0);
    auto law = build_law(cfg);
    auto stop = particle_stop(10 * n, 1.0, 1e12, cfg.guards);
    auto traj = simulate_chain(law, ParticleSystem{n, std::vector<double>(n, 1.0)}, 271828, stop,
                               {0, false, nullptr});

    const std::size_t xmax = 200;
    auto oracle = smoluchowski_ode(constant_kernel(2.0), {0.0, 1.0}, xmax, 1.0, 1e-3);
    std::vector<double> emp(xmax + 1, 0.0);
    double emp_beyond = 0.0;
    for (double x : traj.final_state().sizes) {
        const auto k = static_cast<std::size_t>(x);
        if (k <= xmax) {
            emp[k] += 1.0 / static_cast<double>(n);
        } else {
            emp_beyond += 1.0 / static_cast<double>(n);
        }
    }
    double tv = emp_beyond;
    for (std::size_t k = 1; k <= xmax; ++k) tv += std::fabs(emp[k] - oracle.c[k]);
    tv *= 0.5;
    res.pass = tv <= 0.02;
    res.lines.push_back(fmt("total variation distance at t = 1: %.4f (tolerance 0.02)", tv));
    return res;
}

inline ValidationResult massflow_hydro(unsigned workers) {
    ValidationResult res{"massflow_hydro"};
    const std::size_t n = 10'000;
    MassFlowConfig cfg;
    cfg.n = n;
    cfg.coag = constant_kernel(2.0);

    // phi(x) = x 1_{x<=8}: the mass flow estimator of sum phi(x) c(t,x) is
    // (1/n) #{particles of size <= 8}
    const std::uint64_t reps = 12;
    auto estimates = run_replicates(reps, workers, [&cfg, n](std::uint64_t r) {
        auto law = build_law(cfg);
        auto stop = particle_stop(200'000, 1.0, 1e12, cfg.guards);
        auto traj = simulate_chain(law, ParticleSystem{n, std::vector<double>(n, 1.0)},
                                   derive_seed(110, r), stop, {r, false, nullptr});
        std::size_t small = 0;
        for (double x : traj.final_state().sizes) small += x <= 8.0 ? 1 : 0;
        return static_cast<double>(small) / static_cast<double>(n);
    });
    MeanAccumulator acc;
    for (double e : estimates) acc.add(e);

    auto oracle = smoluchowski_ode(constant_kernel(2.0), {0.0, 1.0}, 200, 1.0, 1e-3);
    double expected = 0.0;
    for (std::size_t x = 1; x <= 8; ++x) expected += static_cast<double>(x) * oracle.c[x];
    const double err = std::fabs(acc.mean() - expected);
    res.pass = err <= 3.0 * acc.std_error();
    res.lines.push_back(fmt("mass flow estimate of the tail functional = %.6f vs ODE %.6f "
                            "(|diff| %.2e <= 3 se %.2e)",
                            acc.mean(), expected, err, 3.0 * acc.std_error()));
    return res;
}

// --- criterion 8: drift audits of the proof trap regions ------------------

inline ValidationResult drift_audit_thm43(unsigned) {
    ValidationResult res{"drift_audit_thm43"};
    auto cfg = thm43_config();  // F(x, Z) = x^{-1}/2: C_F = 1/2, alpha = 1
    const double c_f = 0.5, alpha = 1.0, mass_cap = 2.0;
    auto g_prime = [](double u) { return 1.0 / ((1.0 + u) * (1.0 + u)); };  // beta = 1

    RandomStream pick(301, 0, StreamTag::kProbe);
    std::size_t ok = 0;
    const std::size_t trials = 100;
    for (std::size_t t = 0; t < trials; ++t) {
        ParticleSystem xi;
        xi.n = 1 + static_cast<std::uint64_t>(pick.uniform() * 3.0);
        const auto count = 1 + static_cast<std::size_t>(pick.uniform() * 12.0);
        const double n = static_cast<double>(xi.n);
        for (std::size_t i = 0; i < count; ++i) xi.sizes.push_back(pick.uniform_open());
        double mass = 0.0;
        for (double x : xi.sizes) mass += x;
        if (mass / n > mass_cap) {
            for (double& x : xi.sizes) x *= mass_cap * n / mass;  // project into E+(C)
        }

        DirectSimConfig dcfg = cfg;
        dcfg.n = xi.n;
        auto law = build_law(dcfg);
        const double N = static_cast<double>(xi.count());
        TestFunction<ParticleSystem> eta{[](const ParticleSystem& s) {
                                             const double u = moment(s, 0.0);
                                             return u / (1.0 + u);
                                         },
                                         1.0};
        auto rep = drift(law, xi, eta, 200, derive_seed(302, t));
        const double bound = c_f / n * g_prime((N + 1.0) / n) * std::pow(N, 1.0 + alpha) *
                             std::pow(mass_cap * n, -alpha);
        if (rep.estimate + 4.0 * rep.std_error >= bound * (1.0 - 1e-9)) ++ok;
    }
    res.pass = ok == trials;
    res.lines.push_back(fmt("saturating-count drift >= proof bound on %zu / %zu random states in "
                            "the bounded-mass region",
                            ok, trials));
    return res;
}

inline ValidationResult drift_audit_thm44(unsigned) {
    ValidationResult res{"drift_audit_thm44"};
    const double alpha = 1.5, beta = 0.5, size_floor = 1.0;
    RandomStream pick(303, 0, StreamTag::kProbe);
    std::size_t ok = 0;
    const std::size_t trials = 100;
    for (std::size_t t = 0; t < trials; ++t) {
        ParticleSystem xi;
        xi.n = 1 + static_cast<std::uint64_t>(pick.uniform() * 4.0);
        const auto L = 1 + static_cast<std::size_t>(pick.uniform() * 8.0);
        for (std::size_t i = 0; i < L; ++i) xi.sizes.push_back(size_floor * (1.0 + 3.0 * pick.uniform()));

        MassFlowConfig cfg;
        cfg.n = xi.n;
        cfg.coag = product_power_kernel(0.75);
        auto law = build_law(cfg);
        TestFunction<ParticleSystem> eta{[beta](const ParticleSystem& s) { return -moment(s, -beta); },
                                         16.0};
        auto rep = drift(law, xi, eta, 1, derive_seed(304, t));
        const double n = static_cast<double>(xi.n);
        const double epsilon = (1.0 - std::exp2(-beta)) * static_cast<double>(L) *
                               std::pow(size_floor, alpha - 1.0 - beta) / (n * n);
        if (rep.exact && rep.estimate >= epsilon * (1.0 - 1e-9)) ++ok;
    }
    res.pass = ok == trials;
    res.lines.push_back(fmt("power-tail drift >= (1 - 2^-beta) Kbar(1,1) L C^(a-1-b) / n^2 on "
                            "%zu / %zu states",
                            ok, trials));
    return res;
}

inline ValidationResult drift_audit_thm47(unsigned) {
    ValidationResult res{"drift_audit_thm47"};
    const double c_f = 0.5, alpha = 1.0, gamma = 2.0 / (alpha + 2.0), size_cap = 1.0;
    RandomStream pick(305, 0, StreamTag::kProbe);
    std::size_t ok = 0;
    const std::size_t trials = 100;
    for (std::size_t t = 0; t < trials; ++t) {
        ParticleSystem xi;
        xi.n = 1 + static_cast<std::uint64_t>(pick.uniform() * 4.0);
        const auto L = 1 + static_cast<std::size_t>(pick.uniform() * 8.0);
        for (std::size_t i = 0; i < L; ++i) xi.sizes.push_back(size_cap * pick.uniform_open());

        MassFlowConfig cfg;
        cfg.n = xi.n;
        cfg.mf_frag = massflow_from_frag(uniform_binary([](double x) { return 1.0 / x; }));
        auto law = build_law(cfg);
        TestFunction<ParticleSystem> eta{[alpha](const ParticleSystem& s) { return -moment(s, alpha); },
                                         16.0};
        auto rep = drift(law, xi, eta, 20'000, derive_seed(306, t));
        const double n = static_cast<double>(xi.n);
        const double epsilon = c_f * (1.0 - gamma) * static_cast<double>(L) / n;
        if (rep.estimate + 4.0 * rep.std_error >= epsilon * (1.0 - 1e-9)) ++ok;
    }
    res.pass = ok == trials;
    res.lines.push_back(fmt("negative-moment drift >= C_F (1 - gamma) L / n on %zu / %zu states", ok,
                            trials));
    return res;
}

// --- criterion 9: martingale diagnostic over the two-particle chain --------

inline ValidationResult martingale_mf2(unsigned workers) {
    ValidationResult res{"martingale_mf2"};
    MassFlowConfig cfg;
    cfg.n = 2;
    cfg.coag = multiplicative_kernel();
    // bounded eta adapted to the growth: saturating in the total mass, so the
    // per-step increments are well conditioned for the z test
    TestFunction<ParticleSystem> eta{[](const ParticleSystem& s) {
                                         const double m = moment(s, 1.0);
                                         return m / (1.0 + m);
                                     },
                                     1.0};

    const std::size_t steps = 50;
    const std::uint64_t reps = 1'000;
    auto increments = run_replicates(reps, workers, [&](std::uint64_t r) {
        auto law = build_law(cfg);
        auto stop = particle_stop(steps + 1, 1e300, 1e300, cfg.guards);
        SimulateOptions<ParticleSystem> opt;
        opt.replicate = r;
        auto traj = simulate_chain(law, ParticleSystem{2, {1.0, 1.0}}, derive_seed(111, r), stop, opt);
        auto w = martingale_statistic(traj, law, eta, 1, derive_seed(112, r));
        std::vector<double> inc(steps, 0.0);
        for (std::size_t k = 0; k < steps; ++k) inc[k] = w[k + 1] - w[k];
        return inc;
    });

    std::size_t violations = 0;
    double worst = 0.0;
    for (std::size_t k = 0; k < steps; ++k) {
        MeanAccumulator acc;
        for (const auto& inc : increments) acc.add(inc[k]);
        const double z = acc.std_error() > 0.0 ? std::fabs(acc.mean()) / acc.std_error()
                                               : (acc.mean() == 0.0 ? 0.0 : 1e9);
        worst = std::fmax(worst, z);
        if (z > 4.0) ++violations;
    }
    res.pass = violations == 0;
    res.lines.push_back(fmt("per-step martingale increment means for n <= 50: worst |z| = %.2f "
                            "(threshold 4), violations %zu",
                            worst, violations));
    return res;
}

// --- criterion 10: gelation-time experiment (report only) ------------------

inline ValidationResult gelation_report(unsigned workers) {
    ValidationResult res{"gelation_report"};
    res.report_only = true;
    res.pass = true;
    const double t_gel = gel_time_multiplicative(1.0);
    for (std::size_t n : {std::size_t{100}, std::size_t{1000}}) {
        MassFlowConfig cfg;
        cfg.n = n;
        cfg.coag = multiplicative_kernel();
        const std::uint64_t reps = n >= 1000 ? 100 : 400;
        auto rows = run_replicates(reps, workers, [&cfg, n](std::uint64_t r) {
            auto law = build_law(cfg);
            auto stop = particle_stop(10'000'000, 1e300, 1e12, cfg.guards);
            auto traj = simulate_chain(law, ParticleSystem{n, std::vector<double>(n, 1.0)},
                                       derive_seed(113, r), stop, {r, false, nullptr});
            return make_row(r, classify(traj, stop));
        });
        auto agg = aggregate_rows(rows);
        res.lines.push_back(fmt("n = %zu: explosion times vs gel time %.2f -> mean %.4f, "
                                "q05 %.4f, q50 %.4f, q95 %.4f (%llu replicates)",
                                n, t_gel, agg.tau_mean, agg.tau_q05, agg.tau_q50, agg.tau_q95,
                                (unsigned long long)agg.replicates));
    }
    return res;
}

}  // namespace validation_detail

inline std::vector<std::string> validation_names() {
    return {"mf1_mean_tau",     "mf1_sqrt_no_explosion", "ex410_x0_1",        "ex410_x0_2",
            "ex411_chain",      "ex411_tau1000",         "thm43_explosion",   "thm43_cauchy",
            "thm42_regularity", "thm44_explosion",       "const_kernel_tv",   "massflow_hydro",
            "drift_audit_thm43", "drift_audit_thm44",    "drift_audit_thm47", "martingale_mf2",
            "gelation_report"};
}

inline ValidationResult run_validation(const std::string& name, unsigned workers) {
    using namespace validation_detail;
    if (name == "mf1_mean_tau") return mf1_mean_tau(workers);
    if (name == "mf1_sqrt_no_explosion") return mf1_sqrt_no_explosion(workers);
    if (name == "ex410_x0_1") return ex410_dichotomy(1.0, workers);
    if (name == "ex410_x0_2") return ex410_dichotomy(2.0, workers);
    if (name == "ex411_chain") return ex411_chain(workers);
    if (name == "ex411_tau1000") return ex411_tau1000(workers);
    if (name == "thm43_explosion") return thm43_explosion(workers);
    if (name == "thm43_cauchy") return thm43_cauchy(workers);
    if (name == "thm42_regularity") return thm42_regularity(workers);
    if (name == "thm44_explosion") return thm44_explosion(workers);
    if (name == "const_kernel_tv") return const_kernel_tv(workers);
    if (name == "massflow_hydro") return massflow_hydro(workers);
    if (name == "drift_audit_thm43") return drift_audit_thm43(workers);
    if (name == "drift_audit_thm44") return drift_audit_thm44(workers);
    if (name == "drift_audit_thm47") return drift_audit_thm47(workers);
    if (name == "martingale_mf2") return martingale_mf2(workers);
    if (name == "gelation_report") return gelation_report(workers);
    throw UsageError("unknown validation '" + name + "'");
}

}  // namespace coagfrag
