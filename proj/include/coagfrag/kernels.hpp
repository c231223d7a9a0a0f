#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "coagfrag/errors.hpp"
#include "coagfrag/random.hpp"

namespace coagfrag {

// ---------------------------------------------------------------------------
// Coagulation kernels
// ---------------------------------------------------------------------------

struct CoagKernel {
    std::function<double(double, double)> eval;
    std::optional<double> homogeneity;  ///< declared exponent alpha, when known
    std::string name = "custom";

    double operator()(double x, double y) const {
        const double v = eval(x, y);
        if (!std::isfinite(v) || v < 0.0) throw ModelError("coagulation kernel: invalid value");
        return v;
    }
};

/// Symmetrized kernel (x,y) -> [K(x,y) + K(y,x)] / 2.
inline CoagKernel sym_coag(CoagKernel k) {
    CoagKernel s;
    s.homogeneity = k.homogeneity;
    s.name = "sym(" + k.name + ")";
    s.eval = [inner = std::move(k.eval)](double x, double y) {
        return 0.5 * (inner(x, y) + inner(y, x));
    };
    return s;
}

struct HomogeneityProbe {
    double c, x, y;
};

/// True iff K(cx, cy) == c^alpha K(x, y) to relative 1e-9 at all probes.
inline bool homogeneity_check(const CoagKernel& k, double alpha, std::span<const HomogeneityProbe> probes) {
    for (const auto& p : probes) {
        if (!(p.c > 0.0)) throw UsageError("homogeneity_check: probes need c > 0");
        const double scaled = std::pow(p.c, alpha) * k(p.x, p.y);
        if (std::fabs(k(p.c * p.x, p.c * p.y) - scaled) > 1e-9 * scaled) return false;
    }
    return true;
}

inline CoagKernel constant_kernel(double c) {
    return {[c](double, double) { return c; }, 0.0, "constant"};
}

inline CoagKernel additive_kernel(double c = 1.0) {
    return {[c](double x, double y) { return c * (x + y); }, 1.0, "additive"};
}

inline CoagKernel multiplicative_kernel(double c = 1.0) {
    return {[c](double x, double y) { return c * x * y; }, 2.0, "multiplicative"};
}

/// K(x, y) = c (xy)^beta, homogeneous with alpha = 2 beta.
inline CoagKernel product_power_kernel(double beta, double c = 1.0) {
    return {[c, beta](double x, double y) { return c * std::pow(x * y, beta); }, 2.0 * beta,
            "product_power"};
}

// ---------------------------------------------------------------------------
// Fragmentation laws
// ---------------------------------------------------------------------------

/// Closed-form description of the symmetrized fragment intensity
/// F_sym^(1)(x, .): point atoms plus a constant density on (0, x).
struct SymMarginal {
    struct Atom {
        double y;
        double weight;
    };
    double x = 0.0;
    std::vector<Atom> atoms;
    double uniform_density = 0.0;

    /// Total intensity F_sym^(1)(x, X).
    double total() const {
        double s = uniform_density * x;
        for (const auto& a : atoms) s += a.weight;
        return s;
    }

    /// Integral of y^p against the marginal.
    double moment(double p) const {
        double s = uniform_density * std::pow(x, p + 1.0) / (p + 1.0);
        for (const auto& a : atoms) s += a.weight * std::pow(a.y, p);
        return s;
    }
};

/// A fragmentation mechanism F: total rate F(x, Z) plus a mass-conserving
/// fragment-list sampler. The kernel itself lives on the disjoint union of
/// all fragment counts, so integrals against it are generally Monte Carlo;
/// binary laws attach their 1-marginal in closed form.
struct FragLaw {
    std::string name = "custom";
    std::function<double(double)> total_rate;  ///< F(x, Z)
    std::function<std::vector<double>(double, RandomStream&)> sample_fragments;
    std::function<SymMarginal(double)> marginal_closed_form;  ///< null when unavailable

    double rate(double x) const {
        const double r = total_rate(x);
        if (!std::isfinite(r) || r < 0.0) throw ModelError("fragmentation law: invalid total rate");
        return r;
    }

    std::vector<double> fragments(double x, RandomStream& rng) const {
        auto z = sample_fragments(x, rng);
        if (z.size() < 2) throw ModelError("fragmentation law: fewer than two fragments");
        double sum = 0.0;
        for (double zi : z) {
            if (!(zi > 0.0) || !(zi < x)) throw ModelError("fragmentation law: fragment outside (0, x)");
            sum += zi;
        }
        if (std::fabs(sum - x) > 1e-12 * x) throw ModelError("fragmentation law: fragments do not conserve mass");
        return z;
    }
};

/// Uniform binary fragmentation: F(x, Z) = Fbar(x)/2, fragments (y, x - y)
/// with y uniform on (0, x); the 1-marginal has density Fbar(x)/x on (0, x).
inline FragLaw uniform_binary(std::function<double(double)> rate_fn) {
    FragLaw law;
    law.name = "uniform_binary";
    law.total_rate = [rate_fn](double x) { return 0.5 * rate_fn(x); };
    law.sample_fragments = [](double x, RandomStream& rng) {
        double y = x * rng.uniform();
        if (!(y > 0.0) || !(y < x)) y = 0.5 * x;  // measure-zero edge of the open interval
        return std::vector<double>{y, x - y};
    };
    law.marginal_closed_form = [rate_fn](double x) {
        SymMarginal m;
        m.x = x;
        m.uniform_density = rate_fn(x) / x;
        return m;
    };
    return law;
}

/// Deterministic binary fragmentation into (kappa(x), x - kappa(x)) at total
/// rate Fbar(x)/2. The marginal is the two-point law of weight Fbar(x)/2 at
/// each piece (merged when the pieces coincide).
inline FragLaw deterministic_binary(std::function<double(double)> rate_fn,
                                    std::function<double(double)> kappa_fn) {
    auto kappa = [kappa_fn](double x) {
        const double k = kappa_fn(x);
        if (!(k > 0.0) || !(k <= x)) throw ModelError("deterministic_binary: kappa outside (0, x]");
        return k;
    };
    FragLaw law;
    law.name = "deterministic_binary";
    law.total_rate = [rate_fn](double x) { return 0.5 * rate_fn(x); };
    law.sample_fragments = [kappa](double x, RandomStream&) {
        const double k = kappa(x);
        if (k == x) throw ModelError("deterministic_binary: degenerate split kappa(x) == x");
        return std::vector<double>{k, x - k};
    };
    law.marginal_closed_form = [rate_fn, kappa](double x) {
        SymMarginal m;
        m.x = x;
        const double k = kappa(x);
        const double w = 0.5 * rate_fn(x);
        if (k == x - k) {
            m.atoms = {{k, 2.0 * w}};
        } else {
            m.atoms = {{k, w}, {x - k, w}};
        }
        return m;
    };
    return law;
}

/// Closed-form F_sym^(1)(x, .) of a binary law.
inline SymMarginal binary_sym_marginal(const FragLaw& law, double x) {
    if (!law.marginal_closed_form) {
        throw UsageError("binary_sym_marginal: law has no closed-form 1-marginal");
    }
    return law.marginal_closed_form(x);
}

/// Monte Carlo estimate of int phi(y) F_sym^(1)(x, dy) as
/// F(x, Z) * mean over fragment lists of sum_i phi(z_i).
inline std::pair<double, double> marginal_intensity_mc(const FragLaw& law, double x,
                                                       const std::function<double(double)>& phi,
                                                       std::size_t samples, std::uint64_t seed) {
    if (samples < 1) throw UsageError("marginal_intensity_mc: samples must be >= 1");
    RandomStream rng(seed, 0, StreamTag::kProbe);
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t m = 0; m < samples; ++m) {
        double v = 0.0;
        for (double z : law.fragments(x, rng)) v += phi(z);
        sum += v;
        sum_sq += v * v;
    }
    const double rate = law.rate(x);
    const double mean = sum / static_cast<double>(samples);
    double var = 0.0;
    if (samples > 1) {
        var = (sum_sq - sum * mean) / static_cast<double>(samples - 1);
        if (var < 0.0) var = 0.0;
    }
    return {rate * mean, rate * std::sqrt(var / static_cast<double>(samples))};
}

// ---------------------------------------------------------------------------
// Mass flow fragment law
// ---------------------------------------------------------------------------

/// Mass-biased single-fragment law F~(x, dy) = (y/x) F_sym^(1)(x, dy):
/// same total rate as the underlying law, next size in (0, x].
struct MassFlowFragLaw {
    std::string name = "custom";
    std::function<double(double)> total_rate;  ///< F~(x, X) == F(x, Z)
    std::function<double(double, RandomStream&)> sample_next;

    double rate(double x) const {
        const double r = total_rate(x);
        if (!std::isfinite(r) || r < 0.0) throw ModelError("mass flow fragment law: invalid total rate");
        return r;
    }

    double next(double x, RandomStream& rng) const {
        const double y = sample_next(x, rng);
        if (!(y > 0.0) || !(y <= x)) throw ModelError("mass flow fragment law: next size outside (0, x]");
        return y;
    }
};

/// Derives the mass flow fragment law. With a closed-form 1-marginal the
/// next size is drawn exactly from the mass-biased marginal (atoms weighted
/// by y * w, the uniform-density part by inverse-CDF x sqrt(u)); otherwise a
/// fragment list is sampled and one piece is picked with probability
/// proportional to its mass.
inline MassFlowFragLaw massflow_from_frag(const FragLaw& law) {
    MassFlowFragLaw mf;
    mf.name = "massflow(" + law.name + ")";
    mf.total_rate = law.total_rate;
    if (law.marginal_closed_form) {
        mf.sample_next = [closed = law.marginal_closed_form](double x, RandomStream& rng) {
            const SymMarginal m = closed(x);
            const double density_mass = m.uniform_density * 0.5 * x * x;  // int y * d dy on (0, x)
            double total_mass = density_mass;
            for (const auto& a : m.atoms) total_mass += a.y * a.weight;
            if (!(total_mass > 0.0)) throw ModelError("massflow_from_frag: degenerate marginal");
            double r = rng.uniform() * total_mass;
            for (const auto& a : m.atoms) {
                const double w = a.y * a.weight;
                if (r < w) return a.y;
                r -= w;
            }
            if (density_mass > 0.0) {
                double y = x * std::sqrt(rng.uniform());  // density 2y/x^2 on (0, x)
                if (!(y > 0.0)) y = 0.5 * x;
                return y;
            }
            return m.atoms.back().y;  // float residue of the linear scan
        };
    } else {
        mf.sample_next = [law](double x, RandomStream& rng) {
            const auto z = law.fragments(x, rng);
            double total = 0.0;
            for (double zi : z) total += zi;
            double r = rng.uniform() * total;
            for (double zi : z) {
                if (r < zi) return zi;
                r -= zi;
            }
            return z.back();
        };
    }
    return mf;
}

/// Monte Carlo mean of (Y/x)^alpha under the normalized next-size law.
inline std::pair<double, double> massflow_moment_ratio(const MassFlowFragLaw& mf, double x, double alpha,
                                                       std::size_t samples, std::uint64_t seed) {
    if (!(alpha > 0.0)) throw UsageError("massflow_moment_ratio: alpha must be positive");
    if (samples < 1) throw UsageError("massflow_moment_ratio: samples must be >= 1");
    RandomStream rng(seed, 0, StreamTag::kProbe);
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t m = 0; m < samples; ++m) {
        const double v = std::pow(mf.next(x, rng) / x, alpha);
        sum += v;
        sum_sq += v * v;
    }
    const double mean = sum / static_cast<double>(samples);
    double var = 0.0;
    if (samples > 1) {
        var = (sum_sq - sum * mean) / static_cast<double>(samples - 1);
        if (var < 0.0) var = 0.0;
    }
    return {mean, std::sqrt(var / static_cast<double>(samples))};
}

/// Verifies the mass identity F(x, Z) = (1/x) int y F_sym^(1)(x, dy):
/// exactly for closed-form marginals, within 4 standard errors otherwise.
inline bool mass_identity_check(const FragLaw& law, double x, std::size_t samples, std::uint64_t seed) {
    const double rate = law.rate(x);
    if (law.marginal_closed_form) {
        const double lhs = law.marginal_closed_form(x).moment(1.0) / x;
        return std::fabs(lhs - rate) <= 1e-9 * std::fmax(rate, lhs);
    }
    const auto [est, se] = marginal_intensity_mc(law, x, [](double y) { return y; }, samples, seed);
    return std::fabs(est / x - rate) <= 4.0 * se / x + 1e-12 * rate;
}

// ---------------------------------------------------------------------------
// Source and efflux terms
// ---------------------------------------------------------------------------

/// Bounded source measure S: total mass, size sampler, first moment and an
/// upper size bound (needed for mass-biased sampling by rejection).
struct SourceTerm {
    std::string name = "custom";
    double total = 0.0;         ///< S(X)
    double first_moment = 0.0;  ///< int x S(dx)
    double max_size = 0.0;      ///< supremum of the support
    std::function<double(RandomStream&)> sampler;

    /// Draw from the mass-biased law x S(dx) / int x S(dx) by rejection.
    double sample_mass_biased(RandomStream& rng) const {
        if (!(max_size > 0.0)) throw ModelError("source term: mass-biased sampling needs max_size");
        for (int tries = 0; tries < 1'000'000; ++tries) {
            const double x = sampler(rng);
            if (x > max_size) throw ModelError("source term: sample exceeded declared max_size");
            if (rng.uniform() * max_size < x) return x;
        }
        throw ModelError("source term: mass-biased rejection sampling stalled");
    }
};

inline SourceTerm point_source(double total, double x) {
    if (!(total >= 0.0) || !(x > 0.0)) throw UsageError("point_source: need total >= 0 and x > 0");
    SourceTerm s;
    s.name = "point";
    s.total = total;
    s.first_moment = total * x;
    s.max_size = x;
    s.sampler = [x](RandomStream&) { return x; };
    return s;
}

/// Finitely many atoms (x_k, weight_k).
inline SourceTerm discrete_source(std::vector<std::pair<double, double>> atoms) {
    if (atoms.empty()) throw UsageError("discrete_source: needs at least one atom");
    SourceTerm s;
    s.name = "discrete";
    for (const auto& [x, w] : atoms) {
        if (!(x > 0.0) || !(w >= 0.0)) throw UsageError("discrete_source: invalid atom");
        s.total += w;
        s.first_moment += w * x;
        s.max_size = std::fmax(s.max_size, x);
    }
    s.sampler = [atoms, total = s.total](RandomStream& rng) {
        double r = rng.uniform() * total;
        for (const auto& [x, w] : atoms) {
            if (r < w) return x;
            r -= w;
        }
        return atoms.back().first;
    };
    return s;
}

struct EffluxFn {
    std::string name = "custom";
    std::function<double(double)> eval;

    double operator()(double x) const {
        const double e = eval(x);
        if (!std::isfinite(e) || e < 0.0) throw ModelError("efflux intensity: invalid value");
        return e;
    }
};

inline EffluxFn power_efflux(double c, double p) {
    return {"power", [c, p](double x) { return c * std::pow(x, p); }};
}

}  // namespace coagfrag
