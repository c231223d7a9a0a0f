#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "coagfrag/errors.hpp"
#include "coagfrag/kernels.hpp"

namespace coagfrag {

/// Number (or mass) densities of the truncated discrete equations on sizes
/// 1..xmax. Coagulation products past xmax are dropped; the cumulative loss
/// is tracked so tests can bound its effect.
struct TruncatedDensities {
    std::size_t xmax = 0;
    std::vector<double> c;  ///< index 0 unused; c[x] for x = 1..xmax
    double t = 0.0;
    double truncation_flux = 0.0;  ///< cumulative mass (number-density eq.) or number (mass-density eq.) lost

    double number() const {
        double s = 0.0;
        for (std::size_t x = 1; x <= xmax; ++x) s += c[x];
        return s;
    }
    double mass() const {
        double s = 0.0;
        for (std::size_t x = 1; x <= xmax; ++x) s += static_cast<double>(x) * c[x];
        return s;
    }
};

namespace detail {

/// Classical fixed-step fourth-order Runge-Kutta on (densities, lost) with a
/// kernel table evaluated once.
template <class Rhs>
void rk4_integrate(std::vector<double>& state, double t_final, double dt, Rhs&& rhs) {
    if (!(dt > 0.0)) throw UsageError("ode integrator: dt must be positive");
    const std::size_t dim = state.size();
    std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
    double t = 0.0;
    while (t < t_final) {
        const double h = std::fmin(dt, t_final - t);
        rhs(state, k1);
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = state[i] + 0.5 * h * k1[i];
        rhs(tmp, k2);
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = state[i] + 0.5 * h * k2[i];
        rhs(tmp, k3);
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = state[i] + h * k3[i];
        rhs(tmp, k4);
        for (std::size_t i = 0; i < dim; ++i) {
            state[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        t += h;
        for (std::size_t x = 0; x + 1 < dim; ++x) {
            if (state[x] < -1e-9) throw ModelError("ode integrator: negative density, reduce dt");
        }
    }
}

inline std::vector<std::vector<double>> kernel_table(const CoagKernel& kernel, std::size_t xmax) {
    std::vector<std::vector<double>> k(xmax + 1, std::vector<double>(xmax + 1, 0.0));
    for (std::size_t x = 1; x <= xmax; ++x) {
        for (std::size_t y = 1; y <= xmax; ++y) {
            k[x][y] = kernel(static_cast<double>(x), static_cast<double>(y));
        }
    }
    return k;
}

}  // namespace detail

/// Truncated discrete coagulation equation for the number density c(t, x):
/// gain (1/2) sum_{y<x} K(x-y,y) c(x-y) c(y), loss sum_{y<=xmax} K(x,y) c(x) c(y).
inline TruncatedDensities smoluchowski_ode(const CoagKernel& kernel, std::vector<double> c0,
                                           std::size_t xmax, double t, double dt = 1e-3) {
    if (xmax < 1) throw UsageError("smoluchowski_ode: xmax must be >= 1");
    c0.resize(xmax + 1, 0.0);
    const auto k = detail::kernel_table(kernel, xmax);

    // state = [c(1..xmax), lost mass]; index 0 carries nothing
    std::vector<double> state(c0.begin(), c0.end());
    state.push_back(0.0);
    auto rhs = [&](const std::vector<double>& s, std::vector<double>& ds) {
        std::fill(ds.begin(), ds.end(), 0.0);
        for (std::size_t a = 1; a <= xmax; ++a) {
            if (s[a] == 0.0) continue;
            for (std::size_t b = 1; b <= xmax; ++b) {
                const double w = k[a][b] * s[a] * s[b];
                ds[a] -= w;
                if (a + b <= xmax) {
                    ds[a + b] += 0.5 * w;
                } else {
                    ds[xmax + 1] += 0.5 * static_cast<double>(a + b) * w;  // mass past xmax
                }
            }
        }
    };
    detail::rk4_integrate(state, t, dt, rhs);

    TruncatedDensities out;
    out.xmax = xmax;
    out.t = t;
    out.truncation_flux = state.back();
    state.pop_back();
    out.c = std::move(state);
    return out;
}

/// Truncated discrete mass flow equation for the mass density c~(t, x):
/// gain sum_{y<x} (K(x-y,y)/y) c~(x-y) c~(y), loss sum_{y<=xmax} (K(x,y)/y) c~(x) c~(y).
/// Satisfies c~(t, x) = x c(t, x) against the number-density equation.
inline TruncatedDensities massflow_ode(const CoagKernel& kernel, std::vector<double> ct0,
                                       std::size_t xmax, double t, double dt = 1e-3) {
    if (xmax < 1) throw UsageError("massflow_ode: xmax must be >= 1");
    ct0.resize(xmax + 1, 0.0);
    const auto k = detail::kernel_table(kernel, xmax);

    std::vector<double> state(ct0.begin(), ct0.end());
    state.push_back(0.0);
    auto rhs = [&](const std::vector<double>& s, std::vector<double>& ds) {
        std::fill(ds.begin(), ds.end(), 0.0);
        for (std::size_t a = 1; a <= xmax; ++a) {
            if (s[a] == 0.0) continue;
            for (std::size_t b = 1; b <= xmax; ++b) {
                const double w = k[a][b] / static_cast<double>(b) * s[a] * s[b];
                ds[a] -= w;
                if (a + b <= xmax) {
                    ds[a + b] += w;
                } else {
                    ds[xmax + 1] += w;  // number density lost past xmax
                }
            }
        }
    };
    detail::rk4_integrate(state, t, dt, rhs);

    TruncatedDensities out;
    out.xmax = xmax;
    out.t = t;
    out.truncation_flux = state.back();
    state.pop_back();
    out.c = std::move(state);
    return out;
}

/// Gel time of the multiplicative kernel K = xy: the second moment solves
/// m2' = m2^2, blowing up at 1/m2(0).
inline double gel_time_multiplicative(double m2_0) {
    if (!(m2_0 > 0.0)) throw UsageError("gel_time_multiplicative: m2(0) must be positive");
    return 1.0 / m2_0;
}

/// Expected explosion time of the single-particle mass flow coagulation
/// chain with a homogeneous kernel of exponent alpha > 1: rates 2^{k(alpha-1)}
/// sum to the geometric series 1/(1 - 2^{1-alpha}).
inline double mf1_expected_explosion_time(double alpha) {
    if (!(alpha > 1.0)) throw UsageError("mf1_expected_explosion_time: diverges for alpha <= 1");
    return 1.0 / (1.0 - std::exp2(1.0 - alpha));
}

/// Probability that the shifted-half fragmentation chain started at x0 > 1/2
/// follows the slowest-decrease path forever (never reaches 1/2).
inline double ex410_nonexplosion_prob(double x0) {
    if (!(x0 > 0.5)) throw UsageError("ex410_nonexplosion_prob: requires x0 > 1/2");
    return 1.0 / (2.0 * x0);
}

/// k-th value of the slowest-decrease path: (2 x0 + 2^k - 1) / 2^{k+1}.
inline double ex410_slowest_path(double x0, std::size_t k) {
    if (!(x0 > 0.5)) throw UsageError("ex410_slowest_path: requires x0 > 1/2");
    return 0.5 + (x0 - 0.5) / std::exp2(static_cast<double>(k));
}

/// Waiting-time parameter of the halving chain with rate 1 - ln x:
/// lambda_k = (k ln 2 + 1)/2, whose inverse sums diverge harmonically.
inline double ex411_rate(std::size_t k) {
    return 0.5 * (static_cast<double>(k) * std::log(2.0) + 1.0);
}

/// k-th state of the alternating two-particle growth path
/// (1,1) -> (1,2) -> (3,2) -> (3,5) -> (8,5) -> ... (consecutive Fibonacci numbers).
inline std::pair<double, double> fibonacci_path(std::size_t k) {
    double x = 1.0, y = 1.0;
    for (std::size_t step = 1; step <= k; ++step) {
        if (step % 2 == 1) {
            y += x;
        } else {
            x += y;
        }
    }
    return {x, y};
}

}  // namespace coagfrag
