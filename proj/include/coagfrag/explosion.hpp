#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include "coagfrag/jump_process.hpp"

namespace coagfrag {

enum class VerdictKind { kExploded, kSurvived, kAbsorbed, kInconclusive };

inline const char* to_string(VerdictKind k) {
    switch (k) {
        case VerdictKind::kExploded: return "Exploded";
        case VerdictKind::kSurvived: return "Survived";
        case VerdictKind::kAbsorbed: return "Absorbed";
        case VerdictKind::kInconclusive: return "Inconclusive";
    }
    return "?";
}

/// Classification of a finite run. `tau_lower` is the last recorded jump
/// time (a lower bound on any explosion time); `tau_estimate` adds a
/// geometric extrapolation of the remaining inverse-rate tail.
struct ExplosionVerdict {
    VerdictKind kind = VerdictKind::kInconclusive;
    double tau_lower = std::numeric_limits<double>::quiet_NaN();
    double tau_estimate = std::numeric_limits<double>::quiet_NaN();
    double t_final = std::numeric_limits<double>::quiet_NaN();
    // diagnostics
    double terminal_rate = 0.0;
    std::uint64_t jumps = 0;
    double tail_slope = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

/// Least-squares slope of log(rate) over the last `window` entries.
inline double log_rate_slope(const std::vector<double>& rates, std::size_t window) {
    const std::size_t m = rates.size();
    const std::size_t w = window < m ? window : m;
    if (w < 2) return std::numeric_limits<double>::quiet_NaN();
    const std::size_t start = m - w;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < w; ++k) {
        const double x = static_cast<double>(k);
        const double y = std::log(rates[start + k]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = static_cast<double>(w);
    const double denom = n * sxx - sx * sx;
    return (n * sxy - sx * sy) / denom;
}

/// Predicted remaining sum of 1/rate assuming rates keep growing
/// geometrically at slope g: sum_{m>=1} exp(-g m)/rate_J = 1/(rate_J (e^g - 1)).
inline double geometric_tail(double terminal_rate, double slope) {
    if (!(slope > 0.0)) return std::numeric_limits<double>::infinity();
    return 1.0 / (terminal_rate * std::expm1(slope));
}

}  // namespace detail

/// Turns a truncated run into a verdict. Absorption is read off the terminal
/// rate; a guard or rate-ceiling stop is explosion material with the tail of
/// the jump-time series extrapolated from the recent rate growth (the fit
/// window is clamped to the available history); a horizon stop is Survived
/// only when the fitted tail exceeds `tail_tol` and at least `tail_window`
/// rates back the fit. Everything else stays Inconclusive.
template <class State>
ExplosionVerdict classify(const Trajectory<State>& traj, const StopRule<State>& stop,
                          std::size_t tail_window = 64, double tail_tol = 1e-6) {
    ExplosionVerdict v;
    v.terminal_rate = traj.terminal_rate();
    v.jumps = traj.jumps();
    v.tail_slope = detail::log_rate_slope(traj.rates, tail_window);

    if (traj.terminal_rate() == 0.0) {
        v.kind = VerdictKind::kAbsorbed;
        v.t_final = traj.final_time();
        return v;
    }

    switch (traj.stop_reason) {
        case StopReason::kGuard:
        case StopReason::kRateCeiling: {
            v.kind = VerdictKind::kExploded;
            v.tau_lower = traj.final_time();
            const double tail = std::isnan(v.tail_slope)
                                    ? 0.0
                                    : detail::geometric_tail(traj.terminal_rate(), v.tail_slope);
            v.tau_estimate = v.tau_lower + (std::isfinite(tail) ? tail : 0.0);
            return v;
        }
        case StopReason::kHorizon: {
            if (traj.rates.size() < tail_window) {
                v.kind = VerdictKind::kInconclusive;
                v.tau_lower = traj.final_time();
                return v;
            }
            const double tail = detail::geometric_tail(traj.terminal_rate(), v.tail_slope);
            if (tail > tail_tol) {
                v.kind = VerdictKind::kSurvived;
                v.t_final = stop.time_horizon;
            } else {
                v.kind = VerdictKind::kInconclusive;
                v.tau_lower = traj.final_time();
            }
            return v;
        }
        case StopReason::kMaxJumps:
        case StopReason::kAbsorbed:
        default: {
            v.kind = VerdictKind::kInconclusive;
            v.tau_lower = traj.final_time();
            return v;
        }
    }
}

}  // namespace coagfrag
