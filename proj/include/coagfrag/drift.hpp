#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <type_traits>
#include <vector>

#include "coagfrag/errors.hpp"
#include "coagfrag/jump_process.hpp"
#include "coagfrag/random.hpp"

namespace coagfrag {

/// A bounded measurable test function. Boundedness is checked on every
/// probed state because the criteria are meaningless for unbounded eta.
template <class State>
struct TestFunction {
    std::function<double(const State&)> eval;
    double bound = 1.0;

    double operator()(const State& s) const {
        const double v = eval(s);
        if (!(std::fabs(v) <= bound)) {
            throw ModelError("test function exceeded its declared bound");
        }
        return v;
    }
};

/// Estimate of the drift integral of eta out of one state:
/// int [eta(xi1) - eta(xi)] q(xi, d xi1).
struct DriftReport {
    double estimate = 0.0;
    double std_error = 0.0;
    bool exact = false;

    /// Membership of the drift trap set at level epsilon, conservatively
    /// shrunk by twice the standard error of the estimate.
    bool epsilon_member(double epsilon) const { return estimate - 2.0 * std_error >= epsilon; }
};

/// Drift of `eta` at `state`. Exact (weighted sum over enumerated successors)
/// when the law exposes fully enumerable atoms; otherwise a Monte Carlo
/// estimate rate * mean[eta(next) - eta(state)] over `mc_samples` draws from
/// a dedicated stream, so trajectory reproducibility is never perturbed.
template <class State>
DriftReport drift(const ProcessLaw<State>& law, const std::type_identity_t<State>& state,
                  const TestFunction<State>& eta, std::size_t mc_samples, std::uint64_t seed) {
    const double lam = detail::checked_rate(law.rate(state));
    if (lam == 0.0) return {0.0, 0.0, true};

    const double eta_here = eta(state);
    if (law.has_atoms()) {
        auto atoms = law.atoms(state);
        double weight_sum = 0.0;
        bool enumerable = true;
        for (const auto& a : atoms) {
            weight_sum += a.weight;
            enumerable = enumerable && a.successor.has_value();
        }
        if (std::fabs(weight_sum - lam) > 1e-12 * std::fmax(weight_sum, lam)) {
            throw ModelError("process law: atom weights do not sum to the rate");
        }
        if (enumerable) {
            double est = 0.0;
            for (const auto& a : atoms) est += a.weight * (eta(*a.successor) - eta_here);
            return {est, 0.0, true};
        }
    }

    if (mc_samples < 1) throw UsageError("drift: mc_samples must be >= 1 for sampled laws");
    RandomStream rng(seed, 0, StreamTag::kDrift);
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t m = 0; m < mc_samples; ++m) {
        const double d = eta(law.sample_next(state, rng)) - eta_here;
        sum += d;
        sum_sq += d * d;
    }
    const double mean = sum / static_cast<double>(mc_samples);
    double var = 0.0;
    if (mc_samples > 1) {
        var = (sum_sq - sum * mean) / static_cast<double>(mc_samples - 1);
        if (var < 0.0) var = 0.0;
    }
    const double se = std::sqrt(var / static_cast<double>(mc_samples));
    return {lam * mean, lam * se, false};
}

/// For each probed state, whether it lies in the trap set E_eps(eta).
template <class State>
std::vector<bool> check_region_criterion(const ProcessLaw<State>& law, const std::vector<State>& states,
                                         const TestFunction<State>& eta, double epsilon,
                                         std::size_t mc_samples, std::uint64_t seed) {
    if (!(epsilon > 0.0)) throw UsageError("check_region_criterion: epsilon must be positive");
    std::vector<bool> member;
    member.reserve(states.size());
    for (std::size_t k = 0; k < states.size(); ++k) {
        member.push_back(
            drift(law, states[k], eta, mc_samples, derive_seed(seed, k)).epsilon_member(epsilon));
    }
    return member;
}

/// Martingale diagnostic W_n = sum_{k<n} [E(eta(Z_{k+1})|Z_k) - eta(Z_k)] - eta(Z_n)
/// along a recorded trajectory; conditional expectations come from drift/rate.
/// Returns W_0..W_J. Across an ensemble the increments average to zero.
template <class State>
std::vector<double> martingale_statistic(const Trajectory<State>& traj, const ProcessLaw<State>& law,
                                         const TestFunction<State>& eta, std::size_t mc_samples,
                                         std::uint64_t seed) {
    if (traj.states.empty()) throw UsageError("martingale_statistic: empty trajectory");
    if (!traj.states_complete) throw UsageError("martingale_statistic: trajectory lacks recorded states");

    std::vector<double> w;
    w.reserve(traj.states.size());
    double prefix = 0.0;  // sum of conditional-increment means up to n
    for (std::size_t n = 0; n < traj.states.size(); ++n) {
        w.push_back(prefix - eta(traj.states[n]));
        const double lam = traj.rates[n];
        if (lam > 0.0) {
            const auto d = drift(law, traj.states[n], eta, mc_samples, derive_seed(seed, n));
            prefix += d.estimate / lam;
        }
    }
    return w;
}

}  // namespace coagfrag
