#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "coagfrag/errors.hpp"
#include "coagfrag/random.hpp"

namespace coagfrag {

/// One addend of the jump kernel at a fixed state. `successor` is set when
/// the jump target is a single enumerable state; otherwise `sample` draws it.
template <class State>
struct JumpAtom {
    double weight = 0.0;
    std::optional<State> successor;
    std::function<State(RandomStream&)> sample;
};

/// A jump mechanism: total rate out of a state plus a sampler for the next
/// state of the embedded chain. `atoms`, when provided, enumerates the finite
/// decomposition of the kernel at a state; its weights must sum to the rate.
template <class State>
struct ProcessLaw {
    std::function<double(const State&)> rate;
    std::function<State(const State&, RandomStream&)> sample_next;
    std::function<std::vector<JumpAtom<State>>(const State&)> atoms;

    bool has_atoms() const { return static_cast<bool>(atoms); }
};

enum class StopReason {
    kAbsorbed,     ///< rate hit zero
    kMaxJumps,     ///< jump budget exhausted
    kHorizon,      ///< next jump would pass the time horizon
    kRateCeiling,  ///< rate exceeded the ceiling
    kGuard,        ///< state guard fired (boundary reached)
};

inline const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::kAbsorbed: return "absorbed";
        case StopReason::kMaxJumps: return "max_jumps";
        case StopReason::kHorizon: return "horizon";
        case StopReason::kRateCeiling: return "rate_ceiling";
        case StopReason::kGuard: return "guard";
    }
    return "?";
}

/// Finite truncation of a conceptually unbounded simulation.
template <class State>
struct StopRule {
    std::uint64_t max_jumps = 1'000'000;
    double time_horizon = 1e300;
    double rate_ceiling = 1e12;
    std::function<bool(const State&)> state_guard;  // optional boundary detector

    void validate() const {
        if (max_jumps < 1) throw UsageError("StopRule: max_jumps must be >= 1");
        if (!(time_horizon > 0.0)) throw UsageError("StopRule: time_horizon must be positive");
        if (!(rate_ceiling > 0.0)) throw UsageError("StopRule: rate_ceiling must be positive");
    }
};

/// The embedded chain of a finite simulation run. With J jumps there are
/// J+1 states/rates/jump_times/partial sums and J waits.
template <class State>
struct Trajectory {
    std::vector<State> states;  ///< all visited states, or {first, last} when !states_complete
    std::vector<double> rates;
    std::vector<double> waits;
    std::vector<double> jump_times;
    std::vector<double> inv_rate_partial_sums;  ///< sum_{k<l} 1/rate_k
    std::uint64_t seed = 0;
    std::uint64_t replicate = 0;
    StopReason stop_reason = StopReason::kMaxJumps;
    bool states_complete = true;

    std::uint64_t jumps() const { return waits.size(); }
    const State& initial_state() const { return states.front(); }
    const State& final_state() const { return states.back(); }
    double terminal_rate() const { return rates.back(); }
    double final_time() const { return jump_times.back(); }
};

template <class State>
struct SimulateOptions {
    std::uint64_t replicate = 0;
    bool record_states = true;  ///< false keeps only the first and last state
    /// Called after every accepted jump as (jump index, jump time, new rate, new state).
    std::function<void(std::uint64_t, double, double, const State&)> observer;
};

namespace detail {

inline double checked_rate(double lam) {
    if (!std::isfinite(lam)) throw ModelError("jump process: non-finite rate");
    if (lam < 0.0) throw ModelError("jump process: negative rate");
    return lam;
}

}  // namespace detail

/// Runs the embedded chain with inverse-CDF exponential holding times drawn
/// from the counter-addressable stream keyed by (seed, replicate). Holding
/// time l uses draw index l of the wait stream, so recorded waits can be
/// audited against regenerated exponentials. The result is a pure function
/// of (law, init, seed, stop, options.replicate).
template <class State>
Trajectory<State> simulate_chain(const ProcessLaw<State>& law, State init, std::uint64_t seed,
                                 const StopRule<State>& stop, SimulateOptions<State> options = {}) {
    stop.validate();
    RandomStream waits(seed, options.replicate, StreamTag::kWait);
    RandomStream chain(seed, options.replicate, StreamTag::kChain);

    Trajectory<State> traj;
    traj.seed = seed;
    traj.replicate = options.replicate;
    traj.states_complete = options.record_states;

    State state = std::move(init);
    double lam = detail::checked_rate(law.rate(state));
    double tau = 0.0;
    traj.rates.push_back(lam);
    traj.jump_times.push_back(0.0);
    traj.inv_rate_partial_sums.push_back(0.0);
    traj.states.push_back(state);

    std::uint64_t jump = 0;
    for (;;) {
        if (lam == 0.0) {
            traj.stop_reason = StopReason::kAbsorbed;
            break;
        }
        if (jump >= stop.max_jumps) {
            traj.stop_reason = StopReason::kMaxJumps;
            break;
        }
        if (lam > stop.rate_ceiling) {
            traj.stop_reason = StopReason::kRateCeiling;
            break;
        }
        if (stop.state_guard && stop.state_guard(state)) {
            traj.stop_reason = StopReason::kGuard;
            break;
        }
        const double wait = waits.exponential_at(jump) / lam;
        const double tau_next = tau + wait;
        if (tau_next > stop.time_horizon) {
            traj.stop_reason = StopReason::kHorizon;
            break;
        }

        state = law.sample_next(state, chain);
        const double lam_next = detail::checked_rate(law.rate(state));
        ++jump;
        tau = tau_next;

        traj.waits.push_back(wait);
        traj.jump_times.push_back(tau);
        traj.inv_rate_partial_sums.push_back(traj.inv_rate_partial_sums.back() + 1.0 / lam);
        traj.rates.push_back(lam_next);
        if (options.record_states) traj.states.push_back(state);
        if (options.observer) options.observer(jump, tau, lam_next, state);
        lam = lam_next;
    }

    if (!options.record_states && jump > 0) {
        traj.states.push_back(std::move(state));  // endpoints only: {initial, final}
    }
    return traj;
}

}  // namespace coagfrag
