#pragma once

#include <cmath>
#include <cstdint>
#include <functional>

#include "coagfrag/errors.hpp"
#include "coagfrag/jump_process.hpp"

namespace coagfrag {

/// Pure birth process on the positive integers: deterministic successor
/// xi -> xi + 1 at rate rate_fn(xi). Atoms are exact.
inline ProcessLaw<std::int64_t> pure_birth_law(std::function<double(std::int64_t)> rate_fn) {
    auto rate = [rate_fn](const std::int64_t& s) {
        const double lam = rate_fn(s);
        if (!std::isfinite(lam) || lam <= 0.0) {
            throw ModelError("pure_birth_law: rate must be positive and finite");
        }
        return lam;
    };
    ProcessLaw<std::int64_t> law;
    law.rate = rate;
    law.sample_next = [](const std::int64_t& s, RandomStream&) { return s + 1; };
    law.atoms = [rate](const std::int64_t& s) {
        std::vector<JumpAtom<std::int64_t>> atoms(1);
        atoms[0].weight = rate(s);
        atoms[0].successor = s + 1;
        return atoms;
    };
    return law;
}

/// One-dimensional dynamics on [1, inf): arbitrary next-state sampler with
/// state-dependent rate. No atoms; drift falls back to Monte Carlo.
inline ProcessLaw<double> one_dim_law(std::function<double(double)> rate_fn,
                                      std::function<double(double, RandomStream&)> next_sampler) {
    auto check_state = [](double s) {
        if (!(s >= 1.0)) throw ModelError("one_dim_law: state left [1, inf)");
        return s;
    };
    ProcessLaw<double> law;
    law.rate = [rate_fn, check_state](const double& s) {
        check_state(s);
        const double lam = rate_fn(s);
        if (!std::isfinite(lam) || lam < 0.0) throw ModelError("one_dim_law: invalid rate");
        return lam;
    };
    law.sample_next = [next_sampler, check_state](const double& s, RandomStream& rng) {
        return check_state(next_sampler(check_state(s), rng));
    };
    return law;
}

}  // namespace coagfrag
