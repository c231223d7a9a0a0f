#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <type_traits>
#include <mutex>
#include <thread>
#include <vector>

#include "coagfrag/explosion.hpp"

namespace coagfrag {

/// Per-replicate summary row (the CSV schema of the ensemble command).
struct ReplicateRow {
    std::uint64_t replicate = 0;
    VerdictKind verdict = VerdictKind::kInconclusive;
    double tau_lower = std::numeric_limits<double>::quiet_NaN();
    double tau_estimate = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t jumps = 0;
    double t_final = std::numeric_limits<double>::quiet_NaN();
};

inline ReplicateRow make_row(std::uint64_t replicate, const ExplosionVerdict& v) {
    ReplicateRow row;
    row.replicate = replicate;
    row.verdict = v.kind;
    row.tau_lower = v.tau_lower;
    row.tau_estimate = v.tau_estimate;
    row.jumps = v.jumps;
    row.t_final = v.t_final;
    return row;
}

/// Runs `count` independent replicates on a bounded worker pool. Results are
/// slotted by replicate index, so the merged output is independent of both
/// the worker count and completion order. Boolean results are staged in bytes
/// because concurrent writes to distinct vector<bool> bits would race.
template <class Fn>
auto run_replicates(std::uint64_t count, unsigned workers, Fn&& fn)
    -> std::vector<decltype(fn(std::uint64_t{}))> {
    using Result = decltype(fn(std::uint64_t{}));
    using Slot = std::conditional_t<std::is_same_v<Result, bool>, unsigned char, Result>;
    std::vector<Slot> slots(count);

    workers = count == 0 ? 1u : std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(count)));
    if (workers == 1) {
        for (std::uint64_t r = 0; r < count; ++r) slots[r] = fn(r);
    } else {
        std::atomic<std::uint64_t> next{0};
        std::exception_ptr error;
        std::mutex error_mutex;
        auto worker = [&]() {
            for (;;) {
                const std::uint64_t r = next.fetch_add(1);
                if (r >= count) return;
                try {
                    slots[r] = fn(r);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next.store(count);
                    return;
                }
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
        if (error) std::rethrow_exception(error);
    }

    if constexpr (std::is_same_v<Result, bool>) {
        return std::vector<bool>(slots.begin(), slots.end());
    } else {
        return slots;
    }
}

inline unsigned default_workers() {
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1u : std::min(hc, 8u);
}

/// Ensemble statistics: explosion fraction with a 95% normal CI, and
/// moments/quantiles of the recorded explosion times (tau_lower of the
/// Exploded replicates).
struct EnsembleAggregate {
    std::uint64_t replicates = 0;
    std::uint64_t exploded = 0, survived = 0, absorbed = 0, inconclusive = 0;
    double explosion_fraction = 0.0;
    double fraction_ci95_low = 0.0, fraction_ci95_high = 0.0;
    double tau_mean = std::numeric_limits<double>::quiet_NaN();
    double tau_stderr = std::numeric_limits<double>::quiet_NaN();
    double tau_q05 = std::numeric_limits<double>::quiet_NaN();
    double tau_q25 = std::numeric_limits<double>::quiet_NaN();
    double tau_q50 = std::numeric_limits<double>::quiet_NaN();
    double tau_q75 = std::numeric_limits<double>::quiet_NaN();
    double tau_q95 = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace detail

inline EnsembleAggregate aggregate_rows(const std::vector<ReplicateRow>& rows) {
    EnsembleAggregate agg;
    agg.replicates = rows.size();
    std::vector<double> taus;
    for (const auto& row : rows) {
        switch (row.verdict) {
            case VerdictKind::kExploded:
                ++agg.exploded;
                taus.push_back(row.tau_lower);
                break;
            case VerdictKind::kSurvived: ++agg.survived; break;
            case VerdictKind::kAbsorbed: ++agg.absorbed; break;
            case VerdictKind::kInconclusive: ++agg.inconclusive; break;
        }
    }
    if (agg.replicates > 0) {
        const double n = static_cast<double>(agg.replicates);
        const double p = static_cast<double>(agg.exploded) / n;
        const double half = 1.959963984540054 * std::sqrt(p * (1.0 - p) / n);
        agg.explosion_fraction = p;
        agg.fraction_ci95_low = std::fmax(0.0, p - half);
        agg.fraction_ci95_high = std::fmin(1.0, p + half);
    }
    if (!taus.empty()) {
        double sum = 0.0;
        for (double t : taus) sum += t;
        const double m = static_cast<double>(taus.size());
        agg.tau_mean = sum / m;
        double ss = 0.0;
        for (double t : taus) ss += (t - agg.tau_mean) * (t - agg.tau_mean);
        agg.tau_stderr = taus.size() > 1 ? std::sqrt(ss / (m - 1.0) / m) : 0.0;
        std::sort(taus.begin(), taus.end());
        agg.tau_q05 = detail::quantile_sorted(taus, 0.05);
        agg.tau_q25 = detail::quantile_sorted(taus, 0.25);
        agg.tau_q50 = detail::quantile_sorted(taus, 0.50);
        agg.tau_q75 = detail::quantile_sorted(taus, 0.75);
        agg.tau_q95 = detail::quantile_sorted(taus, 0.95);
    }
    return agg;
}

}  // namespace coagfrag
