#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "coagfrag/errors.hpp"

namespace coagfrag {

/// The measure-valued state (1/n) sum_i delta_{x_i}: an ordered list of
/// strictly positive particle sizes with common weight 1/n. Order carries no
/// meaning; deletions swap with the tail for O(1) mutation.
struct ParticleSystem {
    std::uint64_t n = 1;  ///< inverse particle weight
    std::vector<double> sizes;

    std::size_t count() const { return sizes.size(); }
    bool operator==(const ParticleSystem&) const = default;
};

/// p-th empirical moment (1/n) sum_i x_i^p.
inline double moment(const ParticleSystem& xi, double p) {
    double s = 0.0;
    for (double x : xi.sizes) s += std::pow(x, p);
    return s / static_cast<double>(xi.n);
}

namespace detail {

inline void check_index(const ParticleSystem& xi, std::size_t i, const char* op) {
    if (i >= xi.sizes.size()) throw UsageError(std::string(op) + ": particle index out of range");
}

inline void check_size(double x, const char* op) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw UsageError(std::string(op) + ": particle size must be positive and finite");
    }
}

inline void swap_remove(std::vector<double>& v, std::size_t i) {
    v[i] = v.back();
    v.pop_back();
}

}  // namespace detail

/// J_S: add a particle of size x.
inline ParticleSystem apply_source(ParticleSystem xi, double x) {
    detail::check_size(x, "apply_source");
    xi.sizes.push_back(x);
    return xi;
}

/// J_e: remove particle i.
inline ParticleSystem apply_efflux(ParticleSystem xi, std::size_t i) {
    detail::check_index(xi, i, "apply_efflux");
    detail::swap_remove(xi.sizes, i);
    return xi;
}

/// J_F: replace particle i by its fragment list.
inline ParticleSystem apply_frag(ParticleSystem xi, std::size_t i, std::span<const double> fragments) {
    detail::check_index(xi, i, "apply_frag");
    for (double z : fragments) detail::check_size(z, "apply_frag");
    detail::swap_remove(xi.sizes, i);
    xi.sizes.insert(xi.sizes.end(), fragments.begin(), fragments.end());
    return xi;
}

/// J_K: merge particles i and j into one of size x_i + x_j.
inline ParticleSystem apply_coag_direct(ParticleSystem xi, std::size_t i, std::size_t j) {
    detail::check_index(xi, i, "apply_coag_direct");
    detail::check_index(xi, j, "apply_coag_direct");
    if (i == j) throw UsageError("apply_coag_direct: requires distinct particles");
    const double merged = xi.sizes[i] + xi.sizes[j];
    detail::swap_remove(xi.sizes, i > j ? i : j);
    detail::swap_remove(xi.sizes, i > j ? j : i);
    xi.sizes.push_back(merged);
    return xi;
}

/// J~_F: replace the size of particle i by y, 0 < y <= x_i. Count invariant.
inline ParticleSystem apply_frag_massflow(ParticleSystem xi, std::size_t i, double y) {
    detail::check_index(xi, i, "apply_frag_massflow");
    if (!(y > 0.0)) throw UsageError("apply_frag_massflow: fragment size must be positive");
    if (y > xi.sizes[i]) throw UsageError("apply_frag_massflow: fragment exceeds parent size");
    xi.sizes[i] = y;
    return xi;
}

/// J~_K: grow particle i by the size of particle j (j unchanged, i == j allowed).
inline ParticleSystem apply_coag_massflow(ParticleSystem xi, std::size_t i, std::size_t j) {
    detail::check_index(xi, i, "apply_coag_massflow");
    detail::check_index(xi, j, "apply_coag_massflow");
    xi.sizes[i] += xi.sizes[j];
    return xi;
}

/// Operational stand-in for the compactification boundary: dust and gel
/// thresholds on sizes plus a particle-count ceiling.
struct BoundaryGuards {
    double x_min = 1e-280;
    double x_max = 1e280;
    std::uint64_t n_max = 10'000'000;

    void validate() const {
        if (!(x_min > 0.0) || !(x_max > 0.0) || !(x_min < x_max)) {
            throw UsageError("BoundaryGuards: need 0 < x_min < x_max");
        }
        if (n_max < 1) throw UsageError("BoundaryGuards: n_max must be >= 1");
    }
};

enum class BoundaryKind { kDust, kGel, kBlowup };

inline const char* to_string(BoundaryKind k) {
    switch (k) {
        case BoundaryKind::kDust: return "dust";
        case BoundaryKind::kGel: return "gel";
        case BoundaryKind::kBlowup: return "blowup";
    }
    return "?";
}

struct BoundaryEvent {
    BoundaryKind kind;
    std::size_t index = 0;  ///< offending particle (unused for blowup)
    double value = 0.0;     ///< offending size or particle count
};

/// Dust (some x_i < x_min), gel (some x_i > x_max) or blowup (N > n_max).
inline std::optional<BoundaryEvent> boundary_check(const ParticleSystem& xi, const BoundaryGuards& g) {
    for (std::size_t i = 0; i < xi.sizes.size(); ++i) {
        if (xi.sizes[i] < g.x_min) return BoundaryEvent{BoundaryKind::kDust, i, xi.sizes[i]};
        if (xi.sizes[i] > g.x_max) return BoundaryEvent{BoundaryKind::kGel, i, xi.sizes[i]};
    }
    if (xi.sizes.size() > g.n_max) {
        return BoundaryEvent{BoundaryKind::kBlowup, 0, static_cast<double>(xi.sizes.size())};
    }
    return std::nullopt;
}

/// Event vocabulary shared by the particle models.
enum class EventKind { kSource, kEfflux, kFrag, kCoag, kMfFrag, kMfCoag };

inline const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::kSource: return "source";
        case EventKind::kEfflux: return "efflux";
        case EventKind::kFrag: return "frag";
        case EventKind::kCoag: return "coag";
        case EventKind::kMfFrag: return "mf_frag";
        case EventKind::kMfCoag: return "mf_coag";
    }
    return "?";
}

struct EventRecord {
    EventKind kind;
    std::size_t i = 0;
    std::size_t j = 0;
    double x = 0.0;                 ///< source size or mass-flow fragment size
    std::vector<double> fragments;  ///< direct fragmentation output
};

}  // namespace coagfrag
