#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "coagfrag/drift.hpp"
#include "coagfrag/jump_process.hpp"
#include "coagfrag/kernels.hpp"
#include "coagfrag/particle_system.hpp"

namespace coagfrag {

/// Direct simulation mechanism set: source, efflux, multiple fragmentation
/// and pairwise (i != j) coagulation.
struct DirectSimConfig {
    std::uint64_t n = 1;
    std::optional<CoagKernel> coag;
    std::optional<FragLaw> frag;
    std::optional<SourceTerm> source;
    std::optional<EffluxFn> efflux;
    BoundaryGuards guards;

    void validate() const {
        if (n < 1) throw UsageError("DirectSimConfig: n must be >= 1");
        if (!coag && !frag && !source && !efflux) {
            throw UsageError("DirectSimConfig: at least one mechanism required");
        }
        guards.validate();
    }
};

namespace detail {

/// Walks cumulative weights, consuming the residual in place; the float
/// residue at the end clamps to the last positive entry.
template <class WeightFn>
std::size_t scan_select(std::size_t count, double& r, WeightFn&& weight) {
    std::size_t last_positive = count;
    for (std::size_t i = 0; i < count; ++i) {
        const double w = weight(i);
        if (w <= 0.0) continue;
        if (r < w) return i;
        r -= w;
        last_positive = i;
    }
    if (last_positive == count) throw ModelError("event selection: no positive weight");
    r = 0.0;
    return last_positive;
}

constexpr std::uint64_t kRebuildPeriod = 1u << 16;  // caps incremental floating drift

}  // namespace detail

/// One instance per replicate: carries per-particle rate rows keyed to the
/// trajectory's current state, updated incrementally per event with periodic
/// full recomputation. Probing a different state triggers a rebuild.
class DirectSimLaw {
public:
    explicit DirectSimLaw(DirectSimConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

    const DirectSimConfig& config() const { return cfg_; }

    /// Total jump rate n [S(X) + int e d xi + int F(., Z) d xi + (1/2n^2) sum_{i!=j} K].
    double rate(const ParticleSystem& xi) const {
        ensure(xi);
        return cached_rate();
    }

    EventRecord sample_event(const ParticleSystem& xi, RandomStream& rng) const {
        ensure(xi);
        const double lam = cached_rate();
        if (!(lam > 0.0)) throw UsageError("sample_event: total rate is zero");
        double r = rng.uniform() * lam;

        // category weights from the same clamped rows the inner scans walk,
        // so incremental float drift can never strand the selection
        const double inv_2n = 0.5 / static_cast<double>(cfg_.n);
        double category[4];
        auto fill_categories = [&] {
            category[0] = source_weight();
            category[1] = category[2] = category[3] = 0.0;
            for (std::size_t i = 0; i < sizes_.size(); ++i) {
                category[1] += std::fmax(efflux_w_[i], 0.0);
                category[2] += std::fmax(frag_w_[i], 0.0);
                category[3] += std::fmax(coag_row_[i], 0.0);
            }
            category[3] = sizes_.size() < 2 ? 0.0 : category[3] * inv_2n;  // no pairs below two
            return category[0] + category[1] + category[2] + category[3] > 0.0;
        };
        if (!fill_categories()) {
            rebuild(xi);  // stored totals were stale float residue
            if (!fill_categories()) throw UsageError("sample_event: total rate is zero");
        }
        switch (detail::scan_select(4, r, [&](std::size_t c) { return category[c]; })) {
            case 0: {
                EventRecord ev{EventKind::kSource};
                ev.x = cfg_.source->sampler(rng);
                return ev;
            }
            case 1: {
                EventRecord ev{EventKind::kEfflux};
                ev.i = detail::scan_select(sizes_.size(), r, [&](std::size_t i) { return efflux_w_[i]; });
                return ev;
            }
            case 2: {
                EventRecord ev{EventKind::kFrag};
                ev.i = detail::scan_select(sizes_.size(), r, [&](std::size_t i) { return frag_w_[i]; });
                ev.fragments = cfg_.frag->fragments(sizes_[ev.i], rng);
                return ev;
            }
            default: {
                EventRecord ev{EventKind::kCoag};
                r /= inv_2n;
                ev.i = detail::scan_select(sizes_.size(), r, [&](std::size_t i) { return coag_row_[i]; });
                ev.j = ev.i == 0 ? 1 : 0;  // fallback partner if the row was pure float residue
                for (std::size_t j = 0; j < sizes_.size(); ++j) {
                    if (j == ev.i) continue;
                    const double w = (*cfg_.coag)(sizes_[ev.i], sizes_[j]);
                    if (w <= 0.0) continue;
                    ev.j = j;
                    if (r < w) break;
                    r -= w;
                }
                return ev;
            }
        }
    }

    ParticleSystem apply_event(const ParticleSystem& xi, const EventRecord& ev) const {
        switch (ev.kind) {
            case EventKind::kSource: return apply_source(xi, ev.x);
            case EventKind::kEfflux: return apply_efflux(xi, ev.i);
            case EventKind::kFrag: return apply_frag(xi, ev.i, ev.fragments);
            case EventKind::kCoag: return apply_coag_direct(xi, ev.i, ev.j);
            default: throw UsageError("direct simulation: unsupported event kind");
        }
    }

    /// Samples an event, applies it and advances the rate cache.
    ParticleSystem step(const ParticleSystem& xi, RandomStream& rng) const {
        const EventRecord ev = sample_event(xi, rng);
        ParticleSystem next = apply_event(xi, ev);
        advance_cache(ev);
        last_event_ = ev;
        return next;
    }

    const EventRecord& last_event() const { return last_event_; }

    std::vector<JumpAtom<ParticleSystem>> atoms(const ParticleSystem& xi) const {
        std::vector<JumpAtom<ParticleSystem>> out;
        const std::size_t N = xi.sizes.size();
        if (cfg_.source) {
            JumpAtom<ParticleSystem> a;
            a.weight = static_cast<double>(cfg_.n) * cfg_.source->total;
            a.sample = [xi, src = *cfg_.source](RandomStream& rng) {
                return apply_source(xi, src.sampler(rng));
            };
            out.push_back(std::move(a));
        }
        if (cfg_.efflux) {
            for (std::size_t i = 0; i < N; ++i) {
                JumpAtom<ParticleSystem> a;
                a.weight = (*cfg_.efflux)(xi.sizes[i]);
                a.successor = apply_efflux(xi, i);
                out.push_back(std::move(a));
            }
        }
        if (cfg_.frag) {
            for (std::size_t i = 0; i < N; ++i) {
                JumpAtom<ParticleSystem> a;
                a.weight = cfg_.frag->rate(xi.sizes[i]);
                a.sample = [xi, i, law = *cfg_.frag](RandomStream& rng) {
                    return apply_frag(xi, i, law.fragments(xi.sizes[i], rng));
                };
                out.push_back(std::move(a));
            }
        }
        if (cfg_.coag) {
            const double inv_2n = 0.5 / static_cast<double>(cfg_.n);
            for (std::size_t i = 0; i < N; ++i) {
                for (std::size_t j = 0; j < N; ++j) {
                    if (i == j) continue;
                    JumpAtom<ParticleSystem> a;
                    a.weight = inv_2n * (*cfg_.coag)(xi.sizes[i], xi.sizes[j]);
                    a.successor = apply_coag_direct(xi, i, j);
                    out.push_back(std::move(a));
                }
            }
        }
        return out;
    }

private:
    double source_weight() const {
        return cfg_.source ? static_cast<double>(cfg_.n) * cfg_.source->total : 0.0;
    }

    double cached_rate() const {
        const double coag = cfg_.coag ? std::fmax(coag_rows_total_, 0.0) * 0.5 / static_cast<double>(cfg_.n)
                                      : 0.0;
        return source_weight() + std::fmax(efflux_total_, 0.0) + std::fmax(frag_total_, 0.0) + coag;
    }

    void ensure(const ParticleSystem& xi) const {
        if (valid_ && xi.n == cfg_.n && xi.sizes == sizes_) return;
        if (xi.n != cfg_.n) throw UsageError("direct simulation: state weight disagrees with config");
        rebuild(xi);
    }

    void rebuild(const ParticleSystem& xi) const {
        const std::size_t N = xi.sizes.size();
        sizes_ = xi.sizes;
        efflux_w_.assign(N, 0.0);
        frag_w_.assign(N, 0.0);
        coag_row_.assign(N, 0.0);
        efflux_total_ = frag_total_ = coag_rows_total_ = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            if (cfg_.efflux) {
                efflux_w_[i] = (*cfg_.efflux)(sizes_[i]);
                efflux_total_ += efflux_w_[i];
            }
            if (cfg_.frag) {
                frag_w_[i] = cfg_.frag->rate(sizes_[i]);
                frag_total_ += frag_w_[i];
            }
        }
        if (cfg_.coag) {
            for (std::size_t i = 0; i < N; ++i) {
                double row = 0.0;
                for (std::size_t j = 0; j < N; ++j) {
                    if (j != i) row += (*cfg_.coag)(sizes_[i], sizes_[j]);
                }
                coag_row_[i] = row;
                coag_rows_total_ += row;
            }
        }
        events_since_rebuild_ = 0;
        valid_ = true;
    }

    void advance_cache(const EventRecord& ev) const {
        if (++events_since_rebuild_ >= detail::kRebuildPeriod) {
            valid_ = false;  // next ensure() recomputes everything
            return;
        }
        switch (ev.kind) {
            case EventKind::kSource:
                cache_append(ev.x);
                break;
            case EventKind::kEfflux:
                cache_remove(ev.i);
                break;
            case EventKind::kFrag:
                cache_remove(ev.i);
                for (double z : ev.fragments) cache_append(z);
                break;
            case EventKind::kCoag: {
                const double merged = sizes_[ev.i] + sizes_[ev.j];
                cache_remove(ev.i > ev.j ? ev.i : ev.j);
                cache_remove(ev.i > ev.j ? ev.j : ev.i);
                cache_append(merged);
                break;
            }
            default:
                valid_ = false;
                break;
        }
    }

    void cache_append(double y) const {
        double row = 0.0;
        if (cfg_.coag) {
            for (std::size_t j = 0; j < sizes_.size(); ++j) {
                const double in = (*cfg_.coag)(sizes_[j], y);
                coag_row_[j] += in;
                coag_rows_total_ += in;
                row += (*cfg_.coag)(y, sizes_[j]);
            }
            coag_rows_total_ += row;
        }
        sizes_.push_back(y);
        coag_row_.push_back(row);
        const double e = cfg_.efflux ? (*cfg_.efflux)(y) : 0.0;
        const double f = cfg_.frag ? cfg_.frag->rate(y) : 0.0;
        efflux_w_.push_back(e);
        frag_w_.push_back(f);
        efflux_total_ += e;
        frag_total_ += f;
    }

    void cache_remove(std::size_t i) const {
        const double x = sizes_[i];
        if (cfg_.coag) {
            double column = 0.0;
            for (std::size_t j = 0; j < sizes_.size(); ++j) {
                if (j == i) continue;
                const double in = (*cfg_.coag)(sizes_[j], x);
                coag_row_[j] -= in;
                column += in;
            }
            coag_rows_total_ -= column + coag_row_[i];
        }
        efflux_total_ -= efflux_w_[i];
        frag_total_ -= frag_w_[i];
        detail::swap_remove(sizes_, i);
        detail::swap_remove(efflux_w_, i);
        detail::swap_remove(frag_w_, i);
        detail::swap_remove(coag_row_, i);
        if (sizes_.size() < 2) {  // no pairs left: clear float residue exactly
            coag_rows_total_ = 0.0;
            if (!coag_row_.empty()) coag_row_[0] = 0.0;
        }
        if (sizes_.empty()) efflux_total_ = frag_total_ = 0.0;
    }

    DirectSimConfig cfg_;
    mutable bool valid_ = false;
    mutable std::vector<double> sizes_, efflux_w_, frag_w_, coag_row_;
    mutable double efflux_total_ = 0.0, frag_total_ = 0.0, coag_rows_total_ = 0.0;
    mutable std::uint64_t events_since_rebuild_ = 0;
    mutable EventRecord last_event_{EventKind::kSource};
};

/// Stop-rule guard from boundary thresholds.
inline std::function<bool(const ParticleSystem&)> make_boundary_guard(const BoundaryGuards& guards) {
    return [guards](const ParticleSystem& xi) { return boundary_check(xi, guards).has_value(); };
}

inline ProcessLaw<ParticleSystem> make_process_law(std::shared_ptr<DirectSimLaw> impl) {
    ProcessLaw<ParticleSystem> law;
    law.rate = [impl](const ParticleSystem& xi) { return impl->rate(xi); };
    law.sample_next = [impl](const ParticleSystem& xi, RandomStream& rng) { return impl->step(xi, rng); };
    law.atoms = [impl](const ParticleSystem& xi) { return impl->atoms(xi); };
    return law;
}

/// The direct simulation jump process as a generic law.
inline ProcessLaw<ParticleSystem> build_law(const DirectSimConfig& cfg) {
    return make_process_law(std::make_shared<DirectSimLaw>(cfg));
}

/// Stateless probe of the total rate (recomputes from scratch).
inline double total_rate(const ParticleSystem& xi, const DirectSimConfig& cfg) {
    return DirectSimLaw(cfg).rate(xi);
}

/// Stateless probe of one event draw.
inline EventRecord sample_event(const ParticleSystem& xi, const DirectSimConfig& cfg, RandomStream& rng) {
    return DirectSimLaw(cfg).sample_event(xi, rng);
}

/// Evaluates the generator identity for phi term by term (Monte Carlo where
/// source or fragment sampling is involved). Cross-validates against the
/// drift of eta(xi) = int phi d xi under the built law.
inline std::pair<double, double> generator_apply(const ParticleSystem& xi, const DirectSimConfig& cfg,
                                                 const std::function<double(double)>& phi,
                                                 std::size_t samples, std::uint64_t seed) {
    cfg.validate();
    RandomStream rng(seed, 0, StreamTag::kGenerator);
    const double n = static_cast<double>(cfg.n);
    double estimate = 0.0;
    double variance = 0.0;

    if (cfg.source && cfg.source->total > 0.0) {
        if (samples < 1) throw UsageError("generator_apply: samples must be >= 1");
        double sum = 0.0, sum_sq = 0.0;
        for (std::size_t m = 0; m < samples; ++m) {
            const double v = phi(cfg.source->sampler(rng));
            sum += v;
            sum_sq += v * v;
        }
        const double mean = sum / static_cast<double>(samples);
        double var = samples > 1 ? (sum_sq - sum * mean) / static_cast<double>(samples - 1) : 0.0;
        estimate += cfg.source->total * mean;
        variance += cfg.source->total * cfg.source->total * std::fmax(var, 0.0) / static_cast<double>(samples);
    }
    if (cfg.efflux) {
        for (double x : xi.sizes) estimate -= phi(x) * (*cfg.efflux)(x) / n;
    }
    if (cfg.frag) {
        if (samples < 1) throw UsageError("generator_apply: samples must be >= 1");
        for (double x : xi.sizes) {
            const double rate = cfg.frag->rate(x);
            if (rate == 0.0) continue;
            double sum = 0.0, sum_sq = 0.0;
            for (std::size_t m = 0; m < samples; ++m) {
                double v = -phi(x);
                for (double z : cfg.frag->fragments(x, rng)) v += phi(z);
                sum += v;
                sum_sq += v * v;
            }
            const double mean = sum / static_cast<double>(samples);
            double var = samples > 1 ? (sum_sq - sum * mean) / static_cast<double>(samples - 1) : 0.0;
            estimate += rate * mean / n;
            variance += rate * rate * std::fmax(var, 0.0) / (n * n * static_cast<double>(samples));
        }
    }
    if (cfg.coag) {
        double acc = 0.0;
        for (std::size_t i = 0; i < xi.sizes.size(); ++i) {
            for (std::size_t j = 0; j < xi.sizes.size(); ++j) {
                if (i == j) continue;
                const double x = xi.sizes[i], y = xi.sizes[j];
                acc += (phi(x + y) - phi(x) - phi(y)) * (*cfg.coag)(x, y);
            }
        }
        estimate += 0.5 * acc / (n * n);
    }
    return {estimate, std::sqrt(variance)};
}

}  // namespace coagfrag
