#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "coagfrag/direct_sim.hpp"  // scan_select, make_boundary_guard
#include "coagfrag/drift.hpp"
#include "coagfrag/jump_process.hpp"
#include "coagfrag/kernels.hpp"
#include "coagfrag/particle_system.hpp"

namespace coagfrag {

/// Mass flow mechanism set: mass-weighted source, efflux, size-replacing
/// fragmentation and one-sided coagulation with weight K_sym(x_i, x_j)/x_j,
/// the double sum including i == j.
struct MassFlowConfig {
    std::uint64_t n = 1;
    std::optional<CoagKernel> coag;  ///< symmetrized on construction of the law
    std::optional<MassFlowFragLaw> mf_frag;
    std::optional<SourceTerm> source;  ///< requires finite first moment and max_size
    std::optional<EffluxFn> efflux;
    BoundaryGuards guards;
    /// Remove particles crossing the size boundaries and keep going instead
    /// of stopping (used by the mass-trace experiments).
    bool truncate_at_boundary = false;

    void validate() const {
        if (n < 1) throw UsageError("MassFlowConfig: n must be >= 1");
        if (!coag && !mf_frag && !source && !efflux) {
            throw UsageError("MassFlowConfig: at least one mechanism required");
        }
        if (source && !(std::isfinite(source->first_moment) && source->first_moment >= 0.0)) {
            throw UsageError("MassFlowConfig: source first moment must be finite");
        }
        guards.validate();
    }
};

/// One instance per replicate, same caching contract as DirectSimLaw.
class MassFlowLaw {
public:
    explicit MassFlowLaw(MassFlowConfig cfg) : cfg_(std::move(cfg)) {
        cfg_.validate();
        if (cfg_.coag) cfg_.coag = sym_coag(*cfg_.coag);
    }

    const MassFlowConfig& config() const { return cfg_; }

    /// n [int x S(dx) + int e d xi + int F~(., X) d xi + (1/n^2) sum_{i,j} K_sym(x_i,x_j)/x_j].
    double rate(const ParticleSystem& xi) const {
        ensure(xi);
        return cached_rate();
    }

    EventRecord sample_event(const ParticleSystem& xi, RandomStream& rng) const {
        ensure(xi);
        const double lam = cached_rate();
        if (!(lam > 0.0)) throw UsageError("sample_event: total rate is zero");
        double r = rng.uniform() * lam;

        const double inv_n = 1.0 / static_cast<double>(cfg_.n);
        double category[4];
        auto fill_categories = [&] {
            category[0] = source_weight();
            category[1] = category[2] = category[3] = 0.0;
            for (std::size_t i = 0; i < sizes_.size(); ++i) {
                category[1] += std::fmax(efflux_w_[i], 0.0);
                category[2] += std::fmax(frag_w_[i], 0.0);
                category[3] += std::fmax(coag_row_[i], 0.0);
            }
            category[3] *= inv_n;
            return category[0] + category[1] + category[2] + category[3] > 0.0;
        };
        if (!fill_categories()) {
            rebuild(xi);  // stored totals were stale float residue
            if (!fill_categories()) throw UsageError("sample_event: total rate is zero");
        }
        switch (detail::scan_select(4, r, [&](std::size_t c) { return category[c]; })) {
            case 0: {
                EventRecord ev{EventKind::kSource};
                ev.x = cfg_.source->sample_mass_biased(rng);
                return ev;
            }
            case 1: {
                EventRecord ev{EventKind::kEfflux};
                ev.i = detail::scan_select(sizes_.size(), r, [&](std::size_t i) { return efflux_w_[i]; });
                return ev;
            }
            case 2: {
                EventRecord ev{EventKind::kMfFrag};
                ev.i = detail::scan_select(sizes_.size(), r, [&](std::size_t i) { return frag_w_[i]; });
                ev.x = cfg_.mf_frag->next(sizes_[ev.i], rng);
                return ev;
            }
            default: {
                EventRecord ev{EventKind::kMfCoag};
                r /= inv_n;
                ev.i = detail::scan_select(sizes_.size(), r, [&](std::size_t i) { return coag_row_[i]; });
                ev.j = ev.i;  // fallback partner if the row was pure float residue
                for (std::size_t j = 0; j < sizes_.size(); ++j) {
                    const double w = pair_weight(sizes_[ev.i], sizes_[j]);
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
            case EventKind::kMfFrag: return apply_frag_massflow(xi, ev.i, ev.x);
            case EventKind::kMfCoag: return apply_coag_massflow(xi, ev.i, ev.j);
            default: throw UsageError("mass flow: unsupported event kind");
        }
    }

    ParticleSystem step(const ParticleSystem& xi, RandomStream& rng) const {
        const EventRecord ev = sample_event(xi, rng);
        ParticleSystem next = apply_event(xi, ev);
        advance_cache(ev);
        last_event_ = ev;
        if (cfg_.truncate_at_boundary) truncate(next);
        return next;
    }

    const EventRecord& last_event() const { return last_event_; }

    std::vector<JumpAtom<ParticleSystem>> atoms(const ParticleSystem& xi) const {
        std::vector<JumpAtom<ParticleSystem>> out;
        const std::size_t N = xi.sizes.size();
        const double inv_n = 1.0 / static_cast<double>(cfg_.n);
        if (cfg_.source) {
            JumpAtom<ParticleSystem> a;
            a.weight = static_cast<double>(cfg_.n) * cfg_.source->first_moment;
            a.sample = [xi, src = *cfg_.source](RandomStream& rng) {
                return apply_source(xi, src.sample_mass_biased(rng));
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
        if (cfg_.mf_frag) {
            for (std::size_t i = 0; i < N; ++i) {
                JumpAtom<ParticleSystem> a;
                a.weight = cfg_.mf_frag->rate(xi.sizes[i]);
                a.sample = [xi, i, law = *cfg_.mf_frag](RandomStream& rng) {
                    return apply_frag_massflow(xi, i, law.next(xi.sizes[i], rng));
                };
                out.push_back(std::move(a));
            }
        }
        if (cfg_.coag) {
            for (std::size_t i = 0; i < N; ++i) {
                for (std::size_t j = 0; j < N; ++j) {
                    JumpAtom<ParticleSystem> a;
                    a.weight = inv_n * pair_weight(xi.sizes[i], xi.sizes[j]);
                    a.successor = apply_coag_massflow(xi, i, j);
                    out.push_back(std::move(a));
                }
            }
        }
        return out;
    }

private:
    /// Coagulation weight K_sym(x_i, x_j)/x_j; underflow to zero is treated
    /// as an unreachable event rather than an error.
    double pair_weight(double xi_size, double xj_size) const {
        const double w = (*cfg_.coag)(xi_size, xj_size) / xj_size;
        if (!std::isfinite(w)) throw ModelError("mass flow: non-finite coagulation weight");
        return w;
    }

    double source_weight() const {
        return cfg_.source ? static_cast<double>(cfg_.n) * cfg_.source->first_moment : 0.0;
    }

    double cached_rate() const {
        const double coag =
            cfg_.coag ? std::fmax(coag_rows_total_, 0.0) / static_cast<double>(cfg_.n) : 0.0;
        return source_weight() + std::fmax(efflux_total_, 0.0) + std::fmax(frag_total_, 0.0) + coag;
    }

    void ensure(const ParticleSystem& xi) const {
        if (valid_ && xi.n == cfg_.n && xi.sizes == sizes_) return;
        if (xi.n != cfg_.n) throw UsageError("mass flow: state weight disagrees with config");
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
            if (cfg_.mf_frag) {
                frag_w_[i] = cfg_.mf_frag->rate(sizes_[i]);
                frag_total_ += frag_w_[i];
            }
        }
        if (cfg_.coag) {
            for (std::size_t i = 0; i < N; ++i) {
                double row = 0.0;
                for (std::size_t j = 0; j < N; ++j) row += pair_weight(sizes_[i], sizes_[j]);
                coag_row_[i] = row;
                coag_rows_total_ += row;
            }
        }
        events_since_rebuild_ = 0;
        valid_ = true;
    }

    void advance_cache(const EventRecord& ev) const {
        if (++events_since_rebuild_ >= detail::kRebuildPeriod) {
            valid_ = false;
            return;
        }
        switch (ev.kind) {
            case EventKind::kSource:
                cache_append(ev.x);
                break;
            case EventKind::kEfflux:
                cache_remove(ev.i);
                break;
            case EventKind::kMfFrag:
                cache_resize(ev.i, ev.x);
                break;
            case EventKind::kMfCoag:
                cache_resize(ev.i, sizes_[ev.i] + sizes_[ev.j]);
                break;
            default:
                valid_ = false;
                break;
        }
    }

    void cache_append(double y) const {
        double row = 0.0;
        if (cfg_.coag) {
            for (std::size_t j = 0; j < sizes_.size(); ++j) {
                const double in = pair_weight(sizes_[j], y);
                coag_row_[j] += in;
                coag_rows_total_ += in;
                row += pair_weight(y, sizes_[j]);
            }
            row += pair_weight(y, y);
            coag_rows_total_ += row;
        }
        sizes_.push_back(y);
        coag_row_.push_back(row);
        const double e = cfg_.efflux ? (*cfg_.efflux)(y) : 0.0;
        const double f = cfg_.mf_frag ? cfg_.mf_frag->rate(y) : 0.0;
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
                const double in = pair_weight(sizes_[j], x);
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
        if (sizes_.empty()) efflux_total_ = frag_total_ = coag_rows_total_ = 0.0;
    }

    void cache_resize(std::size_t i, double new_size) const {
        const double old_size = sizes_[i];
        if (cfg_.coag) {
            for (std::size_t k = 0; k < sizes_.size(); ++k) {
                if (k == i) continue;
                const double delta = pair_weight(sizes_[k], new_size) - pair_weight(sizes_[k], old_size);
                coag_row_[k] += delta;
                coag_rows_total_ += delta;
            }
            coag_rows_total_ -= coag_row_[i];
            sizes_[i] = new_size;
            double row = 0.0;
            for (std::size_t j = 0; j < sizes_.size(); ++j) row += pair_weight(new_size, sizes_[j]);
            coag_row_[i] = row;
            coag_rows_total_ += row;
        } else {
            sizes_[i] = new_size;
        }
        if (cfg_.efflux) {
            const double e = (*cfg_.efflux)(new_size);
            efflux_total_ += e - efflux_w_[i];
            efflux_w_[i] = e;
        }
        if (cfg_.mf_frag) {
            const double f = cfg_.mf_frag->rate(new_size);
            frag_total_ += f - frag_w_[i];
            frag_w_[i] = f;
        }
    }

    void truncate(ParticleSystem& state) const {
        for (std::size_t i = state.sizes.size(); i-- > 0;) {
            const double x = state.sizes[i];
            if (x < cfg_.guards.x_min || x > cfg_.guards.x_max) {
                detail::swap_remove(state.sizes, i);
                if (valid_) cache_remove(i);
            }
        }
    }

    MassFlowConfig cfg_;
    mutable bool valid_ = false;
    mutable std::vector<double> sizes_, efflux_w_, frag_w_, coag_row_;
    mutable double efflux_total_ = 0.0, frag_total_ = 0.0, coag_rows_total_ = 0.0;
    mutable std::uint64_t events_since_rebuild_ = 0;
    mutable EventRecord last_event_{EventKind::kSource};
};

inline ProcessLaw<ParticleSystem> make_process_law(std::shared_ptr<MassFlowLaw> impl) {
    ProcessLaw<ParticleSystem> law;
    law.rate = [impl](const ParticleSystem& xi) { return impl->rate(xi); };
    law.sample_next = [impl](const ParticleSystem& xi, RandomStream& rng) { return impl->step(xi, rng); };
    law.atoms = [impl](const ParticleSystem& xi) { return impl->atoms(xi); };
    return law;
}

/// The mass flow jump process as a generic law.
inline ProcessLaw<ParticleSystem> build_law(const MassFlowConfig& cfg) {
    return make_process_law(std::make_shared<MassFlowLaw>(cfg));
}

inline double total_rate(const ParticleSystem& xi, const MassFlowConfig& cfg) {
    return MassFlowLaw(cfg).rate(xi);
}

inline EventRecord sample_event(const ParticleSystem& xi, const MassFlowConfig& cfg, RandomStream& rng) {
    return MassFlowLaw(cfg).sample_event(xi, rng);
}

/// Evaluates the mass flow generator identity for psi term by term.
inline std::pair<double, double> generator_apply(const ParticleSystem& xi, const MassFlowConfig& cfg,
                                                 const std::function<double(double)>& psi,
                                                 std::size_t samples, std::uint64_t seed) {
    cfg.validate();
    const CoagKernel kernel = cfg.coag ? sym_coag(*cfg.coag) : CoagKernel{};
    RandomStream rng(seed, 0, StreamTag::kGenerator);
    const double n = static_cast<double>(cfg.n);
    double estimate = 0.0;
    double variance = 0.0;

    if (cfg.source && cfg.source->total > 0.0) {
        if (samples < 1) throw UsageError("generator_apply: samples must be >= 1");
        double sum = 0.0, sum_sq = 0.0;
        for (std::size_t m = 0; m < samples; ++m) {
            const double x = cfg.source->sampler(rng);
            const double v = x * psi(x);
            sum += v;
            sum_sq += v * v;
        }
        const double mean = sum / static_cast<double>(samples);
        double var = samples > 1 ? (sum_sq - sum * mean) / static_cast<double>(samples - 1) : 0.0;
        estimate += cfg.source->total * mean;
        variance += cfg.source->total * cfg.source->total * std::fmax(var, 0.0) / static_cast<double>(samples);
    }
    if (cfg.efflux) {
        for (double x : xi.sizes) estimate -= psi(x) * (*cfg.efflux)(x) / n;
    }
    if (cfg.mf_frag) {
        if (samples < 1) throw UsageError("generator_apply: samples must be >= 1");
        for (double x : xi.sizes) {
            const double rate = cfg.mf_frag->rate(x);
            if (rate == 0.0) continue;
            double sum = 0.0, sum_sq = 0.0;
            for (std::size_t m = 0; m < samples; ++m) {
                const double v = psi(cfg.mf_frag->next(x, rng)) - psi(x);
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
        for (double x : xi.sizes) {
            for (double y : xi.sizes) {
                acc += (psi(x + y) - psi(x)) * kernel(x, y) / y;
            }
        }
        estimate += acc / (n * n);
    }
    return {estimate, std::sqrt(variance)};
}

/// Normalized particle count against jump times: the gel/shattering
/// observable of the mass flow model.
inline std::vector<std::pair<double, double>> mass_trace(const Trajectory<ParticleSystem>& traj) {
    if (!traj.states_complete) throw UsageError("mass_trace: trajectory lacks recorded states");
    std::vector<std::pair<double, double>> out;
    out.reserve(traj.states.size());
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
        out.emplace_back(traj.jump_times[k],
                         static_cast<double>(traj.states[k].count()) / static_cast<double>(traj.states[k].n));
    }
    return out;
}

}  // namespace coagfrag
