#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "coagfrag/direct_sim.hpp"
#include "coagfrag/drift.hpp"
#include "coagfrag/ensemble.hpp"
#include "coagfrag/explosion.hpp"
#include "coagfrag/kernels.hpp"
#include "coagfrag/mass_flow.hpp"
#include "coagfrag/output.hpp"
#include "coagfrag/scalar_laws.hpp"

#include <json.hpp>

namespace coagfrag {

using json = nlohmann::json;

namespace detail {

inline const json& require_field(const json& j, const char* field, const char* where) {
    auto it = j.find(field);
    if (it == j.end()) {
        throw UsageError(std::string("config: missing field '") + field + "' in " + where);
    }
    return *it;
}

template <class T>
T field_as(const json& j, const char* field, const char* where) {
    try {
        return require_field(j, field, where).get<T>();
    } catch (const json::exception& e) {
        throw UsageError(std::string("config: bad field '") + field + "' in " + where + ": " + e.what());
    }
}

template <class T>
T field_or(const json& j, const char* field, T fallback, const char* where) {
    if (!j.contains(field)) return fallback;
    return field_as<T>(j, field, where);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Registries: scalar rate functions, kappa, kernels, laws, eta catalog
// ---------------------------------------------------------------------------

/// Scalar rate spec: power c*x^-alpha (or c*x^exponent) | affine a + b*x |
/// constant c | one_minus_log.
inline std::function<double(double)> make_rate_fn(const json& spec) {
    const auto name = detail::field_as<std::string>(spec, "name", "rate spec");
    if (name == "power") {
        const double c = detail::field_or(spec, "c", 1.0, "rate spec");
        double e = 0.0;
        if (spec.contains("exponent")) {
            e = detail::field_as<double>(spec, "exponent", "rate spec");
        } else {
            e = -detail::field_as<double>(spec, "alpha", "rate spec");
        }
        return [c, e](double x) { return c * std::pow(x, e); };
    }
    if (name == "affine") {
        const double a = detail::field_as<double>(spec, "a", "rate spec");
        const double b = detail::field_as<double>(spec, "b", "rate spec");
        return [a, b](double x) { return a + b * x; };
    }
    if (name == "constant") {
        const double c = detail::field_as<double>(spec, "c", "rate spec");
        return [c](double) { return c; };
    }
    if (name == "one_minus_log") {
        return [](double x) { return 1.0 - std::log(x); };
    }
    throw UsageError("config: unknown rate function '" + name + "'");
}

/// Split-point spec for deterministic binary fragmentation, accepted either
/// as a bare name or as {"name": ...}. `shifted_half` takes the x/2 + 1/4
/// branch on the closed half-line x >= 1/2 so that the breakpoint state
/// reached by floating rounding stays on the slow branch.
inline std::function<double(double)> make_kappa_fn(const json& spec) {
    const auto name =
        spec.is_string() ? spec.get<std::string>() : detail::field_as<std::string>(spec, "name", "kappa spec");
    if (name == "half") {
        return [](double x) { return 0.5 * x; };
    }
    if (name == "shifted_half") {
        return [](double x) { return x >= 0.5 ? 0.5 * x + 0.25 : 0.5 * x; };
    }
    throw UsageError("config: unknown kappa '" + name + "'");
}

inline CoagKernel make_coag_kernel(const json& spec) {
    const auto name = detail::field_as<std::string>(spec, "name", "coag spec");
    if (name == "constant") return constant_kernel(detail::field_or(spec, "c", 1.0, "coag spec"));
    if (name == "additive") return additive_kernel(detail::field_or(spec, "c", 1.0, "coag spec"));
    if (name == "multiplicative") return multiplicative_kernel(detail::field_or(spec, "c", 1.0, "coag spec"));
    if (name == "product_power") {
        return product_power_kernel(detail::field_as<double>(spec, "beta", "coag spec"),
                                    detail::field_or(spec, "c", 1.0, "coag spec"));
    }
    throw UsageError("config: unknown coagulation kernel '" + name + "'");
}

inline FragLaw make_frag_law(const json& spec) {
    const auto name = detail::field_as<std::string>(spec, "name", "frag spec");
    auto rate = make_rate_fn(detail::require_field(spec, "rate", "frag spec"));
    if (name == "uniform_binary") return uniform_binary(std::move(rate));
    if (name == "deterministic_binary") {
        return deterministic_binary(std::move(rate),
                                    make_kappa_fn(detail::require_field(spec, "kappa", "frag spec")));
    }
    throw UsageError("config: unknown fragmentation law '" + name + "'");
}

inline SourceTerm make_source(const json& spec) {
    const auto name = detail::field_as<std::string>(spec, "name", "source spec");
    if (name == "point") {
        return point_source(detail::field_as<double>(spec, "total", "source spec"),
                            detail::field_as<double>(spec, "x", "source spec"));
    }
    if (name == "discrete") {
        std::vector<std::pair<double, double>> atoms;
        for (const auto& a : detail::require_field(spec, "atoms", "source spec")) {
            atoms.emplace_back(detail::field_as<double>(a, "x", "source atom"),
                               detail::field_as<double>(a, "weight", "source atom"));
        }
        return discrete_source(std::move(atoms));
    }
    throw UsageError("config: unknown source '" + name + "'");
}

inline EffluxFn make_efflux(const json& spec) {
    const auto name = detail::field_as<std::string>(spec, "name", "efflux spec");
    if (name == "power") {
        return power_efflux(detail::field_as<double>(spec, "c", "efflux spec"),
                            detail::field_or(spec, "p", 0.0, "efflux spec"));
    }
    throw UsageError("config: unknown efflux '" + name + "'");
}

/// Bounded test-function catalog over particle systems.
inline TestFunction<ParticleSystem> make_eta(const json& spec) {
    const auto name = detail::field_as<std::string>(spec, "name", "eta spec");
    if (name == "power_tail") {
        const double beta = detail::field_as<double>(spec, "beta", "eta spec");
        const double bound = detail::field_as<double>(spec, "bound", "eta spec");
        return {[beta](const ParticleSystem& xi) { return -moment(xi, -beta); }, bound};
    }
    if (name == "neg_moment") {
        const double alpha = detail::field_as<double>(spec, "alpha", "eta spec");
        const double bound = detail::field_as<double>(spec, "bound", "eta spec");
        return {[alpha](const ParticleSystem& xi) { return -moment(xi, alpha); }, bound};
    }
    if (name == "saturating_count") {
        const double beta = detail::field_or(spec, "beta", 1.0, "eta spec");
        return {[beta](const ParticleSystem& xi) {
                    const double u = std::pow(moment(xi, 0.0), beta);
                    return u / (1.0 + u);
                },
                1.0};
    }
    if (name == "constant") {
        const double value = detail::field_as<double>(spec, "value", "eta spec");
        return {[value](const ParticleSystem&) { return value; }, std::fabs(value) + 1e-300};
    }
    throw UsageError("config: unknown eta '" + name + "'");
}

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

struct RunConfig {
    std::string model;  ///< direct | massflow | pure_birth | custom-registered
    std::uint64_t n = 1;
    json init = json{{"kind", "monodisperse"}, {"x0", 1.0}, {"count", 1}};
    std::optional<json> coag, frag, source, efflux;
    BoundaryGuards guards;
    bool use_boundary_guard = true;
    bool truncate_at_boundary = false;
    std::optional<json> pure_birth_rate;

    std::uint64_t max_jumps = 1'000'000;
    double time_horizon = 1e300;
    double rate_ceiling = 1e12;
    std::size_t tail_window = 64;
    double tail_tol = 1e-6;

    std::uint64_t replicates = 1;
    std::uint64_t base_seed = 1;

    json extra;  ///< remaining fields (drift states/eta, validation name, custom params)
};

inline RunConfig parse_run_config(const json& j) {
    if (!j.is_object()) throw UsageError("config: top level must be a JSON object");
    const int schema = detail::field_or(j, "schema", 1, "config");
    if (schema != 1) throw UsageError("config: unsupported schema version");

    RunConfig cfg;
    cfg.model = detail::field_as<std::string>(j, "model", "config");
    cfg.n = detail::field_or<std::uint64_t>(j, "n", 1, "config");
    if (j.contains("init")) cfg.init = j.at("init");
    if (j.contains("coag")) cfg.coag = j.at("coag");
    if (j.contains("frag")) cfg.frag = j.at("frag");
    if (j.contains("source")) cfg.source = j.at("source");
    if (j.contains("efflux")) cfg.efflux = j.at("efflux");
    if (j.contains("pure_birth_rate")) cfg.pure_birth_rate = j.at("pure_birth_rate");

    if (j.contains("guards")) {
        const json& g = j.at("guards");
        cfg.guards.x_min = detail::field_or(g, "x_min", cfg.guards.x_min, "guards");
        cfg.guards.x_max = detail::field_or(g, "x_max", cfg.guards.x_max, "guards");
        cfg.guards.n_max = detail::field_or<std::uint64_t>(g, "n_max", cfg.guards.n_max, "guards");
    }
    cfg.use_boundary_guard = detail::field_or(j, "use_boundary_guard", true, "config");
    cfg.truncate_at_boundary = detail::field_or(j, "truncate_at_boundary", false, "config");

    if (j.contains("stop")) {
        const json& s = j.at("stop");
        cfg.max_jumps = detail::field_or<std::uint64_t>(s, "max_jumps", cfg.max_jumps, "stop");
        cfg.time_horizon = detail::field_or(s, "time_horizon", cfg.time_horizon, "stop");
        cfg.rate_ceiling = detail::field_or(s, "rate_ceiling", cfg.rate_ceiling, "stop");
    }
    if (j.contains("classify")) {
        const json& c = j.at("classify");
        cfg.tail_window = detail::field_or<std::size_t>(c, "tail_window", cfg.tail_window, "classify");
        cfg.tail_tol = detail::field_or(c, "tail_tol", cfg.tail_tol, "classify");
    }
    if (j.contains("ensemble")) {
        const json& e = j.at("ensemble");
        cfg.replicates = detail::field_or<std::uint64_t>(e, "replicates", 1, "ensemble");
        cfg.base_seed = detail::field_or<std::uint64_t>(e, "base_seed", 1, "ensemble");
        if (cfg.replicates < 1) throw UsageError("config: ensemble.replicates must be >= 1");
    }

    static const char* known[] = {"schema", "model",  "n",       "init",    "coag",
                                  "frag",   "source", "efflux",  "guards",  "use_boundary_guard",
                                  "truncate_at_boundary", "pure_birth_rate", "stop", "classify",
                                  "ensemble"};
    cfg.extra = json::object();
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool is_known = false;
        for (const char* k : known) is_known = is_known || (it.key() == k);
        if (!is_known) cfg.extra[it.key()] = it.value();
    }
    return cfg;
}

/// Canonical echo: defaults filled in, keys sorted by the JSON library.
inline json to_json(const RunConfig& cfg) {
    json j{{"schema", 1},
           {"model", cfg.model},
           {"n", cfg.n},
           {"init", cfg.init},
           {"guards",
            {{"x_min", cfg.guards.x_min}, {"x_max", cfg.guards.x_max}, {"n_max", cfg.guards.n_max}}},
           {"use_boundary_guard", cfg.use_boundary_guard},
           {"truncate_at_boundary", cfg.truncate_at_boundary},
           {"stop",
            {{"max_jumps", cfg.max_jumps},
             {"time_horizon", cfg.time_horizon},
             {"rate_ceiling", cfg.rate_ceiling}}},
           {"classify", {{"tail_window", cfg.tail_window}, {"tail_tol", cfg.tail_tol}}},
           {"ensemble", {{"replicates", cfg.replicates}, {"base_seed", cfg.base_seed}}}};
    if (cfg.coag) j["coag"] = *cfg.coag;
    if (cfg.frag) j["frag"] = *cfg.frag;
    if (cfg.source) j["source"] = *cfg.source;
    if (cfg.efflux) j["efflux"] = *cfg.efflux;
    if (cfg.pure_birth_rate) j["pure_birth_rate"] = *cfg.pure_birth_rate;
    for (auto it = cfg.extra.begin(); it != cfg.extra.end(); ++it) j[it.key()] = it.value();
    return j;
}

inline ParticleSystem make_initial_particles(const RunConfig& cfg) {
    ParticleSystem xi;
    xi.n = cfg.n;
    const auto kind = detail::field_as<std::string>(cfg.init, "kind", "init");
    if (kind == "monodisperse") {
        const double x0 = detail::field_as<double>(cfg.init, "x0", "init");
        const auto count = detail::field_as<std::uint64_t>(cfg.init, "count", "init");
        xi.sizes.assign(count, x0);
    } else if (kind == "sizes") {
        xi.sizes = detail::field_as<std::vector<double>>(cfg.init, "sizes", "init");
    } else if (kind == "empty") {
        // no particles
    } else {
        throw UsageError("config: unknown init kind '" + kind + "' for a particle model");
    }
    return xi;
}

inline DirectSimConfig make_direct_config(const RunConfig& cfg) {
    DirectSimConfig d;
    d.n = cfg.n;
    d.guards = cfg.guards;
    if (cfg.coag) d.coag = make_coag_kernel(*cfg.coag);
    if (cfg.frag) d.frag = make_frag_law(*cfg.frag);
    if (cfg.source) d.source = make_source(*cfg.source);
    if (cfg.efflux) d.efflux = make_efflux(*cfg.efflux);
    d.validate();
    return d;
}

inline MassFlowConfig make_massflow_config(const RunConfig& cfg) {
    MassFlowConfig m;
    m.n = cfg.n;
    m.guards = cfg.guards;
    m.truncate_at_boundary = cfg.truncate_at_boundary;
    if (cfg.coag) m.coag = make_coag_kernel(*cfg.coag);
    if (cfg.frag) m.mf_frag = massflow_from_frag(make_frag_law(*cfg.frag));
    if (cfg.source) m.source = make_source(*cfg.source);
    if (cfg.efflux) m.efflux = make_efflux(*cfg.efflux);
    m.validate();
    return m;
}

// ---------------------------------------------------------------------------
// Type-erased replicate runner (shared by the simulate/ensemble commands)
// ---------------------------------------------------------------------------

/// Sink for trajectory JSONL records; null when event logs are not wanted.
using TrajectorySink = std::function<void(const json&)>;

struct RunOutcome {
    ReplicateRow row;
    ExplosionVerdict verdict;
};

/// A configured model reduced to "run replicate r". Every call builds a
/// fresh law instance, so replicates are independent and cache state never
/// leaks across them.
using ReplicateRunner = std::function<RunOutcome(std::uint64_t replicate, const TrajectorySink& sink)>;

namespace detail {

template <class State, class LawPtr>
RunOutcome run_particle_replicate(const RunConfig& cfg, LawPtr impl, ProcessLaw<State> law, State init,
                                  std::uint64_t replicate, const TrajectorySink& sink) {
    StopRule<State> stop;
    stop.max_jumps = cfg.max_jumps;
    stop.time_horizon = cfg.time_horizon;
    stop.rate_ceiling = cfg.rate_ceiling;
    if (cfg.use_boundary_guard && !cfg.truncate_at_boundary) {
        stop.state_guard = make_boundary_guard(cfg.guards);
    }
    SimulateOptions<State> options;
    options.replicate = replicate;
    options.record_states = false;
    if (sink) {
        sink(trajectory_record<State>(0, 0.0, law.rate(init), "init", init));
        options.observer = [&sink, impl](std::uint64_t k, double t, double rate, const State& s) {
            sink(trajectory_record<State>(k, t, rate, to_string(impl->last_event().kind), s));
        };
    }
    const std::uint64_t seed = derive_seed(cfg.base_seed, replicate);
    auto traj = simulate_chain(law, std::move(init), seed, stop, std::move(options));
    auto verdict = classify(traj, stop, cfg.tail_window, cfg.tail_tol);
    return {make_row(replicate, verdict), verdict};
}

}  // namespace detail

inline ReplicateRunner prepare_runner(const RunConfig& cfg);

/// Extension hook: model name -> runner factory.
inline std::map<std::string, std::function<ReplicateRunner(const RunConfig&)>>& model_registry() {
    static std::map<std::string, std::function<ReplicateRunner(const RunConfig&)>> registry;
    return registry;
}

inline void register_model(const std::string& name, std::function<ReplicateRunner(const RunConfig&)> f) {
    model_registry()[name] = std::move(f);
}

inline ReplicateRunner prepare_runner(const RunConfig& cfg) {
    if (cfg.model == "direct") {
        return [cfg](std::uint64_t replicate, const TrajectorySink& sink) {
            auto impl = std::make_shared<DirectSimLaw>(make_direct_config(cfg));
            return detail::run_particle_replicate(cfg, impl, make_process_law(impl),
                                                  make_initial_particles(cfg), replicate, sink);
        };
    }
    if (cfg.model == "massflow") {
        return [cfg](std::uint64_t replicate, const TrajectorySink& sink) {
            auto impl = std::make_shared<MassFlowLaw>(make_massflow_config(cfg));
            return detail::run_particle_replicate(cfg, impl, make_process_law(impl),
                                                  make_initial_particles(cfg), replicate, sink);
        };
    }
    if (cfg.model == "pure_birth") {
        if (!cfg.pure_birth_rate) throw UsageError("config: pure_birth model needs pure_birth_rate");
        return [cfg](std::uint64_t replicate, const TrajectorySink& sink) {
            auto law = pure_birth_law(make_rate_fn(*cfg.pure_birth_rate));
            std::int64_t init = 1;
            if (cfg.init.contains("kind") &&
                detail::field_as<std::string>(cfg.init, "kind", "init") == "integer") {
                init = detail::field_as<std::int64_t>(cfg.init, "value", "init");
            }
            StopRule<std::int64_t> stop;
            stop.max_jumps = cfg.max_jumps;
            stop.time_horizon = cfg.time_horizon;
            stop.rate_ceiling = cfg.rate_ceiling;
            SimulateOptions<std::int64_t> options;
            options.replicate = replicate;
            options.record_states = false;
            if (sink) {
                sink(trajectory_record<std::int64_t>(0, 0.0, law.rate(init), "init", init));
                options.observer = [&sink](std::uint64_t k, double t, double rate, const std::int64_t& s) {
                    sink(trajectory_record<std::int64_t>(k, t, rate, "birth", s));
                };
            }
            const std::uint64_t seed = derive_seed(cfg.base_seed, replicate);
            auto traj = simulate_chain(law, init, seed, stop, std::move(options));
            auto verdict = classify(traj, stop, cfg.tail_window, cfg.tail_tol);
            return RunOutcome{make_row(replicate, verdict), verdict};
        };
    }
    auto it = model_registry().find(cfg.model);
    if (it == model_registry().end()) throw UsageError("config: unknown model '" + cfg.model + "'");
    return it->second(cfg);
}

// ---------------------------------------------------------------------------
// Drift audit (the drift subcommand)
// ---------------------------------------------------------------------------

struct DriftAuditRow {
    ParticleSystem state;
    DriftReport report;
    bool member = false;
};

inline std::vector<DriftAuditRow> run_drift_audit(const RunConfig& cfg) {
    if (cfg.model != "direct" && cfg.model != "massflow") {
        throw UsageError("drift audit: model must be direct or massflow");
    }
    const auto eta = make_eta(detail::require_field(cfg.extra, "eta", "drift config"));
    const double epsilon = detail::field_as<double>(cfg.extra, "epsilon", "drift config");
    const auto mc_samples = detail::field_or<std::size_t>(cfg.extra, "mc_samples", 10'000, "drift config");
    if (!cfg.extra.contains("states")) throw UsageError("drift audit: config needs 'states'");

    ProcessLaw<ParticleSystem> law = cfg.model == "direct" ? build_law(make_direct_config(cfg))
                                                           : build_law(make_massflow_config(cfg));
    std::vector<DriftAuditRow> rows;
    std::size_t k = 0;
    for (const auto& s : cfg.extra.at("states")) {
        DriftAuditRow row;
        row.state.n = detail::field_or<std::uint64_t>(s, "n", cfg.n, "drift state");
        row.state.sizes = detail::field_as<std::vector<double>>(s, "sizes", "drift state");
        if (row.state.n != cfg.n) throw UsageError("drift audit: state weight differs from config n");
        row.report = drift(law, row.state, eta, mc_samples, derive_seed(cfg.base_seed, k++));
        row.member = row.report.epsilon_member(epsilon);
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace coagfrag
