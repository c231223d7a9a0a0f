#pragma once

#include <cmath>
#include <cstdio>
#include <string>

#include "coagfrag/ensemble.hpp"
#include "coagfrag/explosion.hpp"
#include "coagfrag/particle_system.hpp"

#include <json.hpp>

namespace coagfrag {

/// Deterministic float formatting for CSV output.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline nlohmann::json state_json(const ParticleSystem& xi) {
    return {{"n", xi.n}, {"sizes", xi.sizes}};
}

inline nlohmann::json state_json(std::int64_t value) { return {{"value", value}}; }

inline nlohmann::json state_json(double value) { return {{"value", value}}; }

/// One trajectory JSONL record.
template <class State>
nlohmann::json trajectory_record(std::uint64_t k, double t, double rate, const char* event,
                                 const State& state) {
    return {{"k", k}, {"t", t}, {"rate", rate}, {"event", event}, {"state", state_json(state)}};
}

inline nlohmann::json verdict_json(const ExplosionVerdict& v) {
    nlohmann::json j{{"verdict", to_string(v.kind)},
                     {"jumps", v.jumps},
                     {"terminal_rate", v.terminal_rate}};
    if (!std::isnan(v.tau_lower)) j["tau_lower"] = v.tau_lower;
    if (!std::isnan(v.tau_estimate)) j["tau_estimate"] = v.tau_estimate;
    if (!std::isnan(v.t_final)) j["t_final"] = v.t_final;
    if (!std::isnan(v.tail_slope)) j["tail_slope"] = v.tail_slope;
    return j;
}

inline const char* kSummaryCsvHeader = "replicate,verdict,tau_lower,tau_estimate,jumps,t_final";

inline std::string summary_csv_row(const ReplicateRow& row) {
    std::string line = std::to_string(row.replicate);
    line += ',';
    line += to_string(row.verdict);
    line += ',';
    line += format_double(row.tau_lower);
    line += ',';
    line += format_double(row.tau_estimate);
    line += ',';
    line += std::to_string(row.jumps);
    line += ',';
    line += format_double(row.t_final);
    return line;
}

inline nlohmann::json aggregate_json(const EnsembleAggregate& agg) {
    return {{"schema", 1},
            {"replicates", agg.replicates},
            {"verdicts",
             {{"exploded", agg.exploded},
              {"survived", agg.survived},
              {"absorbed", agg.absorbed},
              {"inconclusive", agg.inconclusive}}},
            {"explosion_fraction", agg.explosion_fraction},
            {"explosion_fraction_ci95", {agg.fraction_ci95_low, agg.fraction_ci95_high}},
            {"tau", {{"mean", agg.tau_mean},
                     {"stderr", agg.tau_stderr},
                     {"q05", agg.tau_q05},
                     {"q25", agg.tau_q25},
                     {"q50", agg.tau_q50},
                     {"q75", agg.tau_q75},
                     {"q95", agg.tau_q95}}}};
}

}  // namespace coagfrag
