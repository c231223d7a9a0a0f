#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "coagfrag/config.hpp"
#include "coagfrag/output.hpp"

using namespace coagfrag;

namespace {

json massflow_doubling_config() {
    return json::parse(R"({
        "schema": 1,
        "model": "massflow",
        "n": 1,
        "init": {"kind": "monodisperse", "x0": 1.0, "count": 1},
        "coag": {"name": "multiplicative"},
        "stop": {"max_jumps": 100000, "rate_ceiling": 1e12},
        "ensemble": {"replicates": 64, "base_seed": 9}
    })");
}

}  // namespace

TEST_CASE("registry: rate functions") {
    REQUIRE(make_rate_fn(json{{"name", "power"}, {"c", 2.0}, {"exponent", -1.0}})(4.0) == 0.5);
    REQUIRE(make_rate_fn(json{{"name", "power"}, {"c", 1.0}, {"alpha", 1.0}})(4.0) == 0.25);
    REQUIRE(make_rate_fn(json{{"name", "affine"}, {"a", 1.0}, {"b", 1.0}})(3.0) == 4.0);
    REQUIRE(make_rate_fn(json{{"name", "constant"}, {"c", 5.0}})(9.0) == 5.0);
    REQUIRE(std::fabs(make_rate_fn(json{{"name", "one_minus_log"}})(0.5) -
                      (1.0 + std::log(2.0))) < 1e-15);
    REQUIRE_THROWS_AS(make_rate_fn(json{{"name", "nope"}}), UsageError);
    REQUIRE_THROWS_AS(make_rate_fn(json{{"name", "power"}}), UsageError);
}

TEST_CASE("registry: kappa, kernels, sources, efflux, eta") {
    REQUIRE(make_kappa_fn(json{{"name", "half"}})(3.0) == 1.5);
    REQUIRE(make_kappa_fn(json("shifted_half"))(1.0) == 0.75);  // bare-name form
    REQUIRE(make_kappa_fn(json{{"name", "shifted_half"}})(0.5) == 0.5);  // closed branch
    REQUIRE(make_kappa_fn(json{{"name", "shifted_half"}})(0.4) == 0.2);

    REQUIRE(make_coag_kernel(json{{"name", "product_power"}, {"beta", 1.0}})(2.0, 3.0) == 6.0);
    REQUIRE(make_coag_kernel(json{{"name", "additive"}})(2.0, 3.0) == 5.0);
    REQUIRE_THROWS_AS(make_coag_kernel(json{{"name", "brownian"}}), UsageError);

    auto frag = make_frag_law(json{{"name", "uniform_binary"},
                                   {"rate", {{"name", "power"}, {"exponent", -1.0}}}});
    REQUIRE(frag.rate(2.0) == 0.25);

    auto src = make_source(json{{"name", "point"}, {"total", 2.0}, {"x", 1.5}});
    REQUIRE(src.first_moment == 3.0);
    REQUIRE(make_efflux(json{{"name", "power"}, {"c", 2.0}, {"p", 1.0}})(3.0) == 6.0);

    auto eta = make_eta(json{{"name", "saturating_count"}, {"beta", 1.0}});
    REQUIRE(eta(ParticleSystem{2, {1.0, 1.0}}) == 0.5);
    REQUIRE_THROWS_AS(make_eta(json{{"name", "mystery"}}), UsageError);
}

TEST_CASE("run config round-trips through its canonical echo") {
    auto cfg = parse_run_config(massflow_doubling_config());
    const json echo = to_json(cfg);
    auto cfg2 = parse_run_config(echo);
    REQUIRE(to_json(cfg2) == echo);
    REQUIRE(echo.dump() == to_json(cfg2).dump());
    REQUIRE(cfg2.replicates == 64);
    REQUIRE(cfg2.base_seed == 9);
    REQUIRE(cfg2.rate_ceiling == 1e12);
}

TEST_CASE("config errors carry the offending field") {
    json bad = massflow_doubling_config();
    bad.erase("model");
    REQUIRE_THROWS_WITH(parse_run_config(bad), Catch::Matchers::ContainsSubstring("model"));

    json bad2 = massflow_doubling_config();
    bad2["ensemble"]["replicates"] = 0;
    REQUIRE_THROWS_AS(parse_run_config(bad2), UsageError);

    auto cfg = parse_run_config(massflow_doubling_config());
    cfg.model = "unknown";
    REQUIRE_THROWS_AS(prepare_runner(cfg), UsageError);
}

TEST_CASE("prepared massflow runner reproduces the doubling chain verdict") {
    auto cfg = parse_run_config(massflow_doubling_config());
    auto runner = prepare_runner(cfg);
    auto outcome = runner(0, nullptr);
    REQUIRE(outcome.verdict.kind == VerdictKind::kExploded);
    REQUIRE(outcome.row.jumps == 40);  // rate 2^k crosses 1e12 at k = 40
    REQUIRE(std::fabs(outcome.verdict.tau_estimate - outcome.verdict.tau_lower -
                      std::exp2(-40.0)) < 1e-9 * std::exp2(-40.0));
}

TEST_CASE("pure birth runner survives to the horizon") {
    json j{{"schema", 1},
           {"model", "pure_birth"},
           {"init", {{"kind", "integer"}, {"value", 1}}},
           {"pure_birth_rate", {{"name", "power"}, {"exponent", 1.0}}},
           {"stop", {{"max_jumps", 1000000}, {"time_horizon", 10.0}}},
           {"ensemble", {{"replicates", 4}, {"base_seed", 3}}}};
    auto runner = prepare_runner(parse_run_config(j));
    auto outcome = runner(1, nullptr);
    REQUIRE(outcome.verdict.kind == VerdictKind::kSurvived);
}

TEST_CASE("empty initial state without source absorbs at time zero") {
    json j{{"schema", 1},
           {"model", "direct"},
           {"n", 2},
           {"init", {{"kind", "empty"}}},
           {"efflux", {{"name", "power"}, {"c", 1.0}, {"p", 0.0}}}};
    auto runner = prepare_runner(parse_run_config(j));
    auto outcome = runner(0, nullptr);
    REQUIRE(outcome.verdict.kind == VerdictKind::kAbsorbed);
    REQUIRE(outcome.verdict.t_final == 0.0);
    REQUIRE(outcome.row.jumps == 0);
}

TEST_CASE("ensemble rows are independent of the worker count") {
    auto cfg = parse_run_config(massflow_doubling_config());
    auto runner = prepare_runner(cfg);
    auto serial = run_replicates(cfg.replicates, 1, [&](std::uint64_t r) { return runner(r, nullptr).row; });
    auto threaded = run_replicates(cfg.replicates, 4, [&](std::uint64_t r) { return runner(r, nullptr).row; });
    REQUIRE(serial.size() == threaded.size());
    std::string csv_a, csv_b;
    for (std::size_t i = 0; i < serial.size(); ++i) {
        csv_a += summary_csv_row(serial[i]) + "\n";
        csv_b += summary_csv_row(threaded[i]) + "\n";
    }
    REQUIRE(csv_a == csv_b);
}

TEST_CASE("replicates differ from each other but rerun identically") {
    auto cfg = parse_run_config(massflow_doubling_config());
    cfg.frag = json{{"name", "uniform_binary"}, {"rate", {{"name", "constant"}, {"c", 1.0}}}};
    cfg.coag.reset();
    cfg.model = "direct";
    cfg.max_jumps = 50;
    auto runner = prepare_runner(cfg);
    auto a0 = runner(0, nullptr);
    auto a1 = runner(1, nullptr);
    auto b0 = runner(0, nullptr);
    REQUIRE(a0.verdict.tau_lower == b0.verdict.tau_lower);
    REQUIRE(a0.verdict.tau_lower != a1.verdict.tau_lower);
}

TEST_CASE("custom-registered models plug into the runner registry") {
    register_model("always_absorbed", [](const RunConfig&) -> ReplicateRunner {
        return [](std::uint64_t r, const TrajectorySink&) {
            ExplosionVerdict v;
            v.kind = VerdictKind::kAbsorbed;
            v.t_final = 0.0;
            return RunOutcome{make_row(r, v), v};
        };
    });
    RunConfig cfg;
    cfg.model = "always_absorbed";
    auto outcome = prepare_runner(cfg)(7, nullptr);
    REQUIRE(outcome.row.replicate == 7);
    REQUIRE(outcome.verdict.kind == VerdictKind::kAbsorbed);
}

TEST_CASE("drift audit command checks trap membership") {
    json j{{"schema", 1},
           {"model", "massflow"},
           {"n", 1},
           {"coag", {{"name", "product_power"}, {"beta", 0.75}}},
           {"states", json::array({json{{"sizes", {1.0, 2.0}}}, json{{"sizes", {4.0}}}})},
           {"eta", {{"name", "power_tail"}, {"beta", 0.5}, {"bound", 4.0}}},
           {"epsilon", 0.01},
           {"mc_samples", 100}};
    auto rows = run_drift_audit(parse_run_config(j));
    REQUIRE(rows.size() == 2);
    for (const auto& row : rows) {
        REQUIRE(row.report.exact);
        REQUIRE(row.report.estimate > 0.0);
    }
}

TEST_CASE("trajectory records serialize states per schema") {
    const auto rec = trajectory_record(3, 0.5, 2.0, "coag", ParticleSystem{2, {1.0, 2.0}});
    REQUIRE(rec.at("k") == 3);
    REQUIRE(rec.at("state").at("n") == 2);
    REQUIRE(rec.at("state").at("sizes") == std::vector<double>{1.0, 2.0});
    const auto birth = trajectory_record<std::int64_t>(1, 0.25, 3.0, "birth", 4);
    REQUIRE(birth.at("state").at("value") == 4);
}

TEST_CASE("summary csv rows are deterministic") {
    ReplicateRow row;
    row.replicate = 2;
    row.verdict = VerdictKind::kExploded;
    row.tau_lower = 1.5;
    row.tau_estimate = 1.625;
    row.jumps = 12;
    REQUIRE(summary_csv_row(row) == "2,Exploded,1.5,1.625,12,nan");
}
