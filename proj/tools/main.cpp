#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "coagfrag/config.hpp"
#include "coagfrag/output.hpp"
#include "coagfrag/validations.hpp"

namespace fs = std::filesystem;
using coagfrag::json;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir = ".";
    int verbosity = 1;
    unsigned workers = coagfrag::default_workers();
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::uint64_t replicates = 0;
    bool replicates_set = false;
};

json load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw coagfrag::UsageError("cannot open config file: " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw coagfrag::UsageError("config parse error in " + path + ": " + e.what());
    }
}

coagfrag::RunConfig load_run_config(const CommonArgs& args) {
    auto cfg = coagfrag::parse_run_config(load_config_file(args.config_path));
    if (args.seed_set) cfg.base_seed = args.seed;
    if (args.replicates_set) cfg.replicates = args.replicates;
    return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw coagfrag::UsageError("cannot write " + path.string());
    out << text;
}

void write_config_echo(const fs::path& dir, const coagfrag::RunConfig& cfg) {
    write_text(dir / "config_echo.json", coagfrag::to_json(cfg).dump(2) + "\n");
}

int cmd_simulate(const CommonArgs& args) {
    auto cfg = load_run_config(args);
    const fs::path dir(args.out_dir);
    fs::create_directories(dir);
    write_config_echo(dir, cfg);

    auto runner = coagfrag::prepare_runner(cfg);
    std::ofstream jsonl;
    coagfrag::TrajectorySink sink;
    if (args.verbosity >= 2) {
        jsonl.open(dir / "trajectory.jsonl", std::ios::binary);
        sink = [&jsonl](const json& record) { jsonl << record.dump() << "\n"; };
    }
    auto outcome = runner(0, sink);

    json verdict = coagfrag::verdict_json(outcome.verdict);
    verdict["schema"] = 1;
    verdict["seed"] = cfg.base_seed;
    write_text(dir / "verdict.json", verdict.dump(2) + "\n");
    std::cout << "verdict " << to_string(outcome.verdict.kind) << " after " << outcome.verdict.jumps
              << " jumps (terminal rate " << outcome.verdict.terminal_rate << ")\n";
    return 0;
}

int cmd_ensemble(const CommonArgs& args) {
    auto cfg = load_run_config(args);
    const fs::path dir(args.out_dir);
    fs::create_directories(dir);
    write_config_echo(dir, cfg);
    if (args.verbosity >= 2) fs::create_directories(dir / "trajectories");

    auto runner = coagfrag::prepare_runner(cfg);
    auto rows = coagfrag::run_replicates(cfg.replicates, args.workers, [&](std::uint64_t r) {
        coagfrag::TrajectorySink sink;
        std::ofstream jsonl;
        if (args.verbosity >= 2) {
            char name[64];
            std::snprintf(name, sizeof(name), "replicate_%06llu.jsonl", (unsigned long long)r);
            jsonl.open(dir / "trajectories" / name, std::ios::binary);
            sink = [&jsonl](const json& record) { jsonl << record.dump() << "\n"; };
        }
        return runner(r, sink).row;
    });

    if (args.verbosity >= 1) {
        std::string csv = coagfrag::kSummaryCsvHeader;
        csv += "\n";
        for (const auto& row : rows) {
            csv += coagfrag::summary_csv_row(row);
            csv += "\n";
        }
        write_text(dir / "summary.csv", csv);
    }
    const auto agg = coagfrag::aggregate_rows(rows);
    write_text(dir / "aggregate.json", coagfrag::aggregate_json(agg).dump(2) + "\n");
    std::cout << "replicates " << agg.replicates << ": exploded " << agg.exploded << ", survived "
              << agg.survived << ", absorbed " << agg.absorbed << ", inconclusive "
              << agg.inconclusive << "\n";
    std::cout << "explosion fraction " << agg.explosion_fraction << " [" << agg.fraction_ci95_low
              << ", " << agg.fraction_ci95_high << "]";
    if (agg.exploded > 0) {
        std::cout << ", tau mean " << agg.tau_mean << " +- " << agg.tau_stderr;
    }
    std::cout << "\n";
    return 0;
}

int cmd_drift(const CommonArgs& args) {
    auto cfg = load_run_config(args);
    const fs::path dir(args.out_dir);
    fs::create_directories(dir);
    write_config_echo(dir, cfg);

    auto rows = coagfrag::run_drift_audit(cfg);
    json out = json::array();
    std::size_t members = 0;
    for (const auto& row : rows) {
        out.push_back({{"state", coagfrag::state_json(row.state)},
                       {"estimate", row.report.estimate},
                       {"std_error", row.report.std_error},
                       {"exact", row.report.exact},
                       {"epsilon_member", row.member}});
        members += row.member ? 1 : 0;
    }
    write_text(dir / "drift.json", json{{"schema", 1}, {"rows", out}}.dump(2) + "\n");
    std::cout << "drift audit: " << members << " / " << rows.size() << " states in the trap set\n";
    return 0;
}

int cmd_validate(const std::string& name, const CommonArgs& args) {
    const auto res = coagfrag::run_validation(name, args.workers);
    for (const auto& line : res.lines) std::cout << "  " << line << "\n";
    std::cout << res.name << ": " << (res.report_only ? "REPORT" : (res.pass ? "PASS" : "FAIL"))
              << "\n";
    if (!args.out_dir.empty()) {
        const fs::path dir(args.out_dir);
        fs::create_directories(dir);
        write_text(dir / "validation.json",
                   json{{"schema", 1},
                        {"name", res.name},
                        {"pass", res.pass},
                        {"report_only", res.report_only},
                        {"detail", res.lines}}
                           .dump(2) +
                       "\n");
    }
    return res.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stochastic coagulation-fragmentation jump process toolkit"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string validation_name;

    auto add_common = [&args](CLI::App* cmd, bool needs_config) {
        auto* opt = cmd->add_option("--config", args.config_path, "JSON run configuration");
        if (needs_config) opt->required();
        cmd->add_option("--out", args.out_dir, "output directory");
        cmd->add_option("--verbosity", args.verbosity, "0 verdicts, 1 + rows, 2 + event logs")
            ->check(CLI::Range(0, 2));
        cmd->add_option("--workers", args.workers, "worker threads for replicates");
        cmd->add_option("--seed", args.seed, "override ensemble.base_seed")
            ->each([&args](const std::string&) { args.seed_set = true; });
        cmd->add_option("--replicates", args.replicates, "override ensemble.replicates")
            ->each([&args](const std::string&) { args.replicates_set = true; });
    };

    auto* simulate = app.add_subcommand("simulate", "run one trajectory and classify it");
    add_common(simulate, true);
    auto* ensemble = app.add_subcommand("ensemble", "run seeded replicates and aggregate verdicts");
    add_common(ensemble, true);
    auto* drift_cmd = app.add_subcommand("drift", "audit drift-criterion membership of states");
    add_common(drift_cmd, true);
    auto* validate = app.add_subcommand("validate", "run a named validation check");
    add_common(validate, false);
    validate->add_option("--name", validation_name, "validation name")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(args);
        if (ensemble->parsed()) return cmd_ensemble(args);
        if (drift_cmd->parsed()) return cmd_drift(args);
        if (validate->parsed()) return cmd_validate(validation_name, args);
        return 2;
    } catch (const coagfrag::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const coagfrag::ModelError& e) {
        std::cerr << "model error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
