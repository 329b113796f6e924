#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aoisched/artifact.hpp"
#include "aoisched/buffered.hpp"
#include "aoisched/checks.hpp"
#include "aoisched/recipes.hpp"
#include "aoisched/rvia.hpp"
#include "aoisched/version.hpp"

namespace {

using namespace aoisched;

constexpr int kExitOk = 0;
constexpr int kExitVerificationFailure = 1;
constexpr int kExitUsageError = 2;

std::vector<double> parse_probs(const std::string& csv) {
    std::vector<double> probs;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) probs.push_back(std::stod(item));
    return probs;
}

std::string version_string() { return std::string(kVersion) + "+" + kGitHash; }

int cmd_solve(int users, int bound, const std::string& probs_csv, double tol,
              int max_iters, bool buffered, const std::string& out_base) {
    const std::vector<double> probs = parse_probs(probs_csv);
    if (int(probs.size()) != users) {
        std::cerr << "error: --p must list exactly " << users << " probabilities\n";
        return kExitUsageError;
    }

    PolicyMeta meta;
    meta.users = users;
    meta.bound = bound;
    meta.probs = probs;
    meta.tol = tol;
    meta.version = version_string();

    if (buffered) {
        BufferedSolveConfig cfg;
        cfg.users = users;
        cfg.bound = bound;
        cfg.probs = probs;
        cfg.tol = tol;
        cfg.max_iters = max_iters;
        BufferedSolveResult result = solve_buffered(cfg);
        meta.kind = "buffered_policy";
        meta.iterations = result.iterations;
        meta.converged = result.converged;
        meta.average_cost = result.average_cost;
        save_policy(out_base, result.policy, meta);
        std::cout << "buffered solve: users=" << users << " m=" << bound
                  << " average_cost=" << format_double(result.average_cost)
                  << " iterations=" << result.iterations
                  << " converged=" << (result.converged ? "yes" : "no") << "\n";
        if (!result.converged) {
            std::cerr << "error: did not converge (final span "
                      << format_double(result.final_span) << " after "
                      << result.iterations << " sweeps)\n";
            return kExitVerificationFailure;
        }
        return kExitOk;
    }

    SolveConfig cfg;
    cfg.users = users;
    cfg.bound = bound;
    cfg.probs = probs;
    cfg.tol = tol;
    cfg.max_iters = max_iters;
    SolveResult result = solve(cfg);
    meta.kind = "policy";
    meta.iterations = result.iterations;
    meta.converged = result.converged;
    meta.average_cost = result.average_cost;
    save_policy(out_base, result.policy, meta);
    std::cout << "solve: users=" << users << " m=" << bound
              << " average_cost=" << format_double(result.average_cost)
              << " iterations=" << result.iterations
              << " converged=" << (result.converged ? "yes" : "no") << "\n"
              << "artifact: " << out_base << ".csv / " << out_base << ".json\n";
    if (!result.converged) {
        std::cerr << "error: did not converge (final span "
                  << format_double(result.final_span) << " after " << result.iterations
                  << " sweeps)\n";
        return kExitVerificationFailure;
    }
    return kExitOk;
}

void print_rows(const std::vector<SweepRow>& rows) {
    std::printf("%-24s %-3s %-16s %-10s %s\n", "scheduler", "N", "probs", "horizon",
                "avg_total_age");
    for (const auto& row : rows) {
        std::string probs;
        for (double p : row.cell.model.probs) {
            if (!probs.empty()) probs += ",";
            char buf[16];
            std::snprintf(buf, sizeof(buf), "%g", p);
            probs += buf;
        }
        if (!row.error.empty())
            std::printf("%-24s %-3d %-16s %-10lld error: %s\n", row.cell.scheduler.c_str(),
                        row.cell.model.user_count(), probs.c_str(),
                        static_cast<long long>(row.cell.horizon), row.error.c_str());
        else
            std::printf("%-24s %-3d %-16s %-10lld %.6f\n", row.cell.scheduler.c_str(),
                        row.cell.model.user_count(), probs.c_str(),
                        static_cast<long long>(row.cell.horizon),
                        row.metrics.avg_total_age);
    }
}

int cmd_run(const std::string& recipe, const std::string& config_path,
            const std::string& scheduler, const std::string& policy_artifact,
            int users, const std::string& probs_csv, std::int64_t horizon,
            std::int64_t warmup, std::uint64_t seed, int bound, double gamma,
            const std::string& out_dir, int jobs) {
    ExperimentSpec spec;
    if (!recipe.empty()) {
        if (recipe == "fig3_switch_map") {
            ExperimentOutput out =
                run_switch_map_recipe(out_dir, bound > 0 ? bound : 10);
            std::cout << "wrote " << out.metrics_path << "\n";
            return kExitOk;
        }
        spec = make_recipe(recipe);
    } else if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) {
            std::cerr << "error: cannot open config " << config_path << "\n";
            return kExitUsageError;
        }
        std::ostringstream ss;
        ss << in.rdbuf();
        spec = parse_experiment(ss.str());
    } else if (!scheduler.empty()) {
        if (probs_csv.empty()) {
            std::cerr << "error: ad-hoc runs need --p\n";
            return kExitUsageError;
        }
        SchedulerSpec ss;
        ss.kind = scheduler;
        ss.bound = bound;
        ss.gamma = gamma;
        ss.artifact = policy_artifact;
        if (scheduler == "structural_mdp" && policy_artifact.empty()) {
            std::cerr << "error: structural_mdp needs --policy pointing at an artifact; "
                         "create one with `aoisched solve`\n";
            return kExitUsageError;
        }
        spec.name = "adhoc";
        spec.schedulers = {ss};
        spec.grid = {{parse_probs(probs_csv)}};
        if (users > 0 && int(spec.grid[0].probs.size()) != users) {
            std::cerr << "error: --p lists " << spec.grid[0].probs.size()
                      << " probabilities but --n is " << users << "\n";
            return kExitUsageError;
        }
    } else {
        std::cerr << "error: need one of --recipe, --config or --scheduler\n";
        return kExitUsageError;
    }

    if (horizon >= 0) spec.horizon = horizon; // 0 is rejected by validate()
    if (warmup >= 0) spec.warmup = warmup;
    // Flag overrides apply to every scheduler they are meaningful for.
    for (auto& ss : spec.schedulers) {
        if (bound > 0) ss.bound = bound;
        if (ss.kind == "mdp_online" && gamma > 0) ss.gamma = gamma;
    }
    spec.validate();

    ExperimentOutput out = run_experiment(spec, out_dir, seed, jobs);
    print_rows(out.rows);
    std::cout << "wrote " << out.metrics_path << " and " << out.manifest_path << "\n";
    for (const auto& row : out.rows)
        if (!row.error.empty()) return kExitVerificationFailure;
    return kExitOk;
}

int cmd_verify() {
    int failures = 0;
    auto observer = [&](const CheckResult& r) {
        std::printf("[%s] %-36s (%.2fs) %s\n", r.pass ? "PASS" : "FAIL", r.id.c_str(),
                    r.seconds, r.detail.c_str());
        std::fflush(stdout);
        if (!r.pass) ++failures;
    };
    std::vector<CheckResult> results = run_property_checks(observer);
    std::printf("%zu checks, %d failures\n", results.size(), failures);
    return failures == 0 ? kExitOk : kExitVerificationFailure;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Age-of-information broadcast scheduling: offline/online MDP and "
                 "Whittle-index policies, exact oracles, and a discrete-time simulator"};
    app.set_version_flag("--version", version_string());
    app.require_subcommand(1);

    // solve
    auto* solve_cmd = app.add_subcommand("solve", "solve a truncated MDP and persist the policy");
    int users = 2, bound = 10, max_iters = 200000, jobs = 1;
    double tol = 1e-9, gamma = 0.0;
    bool buffered = false;
    std::string probs_csv, out_path = "policy";
    solve_cmd->add_option("--n", users, "number of users")->check(CLI::PositiveNumber);
    solve_cmd->add_option("--m", bound, "truncation bound (must exceed --n)");
    solve_cmd->add_option("--p", probs_csv, "comma-separated arrival probabilities")
        ->required();
    solve_cmd->add_option("--tol", tol, "span tolerance");
    solve_cmd->add_option("--max-iters", max_iters, "sweep budget");
    solve_cmd->add_flag("--buffered", buffered, "solve the buffered variant");
    solve_cmd->add_option("--out", out_path, "artifact base path (writes .csv/.json)");

    // run
    auto* run_cmd = app.add_subcommand("run", "simulate schedulers and emit metrics CSV");
    std::string recipe, config_path, scheduler, policy_artifact, run_probs, out_dir = "out";
    std::int64_t horizon = -1, warmup = -1;
    std::uint64_t seed = 1;
    int run_users = 0, run_bound = 0;
    run_cmd->add_option("--recipe", recipe,
                        "built-in experiment: fig3_switch_map fig5 fig6 fig7 fig8 fig9_buffer");
    run_cmd->add_option("--config", config_path, "experiment JSON file");
    run_cmd->add_option("--scheduler", scheduler, "single scheduler kind for an ad-hoc run");
    run_cmd->add_option("--policy", policy_artifact, "policy artifact base path");
    run_cmd->add_option("--n", run_users, "number of users (ad-hoc)");
    run_cmd->add_option("--p", run_probs, "comma-separated arrival probabilities (ad-hoc)");
    run_cmd->add_option("--horizon", horizon, "slots per simulation");
    run_cmd->add_option("--warmup", warmup, "slots excluded from averages");
    run_cmd->add_option("--seed", seed, "master seed");
    run_cmd->add_option("--m", run_bound, "truncation override");
    run_cmd->add_option("--gamma", gamma, "step-size numerator for mdp_online");
    run_cmd->add_option("--out", out_dir, "output directory");
    run_cmd->add_option("--jobs", jobs, "worker threads for the sweep");

    // verify
    app.add_subcommand("verify", "run the full property suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsageError;
    }

    try {
        if (solve_cmd->parsed())
            return cmd_solve(users, bound, probs_csv, tol, max_iters, buffered, out_path);
        if (run_cmd->parsed())
            return cmd_run(recipe, config_path, scheduler, policy_artifact, run_users,
                           run_probs, horizon, warmup, seed, run_bound, gamma, out_dir,
                           jobs);
        return cmd_verify();
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsageError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitVerificationFailure;
    }
}
