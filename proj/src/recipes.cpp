#include "aoisched/recipes.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "aoisched/artifact.hpp"
#include "aoisched/buffered.hpp"
#include "aoisched/rvia.hpp"
#include "aoisched/version.hpp"

namespace aoisched {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string trim_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

/// Auto truncation for online value stores: generous for few users,
/// shrinking so the table stays enumerable as N grows.
int auto_online_bound(int users) {
    if (users <= 2) return 100;
    if (users == 3) return 30;
    return 12;
}

std::string probs_tag(const std::vector<double>& probs) {
    std::string tag;
    for (double p : probs) {
        if (!tag.empty()) tag += "_";
        tag += trim_double(p);
    }
    return tag;
}

} // namespace

void ExperimentSpec::validate() const {
    if (schedulers.empty()) throw std::invalid_argument("experiment: no schedulers");
    if (grid.empty()) throw std::invalid_argument("experiment: empty grid");
    if (horizon < 1) throw std::invalid_argument("experiment: horizon must be at least 1");
    if (warmup < 0 || warmup >= horizon)
        throw std::invalid_argument("experiment: warmup must lie in [0, horizon)");
    if (seeds.empty()) throw std::invalid_argument("experiment: need at least one seed");
    for (const auto& g : grid) ArrivalModel{g.probs}.validate();
    for (const auto& s : schedulers) {
        static const std::vector<std::string> known = {
            "structural_mdp", "index",          "mdp_online", "index_online",
            "max_age_arrival", "random_arrival", "round_robin", "buffered_mdp"};
        bool ok = false;
        for (const auto& k : known) ok = ok || k == s.kind;
        if (!ok) throw std::invalid_argument("experiment: unknown scheduler " + s.kind);
    }
}

ExperimentSpec parse_experiment(const std::string& json_text) {
    const json j = json::parse(json_text);
    ExperimentSpec spec;
    spec.name = j.value("name", "experiment");
    spec.horizon = j.value("horizon", std::int64_t{100000});
    spec.warmup = j.value("warmup", std::int64_t{0});
    if (j.contains("seeds")) spec.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    for (const auto& g : j.at("grid"))
        spec.grid.push_back({g.at("probs").get<std::vector<double>>()});
    for (const auto& s : j.at("schedulers")) {
        SchedulerSpec ss;
        ss.kind = s.at("kind").get<std::string>();
        ss.label = s.value("label", std::string{});
        ss.bound = s.value("m", 0);
        ss.gamma = s.value("gamma", 0.01);
        ss.artifact = s.value("artifact", std::string{});
        spec.schedulers.push_back(std::move(ss));
    }
    spec.validate();
    return spec;
}

std::string experiment_to_json(const ExperimentSpec& spec) {
    json j;
    j["name"] = spec.name;
    j["horizon"] = spec.horizon;
    j["warmup"] = spec.warmup;
    j["seeds"] = spec.seeds;
    j["grid"] = json::array();
    for (const auto& g : spec.grid) j["grid"].push_back({{"probs", g.probs}});
    j["schedulers"] = json::array();
    for (const auto& s : spec.schedulers) {
        json e;
        e["kind"] = s.kind;
        if (!s.label.empty()) e["label"] = s.label;
        if (s.bound > 0) e["m"] = s.bound;
        if (s.kind == "mdp_online") e["gamma"] = s.gamma;
        if (!s.artifact.empty()) e["artifact"] = s.artifact;
        j["schedulers"].push_back(e);
    }
    return j.dump(2) + "\n";
}

std::vector<std::string> recipe_names() {
    return {"fig3_switch_map", "fig5", "fig6", "fig7", "fig8", "fig9_buffer"};
}

ExperimentSpec make_recipe(const std::string& name) {
    ExperimentSpec spec;
    spec.name = name;
    spec.horizon = 100000;

    auto two_user_grid = [](double p1) {
        std::vector<GridPoint> grid;
        for (int i = 1; i <= 9; ++i) grid.push_back({{p1, i / 10.0}});
        return grid;
    };

    if (name == "fig5" || name == "fig6") {
        spec.grid = two_user_grid(name == "fig5" ? 0.6 : 0.8);
        spec.schedulers = {
            {"structural_mdp", "structural_mdp", 30, 0.01, ""},
            {"index", "", 0, 0.01, ""},
            {"mdp_online", "mdp_online_a1", 100, 1.0, ""},
            {"mdp_online", "mdp_online_a0.1", 100, 0.1, ""},
            {"mdp_online", "mdp_online_a0.01", 100, 0.01, ""},
            {"index_online", "", 0, 0.01, ""},
            {"max_age_arrival", "", 0, 0.01, ""},
            {"random_arrival", "", 0, 0.01, ""},
        };
        return spec;
    }
    if (name == "fig7") {
        for (int users : {2, 3, 4})
            for (int i = 1; i <= 9; ++i)
                spec.grid.push_back({std::vector<double>(users, i / 10.0)});
        spec.schedulers = {
            {"index", "", 0, 0.01, ""},
            {"mdp_online", "mdp_online_a0.01", 0, 0.01, ""}, // m chosen per N
            {"index_online", "", 0, 0.01, ""},
        };
        return spec;
    }
    if (name == "fig8") {
        for (int users = 2; users <= 12; ++users)
            spec.grid.push_back({std::vector<double>(users, 1.0 / users)});
        spec.schedulers = {
            {"index", "", 0, 0.01, ""},
            {"index_online", "", 0, 0.01, ""},
        };
        return spec;
    }
    if (name == "fig9_buffer") {
        for (int i = 4; i <= 9; ++i) spec.grid.push_back({{i / 10.0, i / 10.0}});
        spec.schedulers = {
            {"structural_mdp", "no_buffer_mdp", 30, 0.01, ""},
            {"buffered_mdp", "", 30, 0.01, ""},
        };
        return spec;
    }
    if (name == "fig3_switch_map")
        throw std::invalid_argument(
            "fig3_switch_map emits decision maps, not simulations; handled separately");
    throw std::invalid_argument("unknown recipe: " + name);
}

namespace {

struct ArtifactCache {
    std::string dir;
    std::string version;
    std::map<std::string, LoadedPolicy> tables;

    const LoadedPolicy& structural(int users, int bound, const std::vector<double>& probs,
                                   const std::string& explicit_path) {
        const std::string key =
            explicit_path.empty()
                ? dir + "/mdp_n" + std::to_string(users) + "_m" + std::to_string(bound) +
                      "_p" + probs_tag(probs)
                : explicit_path;
        auto it = tables.find(key);
        if (it != tables.end()) return it->second;

        if (!fs::exists(key + ".csv")) {
            if (!explicit_path.empty())
                throw std::runtime_error("missing policy artifact " + key +
                                         "; create it with `aoisched solve`");
            SolveConfig cfg;
            cfg.users = users;
            cfg.bound = bound;
            cfg.probs = probs;
            SolveResult result = solve(cfg);
            if (!result.converged)
                throw std::runtime_error("solve did not converge for artifact " + key);
            PolicyMeta meta;
            meta.kind = "policy";
            meta.users = users;
            meta.bound = bound;
            meta.probs = probs;
            meta.tol = cfg.tol;
            meta.iterations = result.iterations;
            meta.converged = result.converged;
            meta.average_cost = result.average_cost;
            meta.version = version;
            save_policy(key, result.policy, meta);
        }
        return tables.emplace(key, load_policy(key)).first->second;
    }

    const LoadedPolicy& buffered(int users, int bound, const std::vector<double>& probs) {
        const std::string key = dir + "/buffered_mdp_n" + std::to_string(users) + "_m" +
                                std::to_string(bound) + "_p" + probs_tag(probs);
        auto it = tables.find(key);
        if (it != tables.end()) return it->second;

        if (!fs::exists(key + ".csv")) {
            BufferedSolveConfig cfg;
            cfg.users = users;
            cfg.bound = bound;
            cfg.probs = probs;
            BufferedSolveResult result = solve_buffered(cfg);
            if (!result.converged)
                throw std::runtime_error("buffered solve did not converge for " + key);
            PolicyMeta meta;
            meta.kind = "buffered_policy";
            meta.users = users;
            meta.bound = bound;
            meta.probs = probs;
            meta.tol = cfg.tol;
            meta.iterations = result.iterations;
            meta.converged = result.converged;
            meta.average_cost = result.average_cost;
            meta.version = version;
            save_policy(key, result.policy, meta);
        }
        return tables.emplace(key, load_policy(key)).first->second;
    }
};

std::unique_ptr<SchedulerPolicy> make_policy(const SchedulerSpec& ss, const SweepCell& cell,
                                             ArtifactCache& cache) {
    const int users = cell.model.user_count();
    if (ss.kind == "structural_mdp") {
        const int bound = ss.bound > 0 ? ss.bound : 30;
        const LoadedPolicy& table =
            cache.structural(users, bound, cell.model.probs, ss.artifact);
        return std::make_unique<StructuralMdpScheduler>(
            TruncatedStateSpace(table.meta.users, table.meta.bound), table.policy);
    }
    if (ss.kind == "index") return std::make_unique<IndexScheduler>(cell.model.probs);
    if (ss.kind == "mdp_online") {
        const int bound = ss.bound > 0 ? ss.bound : auto_online_bound(users);
        return std::make_unique<MdpOnlineScheduler>(users, bound, StepSchedule{ss.gamma});
    }
    if (ss.kind == "index_online") return std::make_unique<IndexOnlineScheduler>(users);
    if (ss.kind == "max_age_arrival") return std::make_unique<MaxAgeArrivalScheduler>(users);
    if (ss.kind == "random_arrival")
        return std::make_unique<RandomArrivalScheduler>(
            users, RandomSource(cell.seed).derive(1).seed());
    if (ss.kind == "round_robin") return std::make_unique<RoundRobinScheduler>(users);
    throw std::invalid_argument("unknown scheduler kind: " + ss.kind);
}

void write_manifest(const std::string& path, const ExperimentSpec& spec,
                    std::uint64_t master_seed, const std::string& command) {
    json j;
    j["command"] = command;
    j["master_seed"] = master_seed;
    j["version"] = std::string(kVersion) + "+" + kGitHash;
    j["config"] = json::parse(experiment_to_json(spec));
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write manifest: " + path);
    out << j.dump(2) << "\n";
}

} // namespace

ExperimentOutput run_experiment(const ExperimentSpec& spec, const std::string& out_dir,
                                std::uint64_t master_seed, int jobs) {
    spec.validate();
    fs::create_directories(out_dir);
    fs::create_directories(out_dir + "/artifacts");

    ArtifactCache cache;
    cache.dir = out_dir + "/artifacts";
    cache.version = std::string(kVersion) + "+" + kGitHash;

    // Cells are laid out scheduler-major so every (scheduler, grid, seed)
    // triple gets a stable derived seed independent of jobs.
    struct PlannedCell {
        const SchedulerSpec* scheduler;
        SweepCell cell;
        bool buffered;
    };
    std::vector<PlannedCell> planned;
    std::size_t index = 0;
    for (const auto& ss : spec.schedulers) {
        for (const auto& g : spec.grid) {
            for (const auto seed : spec.seeds) {
                SweepCell cell;
                cell.scheduler = ss.effective_label();
                cell.model = ArrivalModel{g.probs};
                cell.horizon = spec.horizon;
                cell.warmup = spec.warmup;
                cell.seed = cell_seed(master_seed ^ seed, index++);
                planned.push_back({&ss, cell, ss.kind == "buffered_mdp"});
            }
        }
    }

    // Solve tables up front (sequential; the cache is not thread safe).
    for (const auto& pc : planned) {
        if (pc.scheduler->kind == "structural_mdp")
            cache.structural(pc.cell.model.user_count(),
                             pc.scheduler->bound > 0 ? pc.scheduler->bound : 30,
                             pc.cell.model.probs, pc.scheduler->artifact);
        if (pc.buffered)
            cache.buffered(pc.cell.model.user_count(),
                           pc.scheduler->bound > 0 ? pc.scheduler->bound : 30,
                           pc.cell.model.probs);
    }

    // Unbuffered cells go through the generic sweep; buffered ones run here.
    std::vector<SweepCell> sweep_cells;
    std::vector<const SchedulerSpec*> sweep_specs;
    ExperimentOutput out;
    out.rows.resize(planned.size());
    std::vector<std::size_t> sweep_slots;
    for (std::size_t i = 0; i < planned.size(); ++i) {
        if (planned[i].buffered) {
            SweepRow& row = out.rows[i];
            row.cell = planned[i].cell;
            try {
                const int bound =
                    planned[i].scheduler->bound > 0 ? planned[i].scheduler->bound : 30;
                const LoadedPolicy& table = cache.buffered(
                    planned[i].cell.model.user_count(), bound, planned[i].cell.model.probs);
                BufferedMdpScheduler policy(
                    BufferedStateSpace(table.meta.users, table.meta.bound), table.policy);
                SimConfig cfg;
                cfg.model = planned[i].cell.model;
                cfg.horizon = planned[i].cell.horizon;
                cfg.warmup = planned[i].cell.warmup;
                cfg.seed = planned[i].cell.seed;
                cfg.buffered = true;
                row.metrics = run_buffered(policy, cfg);
            } catch (const std::exception& e) {
                row.error = e.what();
            }
        } else {
            sweep_cells.push_back(planned[i].cell);
            sweep_specs.push_back(planned[i].scheduler);
            sweep_slots.push_back(i);
        }
    }

    if (!sweep_cells.empty()) {
        for (std::size_t k = 0; k < sweep_cells.size(); ++k) sweep_cells[k].tag = k;
        auto factory = [&](const SweepCell& cell) -> std::unique_ptr<SchedulerPolicy> {
            return make_policy(*sweep_specs[cell.tag], cell, cache);
        };
        std::vector<SweepRow> rows = sweep(sweep_cells, factory, jobs);
        for (std::size_t k = 0; k < rows.size(); ++k) out.rows[sweep_slots[k]] = rows[k];
    }

    out.metrics_path = out_dir + "/" + spec.name + "_metrics.csv";
    out.manifest_path = out_dir + "/" + spec.name + "_manifest.json";
    write_metrics_csv(out.metrics_path, out.rows);
    write_manifest(out.manifest_path, spec, master_seed, "run");
    return out;
}

ExperimentOutput run_switch_map_recipe(const std::string& out_dir, int bound) {
    fs::create_directories(out_dir);
    ExperimentOutput out;

    std::ostringstream csv;
    csv << "p1,p2,x1,x2,action\n";
    for (const auto& probs : {std::vector<double>{0.9, 0.9}, std::vector<double>{0.9, 0.5}}) {
        SolveConfig cfg;
        cfg.users = 2;
        cfg.bound = bound;
        cfg.probs = probs;
        SolveResult result = solve(cfg);
        if (!result.converged)
            throw std::runtime_error("switch map: solve did not converge");
        TruncatedStateSpace space(2, bound);
        BitVec both{1, 1};
        for (std::int64_t x1 = 1; x1 <= bound; ++x1)
            for (std::int64_t x2 = 1; x2 <= bound; ++x2) {
                AgeVec ages{x1, x2};
                csv << format_double(probs[0]) << ',' << format_double(probs[1]) << ','
                    << x1 << ',' << x2 << ','
                    << result.policy.actions[space.ordinal(ages, both)] << '\n';
            }
    }
    out.metrics_path = out_dir + "/fig3_switch_map.csv";
    std::ofstream file(out.metrics_path, std::ios::binary);
    if (!file) throw std::runtime_error("cannot write " + out.metrics_path);
    file << csv.str();

    ExperimentSpec spec;
    spec.name = "fig3_switch_map";
    spec.schedulers = {{"structural_mdp", "", bound, 0.01, ""}};
    spec.grid = {{std::vector<double>{0.9, 0.9}}, {std::vector<double>{0.9, 0.5}}};
    out.manifest_path = out_dir + "/fig3_switch_map_manifest.json";
    write_manifest(out.manifest_path, spec, 0, "run");
    return out;
}

} // namespace aoisched
