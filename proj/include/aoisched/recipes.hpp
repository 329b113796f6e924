#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aoisched/sim.hpp"

namespace aoisched {

/// One scheduler entry of an experiment: kind plus its parameters.
struct SchedulerSpec {
    std::string kind;           // structural_mdp | index | mdp_online | index_online
                                // | max_age_arrival | random_arrival | round_robin
                                // | buffered_mdp
    std::string label;          // CSV name; defaults to kind
    int bound = 0;              // truncation m for table/online kinds, 0 = auto
    double gamma = 0.01;        // step-size numerator for mdp_online
    std::string artifact;       // optional pre-solved policy artifact base path

    std::string effective_label() const { return label.empty() ? kind : label; }
};

struct GridPoint {
    std::vector<double> probs;
};

struct ExperimentSpec {
    std::string name;
    std::vector<SchedulerSpec> schedulers;
    std::vector<GridPoint> grid;
    std::int64_t horizon = 100000;
    std::int64_t warmup = 0;
    std::vector<std::uint64_t> seeds = {1};

    void validate() const;
};

/// Parses a JSON experiment file (see README for the schema).
ExperimentSpec parse_experiment(const std::string& json_text);
std::string experiment_to_json(const ExperimentSpec& spec);

/// Built-in reproductions keyed by figure:
/// fig3_switch_map, fig5, fig6, fig7, fig8, fig9_buffer.
ExperimentSpec make_recipe(const std::string& name);
std::vector<std::string> recipe_names();

struct ExperimentOutput {
    std::vector<SweepRow> rows;
    std::string metrics_path;
    std::string manifest_path;
};

/**
Orchestrates an experiment: solves any tables the schedulers need (cached
as artifacts under <out_dir>/artifacts), simulates every (scheduler, grid
point, seed) cell, and writes the metrics CSV plus a manifest echoing the
full configuration, master seed and code version.
*/
ExperimentOutput run_experiment(const ExperimentSpec& spec, const std::string& out_dir,
                                std::uint64_t master_seed, int jobs);

/**
The switch-map recipe is not a simulation: it solves the two Fig.3
configurations (m=10, p=(0.9,0.9) and (0.9,0.5)) and writes the decision
map over (x1, x2) at lambda=(1,1) as CSV.
*/
ExperimentOutput run_switch_map_recipe(const std::string& out_dir, int bound = 10);

} // namespace aoisched
