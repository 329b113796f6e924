#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aoisched/schedulers.hpp"
#include "aoisched/sim.hpp"
#include "aoisched/state_space.hpp"

namespace aoisched {

/**
Manifest accompanying every persisted table: enough to rebuild the state
space and to tell two artifacts apart. Serialized as JSON next to the CSV;
identical inputs give byte-identical files.
*/
struct PolicyMeta {
    std::string kind = "policy"; // policy | buffered_policy | value_store
    int users = 0;
    int bound = 0;
    std::vector<double> probs;
    double tol = 0.0;
    int iterations = 0;
    bool converged = false;
    double average_cost = 0.0;
    std::uint64_t seed = 0;
    std::string version;
};

/// Writes <base>.csv (ordinal,action) and <base>.json.
void save_policy(const std::string& base_path, const PolicyTable& policy,
                 const PolicyMeta& meta);

struct LoadedPolicy {
    PolicyTable policy;
    PolicyMeta meta;
};

/// Loads and validates a policy artifact written by save_policy.
LoadedPolicy load_policy(const std::string& base_path);

/// Online value store snapshot, same layout with real-valued entries.
void save_value_store(const std::string& base_path, const OnlineValueStore& store,
                      const PolicyMeta& meta);

struct LoadedValueStore {
    OnlineValueStore store;
    PolicyMeta meta;
};

LoadedValueStore load_value_store(const std::string& base_path, const TruncatedStateSpace& space);

/**
Metrics CSV with the fixed column order
    policy,N,p_1..p_maxN,horizon,seed,avg_total_age,avg_age_u1..,updates_u1..
padded with empty fields for rows narrower than the widest grid point.
*/
void write_metrics_csv(const std::string& path, const std::vector<SweepRow>& rows);

/// Deterministic shortest-round-trip double formatting shared by writers.
std::string format_double(double v);

} // namespace aoisched
