#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "aoisched/buffered.hpp"
#include "aoisched/core.hpp"
#include "aoisched/schedulers.hpp"

namespace aoisched {

struct SimConfig {
    ArrivalModel model;
    std::int64_t horizon = 1;
    std::uint64_t seed = 0;
    std::int64_t warmup = 0;     // slots excluded from the averages
    bool buffered = false;
    AgeVec initial_ages;         // empty: reference ages (1..N)
    bool record_decisions = false;
    bool record_age_trajectory = false;
    // Buffered runs normally start like the reference state (fresh packet
    // per user); set to start before any arrival has ever landed.
    bool start_with_empty_buffers = false;

    void validate() const;
};

struct SimMetrics {
    double avg_total_age = 0.0;
    std::vector<double> per_user_avg_age;
    std::vector<std::int64_t> update_counts; // successful updates per user
    std::int64_t slots_counted = 0;
    std::vector<int> decisions;                    // when record_decisions
    std::vector<std::int64_t> total_age_trajectory; // when record_age_trajectory

    friend bool operator==(const SimMetrics&, const SimMetrics&) = default;
};

/**
Drives a policy through the true (untruncated) age dynamics for
cfg.horizon slots, accumulating the resulting total age after each slot's
transition. Identical (policy, cfg, seed) triples are bit-reproducible.
*/
SimMetrics run(SchedulerPolicy& policy, const SimConfig& cfg);

/**
Buffered variant: the base station keeps the latest packet per user and
may transmit it any slot; a served user's age becomes the buffered
packet's age plus one. Serving a user whose buffer never held a packet is
a no-op.
*/
SimMetrics run_buffered(BufferedSchedulerPolicy& policy, const SimConfig& cfg);

struct SweepCell {
    std::string scheduler;
    ArrivalModel model;
    std::int64_t horizon = 1;
    std::int64_t warmup = 0;
    std::uint64_t seed = 0; // derived from the master seed by cell index
    std::size_t tag = 0;    // caller bookkeeping, carried through untouched
};

struct SweepRow {
    SweepCell cell;
    SimMetrics metrics;
    std::string error; // non-empty when this cell faulted
};

using PolicyFactory = std::function<std::unique_ptr<SchedulerPolicy>(const SweepCell&)>;

/**
Runs one simulation per cell, distributing cells across `jobs` workers.
Output order matches the input order regardless of scheduling; per-cell
faults are captured in the row instead of aborting the sweep.
*/
std::vector<SweepRow> sweep(const std::vector<SweepCell>& cells, const PolicyFactory& factory,
                            int jobs = 1);

/// Derives the per-cell seed from a master seed, matching what sweep uses.
std::uint64_t cell_seed(std::uint64_t master_seed, std::size_t cell_index);

} // namespace aoisched
