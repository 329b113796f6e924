#include "aoisched/sim.hpp"

#include <atomic>
#include <limits>
#include <stdexcept>
#include <thread>

namespace aoisched {

namespace {

constexpr std::int64_t kBufferAgeGuard = std::numeric_limits<std::int64_t>::max() - 2;

AgeVec initial_ages_for(const SimConfig& cfg) {
    if (!cfg.initial_ages.empty()) {
        if (cfg.initial_ages.size() != cfg.model.probs.size())
            throw std::invalid_argument("sim: initial ages size mismatch");
        for (auto a : cfg.initial_ages)
            if (a < 1) throw std::invalid_argument("sim: initial age below 1");
        return cfg.initial_ages;
    }
    return reference_state(cfg.model.user_count()).ages;
}

} // namespace

void SimConfig::validate() const {
    model.validate();
    if (horizon < 1) throw std::invalid_argument("sim: horizon must be at least 1");
    if (warmup < 0 || warmup >= horizon)
        throw std::invalid_argument("sim: warmup must lie in [0, horizon)");
}

SimMetrics run(SchedulerPolicy& policy, const SimConfig& cfg) {
    cfg.validate();
    if (cfg.buffered)
        throw std::invalid_argument("sim: buffered config passed to run; use run_buffered");
    const int n = cfg.model.user_count();
    if (policy.user_count() != n)
        throw std::invalid_argument("sim: policy user count does not match config");
    policy.reset();

    RandomSource rng = RandomSource(cfg.seed).derive(0);

    NetworkState state;
    state.ages = initial_ages_for(cfg);
    state.arrivals.assign(n, 1);

    SimMetrics metrics;
    metrics.per_user_avg_age.assign(n, 0.0);
    metrics.update_counts.assign(n, 0);
    if (cfg.record_decisions) metrics.decisions.reserve(std::size_t(cfg.horizon));

    std::vector<double> age_sums(n, 0.0);
    double total_sum = 0.0;

    for (std::int64_t t = 0; t < cfg.horizon; ++t) {
        const Decision d = policy.decide(state, t);
        if (d.target < 0 || d.target > n)
            throw std::runtime_error("sim: invalid decision " + std::to_string(d.target) +
                                     " in slot " + std::to_string(t));
        policy.observe(state, d, t);
        if (cfg.record_decisions) metrics.decisions.push_back(d.target);

        const bool counted = t >= cfg.warmup;
        if (counted && d.target >= 1 && state.arrivals[d.target - 1])
            ++metrics.update_counts[d.target - 1];

        BitVec next_arrivals = sample_arrivals(cfg.model, rng);
        state = age_step(state, d, next_arrivals);

        if (counted) {
            std::int64_t slot_total = 0;
            for (int i = 0; i < n; ++i) {
                age_sums[i] += double(state.ages[i]);
                total_sum += double(state.ages[i]);
                slot_total += state.ages[i];
            }
            if (cfg.record_age_trajectory)
                metrics.total_age_trajectory.push_back(slot_total);
        }
    }

    metrics.slots_counted = cfg.horizon - cfg.warmup;
    metrics.avg_total_age = total_sum / double(metrics.slots_counted);
    for (int i = 0; i < n; ++i)
        metrics.per_user_avg_age[i] = age_sums[i] / double(metrics.slots_counted);
    return metrics;
}

SimMetrics run_buffered(BufferedSchedulerPolicy& policy, const SimConfig& cfg) {
    cfg.validate();
    if (!cfg.buffered)
        throw std::invalid_argument("sim: run_buffered needs cfg.buffered set");
    const int n = cfg.model.user_count();
    if (policy.user_count() != n)
        throw std::invalid_argument("sim: policy user count does not match config");
    policy.reset();

    RandomSource rng = RandomSource(cfg.seed).derive(0);

    BufferedState state;
    state.ages = initial_ages_for(cfg);
    state.buffer_ages.assign(n, 0); // fresh packets, like arrivals all on
    state.has_packet.assign(n, cfg.start_with_empty_buffers ? 0 : 1);

    SimMetrics metrics;
    metrics.per_user_avg_age.assign(n, 0.0);
    metrics.update_counts.assign(n, 0);
    if (cfg.record_decisions) metrics.decisions.reserve(std::size_t(cfg.horizon));

    std::vector<double> age_sums(n, 0.0);
    double total_sum = 0.0;

    for (std::int64_t t = 0; t < cfg.horizon; ++t) {
        const Decision d = policy.decide(state, t);
        if (d.target < 0 || d.target > n)
            throw std::runtime_error("sim: invalid decision " + std::to_string(d.target) +
                                     " in slot " + std::to_string(t));
        policy.observe(state, d, t);
        if (cfg.record_decisions) metrics.decisions.push_back(d.target);

        const bool counted = t >= cfg.warmup;
        const bool serves = d.target >= 1 && state.has_packet[d.target - 1];
        if (counted && serves) ++metrics.update_counts[d.target - 1];

        // Transmission outcome.
        for (int i = 0; i < n; ++i) {
            if (serves && d.target == i + 1)
                state.ages[i] = state.buffer_ages[i] + 1;
            else
                state.ages[i] += 1;
        }
        // Next slot's arrivals refresh the buffers.
        BitVec arrivals = sample_arrivals(cfg.model, rng);
        for (int i = 0; i < n; ++i) {
            if (arrivals[i]) {
                state.buffer_ages[i] = 0;
                state.has_packet[i] = 1;
            } else if (state.has_packet[i] && state.buffer_ages[i] < kBufferAgeGuard) {
                state.buffer_ages[i] += 1;
            }
        }

        if (counted) {
            std::int64_t slot_total = 0;
            for (int i = 0; i < n; ++i) {
                age_sums[i] += double(state.ages[i]);
                total_sum += double(state.ages[i]);
                slot_total += state.ages[i];
            }
            if (cfg.record_age_trajectory)
                metrics.total_age_trajectory.push_back(slot_total);
        }
    }

    metrics.slots_counted = cfg.horizon - cfg.warmup;
    metrics.avg_total_age = total_sum / double(metrics.slots_counted);
    for (int i = 0; i < n; ++i)
        metrics.per_user_avg_age[i] = age_sums[i] / double(metrics.slots_counted);
    return metrics;
}

std::uint64_t cell_seed(std::uint64_t master_seed, std::size_t cell_index) {
    return RandomSource(master_seed).derive(cell_index + 1).seed();
}

std::vector<SweepRow> sweep(const std::vector<SweepCell>& cells, const PolicyFactory& factory,
                            int jobs) {
    if (cells.empty()) throw std::invalid_argument("sweep: empty grid");
    if (jobs < 1) jobs = 1;

    std::vector<SweepRow> rows(cells.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            SweepRow& row = rows[i];
            row.cell = cells[i];
            try {
                auto policy = factory(cells[i]);
                SimConfig cfg;
                cfg.model = cells[i].model;
                cfg.horizon = cells[i].horizon;
                cfg.warmup = cells[i].warmup;
                cfg.seed = cells[i].seed;
                row.metrics = run(*policy, cfg);
            } catch (const std::exception& e) {
                row.error = e.what();
            }
        }
    };

    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return rows;
}

} // namespace aoisched
