#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "aoisched/rng.hpp"

namespace aoisched {

using AgeVec = std::vector<std::int64_t>;
using BitVec = std::vector<std::uint8_t>;

/// Per-user Bernoulli arrival probabilities at the base station.
struct ArrivalModel {
    std::vector<double> probs;

    int user_count() const { return static_cast<int>(probs.size()); }

    void validate() const {
        if (probs.empty())
            throw std::invalid_argument("ArrivalModel: need at least one user");
        for (double p : probs)
            if (!(p >= 0.0 && p <= 1.0))
                throw std::invalid_argument("ArrivalModel: probability outside [0,1]");
    }
};

/// Ages of information at the users plus this slot's arrival indicators.
struct NetworkState {
    AgeVec ages;
    BitVec arrivals;

    int user_count() const { return static_cast<int>(ages.size()); }

    void validate() const {
        if (ages.empty() || ages.size() != arrivals.size())
            throw std::invalid_argument("NetworkState: size mismatch");
        for (auto a : ages)
            if (a < 1) throw std::invalid_argument("NetworkState: age below 1");
    }
};

/// Scheduling decision: user index in {1..N}, or 0 to stay idle.
struct Decision {
    int target = 0;

    bool is_idle() const { return target == 0; }
    static Decision idle() { return Decision{0}; }
    static Decision update(int user) { return Decision{user}; }

    friend bool operator==(Decision a, Decision b) { return a.target == b.target; }
};

/// Reference state: ages (1, 2, .., N), all arrivals present.
inline NetworkState reference_state(int users) {
    NetworkState s;
    s.ages.resize(users);
    std::iota(s.ages.begin(), s.ages.end(), std::int64_t{1});
    s.arrivals.assign(users, 1);
    return s;
}

/// Independent Bernoulli(p_i) indicator per user; advances the stream.
inline BitVec sample_arrivals(const ArrivalModel& model, RandomSource& rng) {
    BitVec out(model.probs.size());
    for (std::size_t i = 0; i < model.probs.size(); ++i)
        out[i] = rng.bernoulli(model.probs[i]) ? 1 : 0;
    return out;
}

/**
One slot of the age dynamics: the scheduled user's age resets to 1 when it
had an arrival this slot, every other age grows by one. `next_arrivals`
becomes the arrival vector of the returned state.
*/
inline NetworkState age_step(const NetworkState& state, Decision d,
                             const BitVec& next_arrivals) {
    const int n = state.user_count();
    if (d.target < 0 || d.target > n)
        throw std::out_of_range("age_step: decision targets user " +
                                std::to_string(d.target) + " of " + std::to_string(n));
    if (static_cast<int>(next_arrivals.size()) != n)
        throw std::invalid_argument("age_step: arrival vector size mismatch");
    NetworkState next;
    next.ages.resize(n);
    for (int i = 0; i < n; ++i) {
        const bool updated = (d.target == i + 1) && state.arrivals[i];
        next.ages[i] = updated ? 1 : state.ages[i] + 1;
    }
    next.arrivals = next_arrivals;
    return next;
}

/// Total age in the next slot: sum_i (X_i + 1) - X_d * Lambda_d.
inline std::int64_t immediate_cost(const NetworkState& state, Decision d) {
    const int n = state.user_count();
    if (d.target < 0 || d.target > n)
        throw std::out_of_range("immediate_cost: invalid decision");
    std::int64_t total = 0;
    for (auto a : state.ages) total += a + 1;
    if (d.target >= 1 && state.arrivals[d.target - 1])
        total -= state.ages[d.target - 1];
    return total;
}

} // namespace aoisched
