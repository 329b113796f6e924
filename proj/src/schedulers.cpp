#include "aoisched/schedulers.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "aoisched/whittle.hpp"

namespace aoisched {

Decision index_decide(const NetworkState& observation, const std::vector<double>& probs) {
    if (observation.ages.size() != probs.size())
        throw std::invalid_argument("index_decide: probs size mismatch");
    int best = 0;
    double best_index = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double idx =
            whittle_index(observation.ages[i], observation.arrivals[i] != 0, probs[i]);
        if (idx > best_index) {
            best_index = idx;
            best = int(i) + 1;
        }
    }
    return Decision{best};
}

Decision baseline_decide(BaselineKind kind, const NetworkState& observation,
                         RandomSource& rng, int last_served) {
    const int n = observation.user_count();
    switch (kind) {
    case BaselineKind::max_age_arrival: {
        int best = 0;
        std::int64_t best_age = 0;
        for (int i = 0; i < n; ++i)
            if (observation.arrivals[i] && observation.ages[i] > best_age) {
                best_age = observation.ages[i];
                best = i + 1;
            }
        return Decision{best};
    }
    case BaselineKind::random_arrival: {
        std::vector<int> arriving;
        for (int i = 0; i < n; ++i)
            if (observation.arrivals[i]) arriving.push_back(i + 1);
        if (arriving.empty()) return Decision::idle();
        return Decision{arriving[rng.uniform_int(arriving.size())]};
    }
    case BaselineKind::round_robin: {
        for (int step = 1; step <= n; ++step) {
            const int user = (last_served + step - 1) % n + 1;
            if (observation.arrivals[user - 1]) return Decision{user};
        }
        return Decision::idle();
    }
    }
    return Decision::idle();
}

StructuralMdpScheduler::StructuralMdpScheduler(TruncatedStateSpace space, PolicyTable policy)
    : space_(space), policy_(std::move(policy)) {
    if (policy_.actions.size() != space_.size())
        throw std::invalid_argument("StructuralMdpScheduler: table does not match space");
}

Decision StructuralMdpScheduler::decide(const NetworkState& observation, std::int64_t) {
    const std::size_t ord =
        space_.ordinal(virtual_ages(observation.ages, space_.bound()), observation.arrivals);
    return Decision{policy_.actions[ord]};
}

MdpOnlineScheduler::MdpOnlineScheduler(int users, int bound, StepSchedule gamma)
    : space_(users, bound), gamma_(gamma) {
    store_.values.assign(space_.size(), 0.0);
    store_.reference = space_.reference();
    NetworkState ref = reference_state(users);
    store_.post_ages = ref.ages;
    store_.post_arrivals = ref.arrivals;
    initial_ = store_;
}

MdpOnlineScheduler::MdpOnlineScheduler(TruncatedStateSpace space, OnlineValueStore store,
                                       StepSchedule gamma)
    : space_(space), store_(std::move(store)), gamma_(gamma) {
    if (store_.values.size() != space_.size())
        throw std::invalid_argument("MdpOnlineScheduler: store does not match space");
    initial_ = store_;
}

void MdpOnlineScheduler::reset() { store_ = initial_; }

double MdpOnlineScheduler::action_value(const NetworkState& observation, int action,
                                        std::size_t& post_ord) const {
    // Cost and lookahead are evaluated at the virtual pre-action state
    // (tracked post-action ages, observed arrivals).
    NetworkState virt{store_.post_ages, observation.arrivals};
    const double cost = double(immediate_cost(virt, Decision{action}));
    const AgeVec next =
        truncated_step(store_.post_ages, Decision{action}, observation.arrivals,
                       space_.bound());
    post_ord = space_.ordinal(next, observation.arrivals);
    return cost + store_.values[post_ord];
}

Decision MdpOnlineScheduler::decide(const NetworkState& observation, std::int64_t) {
    if (observation.user_count() != space_.users())
        throw std::invalid_argument("MdpOnlineScheduler: observation size mismatch");
    int best = 0;
    double best_q = std::numeric_limits<double>::infinity();
    for (int d = 0; d <= space_.users(); ++d) {
        std::size_t post_ord = 0;
        const double q = action_value(observation, d, post_ord);
        if (q < best_q) {
            best_q = q;
            best = d;
        }
    }
    return Decision{best};
}

void MdpOnlineScheduler::observe(const NetworkState& observation, Decision applied,
                                 std::int64_t) {
    std::size_t next_post_ord = 0;
    const double v =
        action_value(observation, applied.target, next_post_ord) -
        store_.values[store_.reference];
    if (!std::isfinite(v))
        throw std::runtime_error("MdpOnlineScheduler: non-finite value update");

    const std::size_t entering = space_.ordinal(store_.post_ages, store_.post_arrivals);
    const double g = gamma_(store_.slot);
    ++store_.slot;
    store_.values[entering] = (1.0 - g) * store_.values[entering] + g * v;

    store_.post_ages = truncated_step(store_.post_ages, applied, observation.arrivals,
                                      space_.bound());
    store_.post_arrivals = observation.arrivals;
}

Decision IndexOnlineScheduler::decide(const NetworkState& observation, std::int64_t slot) {
    (void)slot;
    const int n = user_count();
    if (observation.user_count() != n)
        throw std::invalid_argument("IndexOnlineScheduler: observation size mismatch");
    int best = 0;
    double best_index = 0.0;
    for (int i = 0; i < n; ++i) {
        if (!observation.arrivals[i]) continue; // index 0 without an arrival
        // This slot's arrival joins the running average before deciding, so
        // the estimate is positive whenever it is consulted.
        const double p = frozen_.empty()
                             ? double(estimator_.counts[i] + 1) / double(estimator_.slots + 1)
                             : frozen_[i];
        const double idx = whittle_index(observation.ages[i], true, p);
        if (idx > best_index) {
            best_index = idx;
            best = i + 1;
        }
    }
    return Decision{best};
}

void IndexOnlineScheduler::observe(const NetworkState& observation, Decision,
                                   std::int64_t) {
    estimator_.record(observation.arrivals);
}

} // namespace aoisched
