#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "aoisched/core.hpp"
#include "aoisched/rng.hpp"
#include "aoisched/state_space.hpp"

namespace aoisched {

/**
Uniform decision interface driven by the simulator. Each slot the engine
calls decide() with the observed state, then observe() with the decision
it applied; offline policies ignore observe(), learners mutate there.
decide() itself only reads internal state (the random baseline's stream
draw being the one sanctioned exception).
*/
class SchedulerPolicy {
public:
    virtual ~SchedulerPolicy() = default;
    virtual Decision decide(const NetworkState& observation, std::int64_t slot) = 0;
    virtual void observe(const NetworkState& observation, Decision applied,
                         std::int64_t slot) {
        (void)observation;
        (void)applied;
        (void)slot;
    }
    /// Restores the state the policy had at construction.
    virtual void reset() {}
    virtual int user_count() const = 0;
    virtual std::string name() const = 0;
};

/// Ages clamped to the truncation bound; the table-based policies decide
/// on these instead of the real ages.
inline AgeVec virtual_ages(const AgeVec& real, int bound) {
    AgeVec out(real.size());
    for (std::size_t i = 0; i < real.size(); ++i) out[i] = truncate_age(real[i], bound);
    return out;
}

/// Serve the user with the highest Whittle index; idle when every index is
/// zero (no arrivals). Ties go to the smallest user id.
Decision index_decide(const NetworkState& observation, const std::vector<double>& probs);

enum class BaselineKind { max_age_arrival, random_arrival, round_robin };

/**
Comparison baselines. max_age_arrival serves the oldest arriving user,
random_arrival picks uniformly among arriving users, round_robin cycles
through users skipping those without arrivals (rotation state is supplied
by the caller as last_served). All idle when nothing arrived.
*/
Decision baseline_decide(BaselineKind kind, const NetworkState& observation,
                         RandomSource& rng, int last_served = 0);

/// Offline table policy from a solved truncated MDP; decides on virtual
/// (clamped) ages and the current arrivals.
class StructuralMdpScheduler : public SchedulerPolicy {
public:
    StructuralMdpScheduler(TruncatedStateSpace space, PolicyTable policy);

    Decision decide(const NetworkState& observation, std::int64_t slot) override;
    int user_count() const override { return space_.users(); }
    std::string name() const override { return "structural_mdp"; }

    const TruncatedStateSpace& space() const { return space_; }

private:
    TruncatedStateSpace space_;
    PolicyTable policy_;
};

/// Offline Whittle index policy; needs the true arrival probabilities.
class IndexScheduler : public SchedulerPolicy {
public:
    explicit IndexScheduler(std::vector<double> probs) : probs_(std::move(probs)) {}

    Decision decide(const NetworkState& observation, std::int64_t slot) override {
        (void)slot;
        return index_decide(observation, probs_);
    }
    int user_count() const override { return int(probs_.size()); }
    std::string name() const override { return "index"; }

private:
    std::vector<double> probs_;
};

/// Step-size schedule gamma(t) = a / t with gamma(0) = a.
struct StepSchedule {
    double a = 0.01;
    double operator()(std::int64_t t) const { return t <= 0 ? a : a / double(t); }
};

/// Relative values over post-action states plus the learning bookkeeping,
/// exportable so long runs can resume (the slot counter keeps the step
/// schedule decaying across a resume).
struct OnlineValueStore {
    std::vector<double> values;
    std::size_t reference = 0;
    AgeVec post_ages;
    BitVec post_arrivals;
    std::int64_t slot = 0;
};

/**
MDP-based online learner: model-free stochastic relative value iteration
over virtual post-action states. decide() evaluates the one-step lookahead
with the current arrivals; observe() applies the step-size update to the
entering post-action state and advances it.
*/
class MdpOnlineScheduler : public SchedulerPolicy {
public:
    MdpOnlineScheduler(int users, int bound, StepSchedule gamma = {});

    /// Resume from an exported store.
    MdpOnlineScheduler(TruncatedStateSpace space, OnlineValueStore store,
                       StepSchedule gamma);

    Decision decide(const NetworkState& observation, std::int64_t slot) override;
    void observe(const NetworkState& observation, Decision applied,
                 std::int64_t slot) override;
    void reset() override;

    int user_count() const override { return space_.users(); }
    std::string name() const override { return "mdp_online"; }

    const OnlineValueStore& store() const { return store_; }
    const TruncatedStateSpace& space() const { return space_; }

private:
    double action_value(const NetworkState& observation, int action,
                        std::size_t& post_ord) const;

    TruncatedStateSpace space_;
    OnlineValueStore store_;
    OnlineValueStore initial_;
    StepSchedule gamma_;
};

/// Running-average arrival rate per user: p(t) = sum_{tau<=t} Lambda(tau) / (t+1).
struct RateEstimator {
    std::vector<std::int64_t> counts;
    std::int64_t slots = 0;

    explicit RateEstimator(int users) : counts(users, 0) {}

    /// Estimate before any observation is optimistically 1.
    double estimate(int user) const {
        return slots == 0 ? 1.0 : double(counts[user]) / double(slots);
    }
    void record(const BitVec& arrivals) {
        for (std::size_t i = 0; i < arrivals.size(); ++i) counts[i] += arrivals[i] ? 1 : 0;
        ++slots;
    }
};

/**
Index-based online scheduler: the Whittle index evaluated with running
average arrival rates, where this slot's arrivals enter the estimate
before the decision.
*/
class IndexOnlineScheduler : public SchedulerPolicy {
public:
    explicit IndexOnlineScheduler(int users) : estimator_(users), initial_(users) {}

    /// Resume with pre-loaded estimator state.
    explicit IndexOnlineScheduler(RateEstimator estimator)
        : estimator_(estimator), initial_(std::move(estimator)) {}

    /// Pins the estimates instead of learning them; the decisions then
    /// coincide with the offline index policy at those probabilities.
    static IndexOnlineScheduler with_frozen_estimates(std::vector<double> probs) {
        IndexOnlineScheduler s(int(probs.size()));
        s.frozen_ = std::move(probs);
        return s;
    }

    Decision decide(const NetworkState& observation, std::int64_t slot) override;
    void observe(const NetworkState& observation, Decision applied,
                 std::int64_t slot) override;
    void reset() override { estimator_ = initial_; }

    int user_count() const override { return int(estimator_.counts.size()); }
    std::string name() const override { return "index_online"; }

    const RateEstimator& estimator() const { return estimator_; }

private:
    RateEstimator estimator_;
    RateEstimator initial_;
    std::vector<double> frozen_;
};

class MaxAgeArrivalScheduler : public SchedulerPolicy {
public:
    explicit MaxAgeArrivalScheduler(int users) : users_(users), rng_(0) {}
    Decision decide(const NetworkState& observation, std::int64_t slot) override {
        (void)slot;
        return baseline_decide(BaselineKind::max_age_arrival, observation, rng_);
    }
    int user_count() const override { return users_; }
    std::string name() const override { return "max_age_arrival"; }

private:
    int users_;
    RandomSource rng_;
};

class RandomArrivalScheduler : public SchedulerPolicy {
public:
    RandomArrivalScheduler(int users, std::uint64_t seed)
        : users_(users), seed_(seed), rng_(seed) {}
    Decision decide(const NetworkState& observation, std::int64_t slot) override {
        (void)slot;
        return baseline_decide(BaselineKind::random_arrival, observation, rng_);
    }
    void reset() override { rng_ = RandomSource(seed_); }
    int user_count() const override { return users_; }
    std::string name() const override { return "random_arrival"; }

private:
    int users_;
    std::uint64_t seed_;
    RandomSource rng_;
};

class RoundRobinScheduler : public SchedulerPolicy {
public:
    explicit RoundRobinScheduler(int users) : users_(users), rng_(0) {}
    Decision decide(const NetworkState& observation, std::int64_t slot) override {
        (void)slot;
        return baseline_decide(BaselineKind::round_robin, observation, rng_, last_);
    }
    void observe(const NetworkState&, Decision applied, std::int64_t) override {
        if (!applied.is_idle()) last_ = applied.target;
    }
    void reset() override { last_ = 0; }
    int user_count() const override { return users_; }
    std::string name() const override { return "round_robin"; }

private:
    int users_;
    int last_ = 0;
    RandomSource rng_;
};

class AlwaysIdleScheduler : public SchedulerPolicy {
public:
    explicit AlwaysIdleScheduler(int users) : users_(users) {}
    Decision decide(const NetworkState&, std::int64_t) override { return Decision::idle(); }
    int user_count() const override { return users_; }
    std::string name() const override { return "always_idle"; }

private:
    int users_;
};

/// Single-user threshold policy: update iff an arrival is present and the
/// age is at least the threshold. Drives the decoupled sub-problem checks.
class ThresholdScheduler : public SchedulerPolicy {
public:
    explicit ThresholdScheduler(std::int64_t threshold) : threshold_(threshold) {}
    Decision decide(const NetworkState& observation, std::int64_t) override {
        return (observation.arrivals[0] && observation.ages[0] >= threshold_)
                   ? Decision::update(1)
                   : Decision::idle();
    }
    int user_count() const override { return 1; }
    std::string name() const override { return "threshold"; }

private:
    std::int64_t threshold_;
};

} // namespace aoisched
