#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aoisched/core.hpp"
#include "aoisched/state_space.hpp"

namespace aoisched {

/**
Observation in the buffered network: user ages plus the initial age of the
packet each buffer holds (0 right after an arrival). has_packet stays
false until the first arrival for that user ever lands.
*/
struct BufferedState {
    AgeVec ages;
    AgeVec buffer_ages;
    BitVec has_packet;

    int user_count() const { return static_cast<int>(ages.size()); }
};

/**
Truncated state space of the buffered MDP: per user (x, y) with age
x in {1..m} and buffer age y in {0..m}, mixed-radix coded. There is no
empty-buffer state; the simulator maps an empty buffer to y = m, the least
attractive value to serve.
*/
class BufferedStateSpace {
public:
    BufferedStateSpace(int users, int bound);

    int users() const { return users_; }
    int bound() const { return bound_; }
    std::size_t size() const { return size_; }

    std::size_t ordinal(const AgeVec& ages, const AgeVec& buffer_ages) const;
    void decode(std::size_t ord, AgeVec& ages, AgeVec& buffer_ages) const;

    /// Reference: ages (1..N), fresh packets everywhere (y = 0).
    std::size_t reference() const;

private:
    int users_;
    int bound_;
    std::size_t size_;
    std::vector<std::size_t> stride_;
};

/// Total age in the next slot when serving from buffers:
/// sum_i (x_i + 1) - (x_d - y_d), applied literally even if y_d >= x_d.
std::int64_t buffered_cost(const AgeVec& ages, const AgeVec& buffer_ages, int action);

struct BufferedSolveConfig {
    int users = 1;
    int bound = 2;
    std::vector<double> probs;
    double tol = 1e-9;
    int max_iters = 200000;
    double damping = 0.5;
};

struct BufferedSolveResult {
    PolicyTable policy; // indexed by BufferedStateSpace ordinals
    double average_cost = 0.0;
    int iterations = 0;
    bool converged = false;
    double final_span = 0.0;
};

/**
Relative value iteration on the buffered MDP: serving user d hands it the
buffered packet (next age y_d + 1), everyone else ages by one; buffer ages
reset to 0 on arrival, otherwise grow, all truncated at m.
*/
BufferedSolveResult solve_buffered(const BufferedSolveConfig& config);

/// Decision interface for the buffered simulator.
class BufferedSchedulerPolicy {
public:
    virtual ~BufferedSchedulerPolicy() = default;
    virtual Decision decide(const BufferedState& observation, std::int64_t slot) = 0;
    virtual void observe(const BufferedState&, Decision, std::int64_t) {}
    virtual void reset() {}
    virtual int user_count() const = 0;
    virtual std::string name() const = 0;
};

/// Table policy from solve_buffered, deciding on clamped (x, y).
class BufferedMdpScheduler : public BufferedSchedulerPolicy {
public:
    BufferedMdpScheduler(BufferedStateSpace space, PolicyTable policy);

    Decision decide(const BufferedState& observation, std::int64_t slot) override;
    int user_count() const override { return space_.users(); }
    std::string name() const override { return "buffered_mdp"; }

private:
    BufferedStateSpace space_;
    PolicyTable policy_;
};

} // namespace aoisched
