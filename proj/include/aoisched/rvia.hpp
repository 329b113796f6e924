#pragma once

#include <cstdint>
#include <vector>

#include "aoisched/core.hpp"
#include "aoisched/state_space.hpp"

namespace aoisched {

/**
Expected continuation value after taking decision d in state (ages,
arrivals): the post-decision age vector is advanced by truncated_step and
the expectation runs over all 2^N next-arrival vectors with their product
probabilities.
*/
double expected_next_value(const ValueTable& vt, const TruncatedStateSpace& space,
                           const AgeVec& ages, const BitVec& arrivals, Decision d,
                           const ArrivalModel& model);

struct SweepOutput {
    ValueTable values;
    PolicyTable policy;
};

/**
One synchronous relative value iteration sweep:
    V'(s) = min_d [ C(s,d) + E V(s') ] - V(ref)
reading only the previous table. The returned policy is the argmin with
ties broken toward the smallest action (idle preferred).
*/
SweepOutput rvia_sweep(const ValueTable& prev, const TruncatedStateSpace& space,
                       const ArrivalModel& model);

/**
Same fixed point as rvia_sweep, but exploits the switch structure: while
sweeping a slice (x_{-i}, lambda) in increasing x_i, once some smaller age
in the slice has chosen action i this sweep, larger ages take action i
without scanning the argmin. `prev_policy` is the decision table carried
across sweeps.
*/
SweepOutput structural_rvia_sweep(const ValueTable& prev, const PolicyTable& prev_policy,
                                  const TruncatedStateSpace& space,
                                  const ArrivalModel& model);

struct SolveConfig {
    int users = 1;
    int bound = 2;               // truncation m, must exceed users
    std::vector<double> probs;
    double tol = 1e-9;           // span of the Bellman residual
    int max_iters = 200000;
    bool structural = true;
    // Damped outer update V <- (1-damping) V + damping V'. Equivalent to
    // running the sweep on the lazy chain (1-tau) I + tau P, which has the
    // same fixed point, gain and argmin sets but is aperiodic, so the span
    // test also terminates on deterministic (p_i = 1) instances.
    double damping = 0.5;
};

struct SolveResult {
    PolicyTable policy;
    ValueTable values;
    double average_cost = 0.0;
    int iterations = 0;
    bool converged = false;
    double final_span = 0.0;
};

/**
Iterates structural (or plain) RVIA sweeps until the span of the Bellman
residual falls below tol. Reports the gain estimate V(ref) + midpoint of
the residual interval, which brackets the optimal average cost to within
the final span. A run that exhausts max_iters comes back with
converged=false rather than throwing.
*/
SolveResult solve(const SolveConfig& config);

/**
Discounted value iteration V_{n+1} = min_d C + alpha E[V_n] from the zero
table, on the truncated space. Used by the property suite to check
monotonicity and switch structure at finite n.
*/
ValueTable discounted_value_iteration(int users, int bound,
                                      const std::vector<double>& probs, double alpha,
                                      int n_iters);

} // namespace aoisched
