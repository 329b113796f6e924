#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "aoisched/core.hpp"
#include "aoisched/state_space.hpp"

namespace aoisched {

/// Dense row-stochastic transition matrix.
struct StochasticMatrix {
    std::size_t n = 0;
    std::vector<double> p; // row-major, n*n

    double at(std::size_t row, std::size_t col) const { return p[row * n + col]; }
    double& at(std::size_t row, std::size_t col) { return p[row * n + col]; }

    /// Rows must sum to 1 within 1e-12 with nonnegative entries.
    void validate() const;
};

/**
Stationary distribution of a unichain matrix: direct linear solve of
pi P = pi with the normalization row, cross-checked against lazy power
iteration to 1e-9. Faults with two disjoint closed sets named if the chain
has more than one recurrent class.
*/
std::vector<double> stationary_distribution(const StochasticMatrix& P);

/// Closed (recurrent) classes of the chain, each a sorted list of states.
std::vector<std::vector<std::size_t>> closed_classes(const StochasticMatrix& P);

struct ExactEvaluation {
    double average_cost = 0.0;
    std::vector<double> stationary;
    std::vector<std::uint8_t> recurrent; // membership in the single closed class
};

/// Transition matrix of the truncated chain induced by a stationary policy.
StochasticMatrix induced_chain(const PolicyTable& policy, const TruncatedStateSpace& space,
                               const ArrivalModel& model);

/// Expected immediate cost per state under the policy.
std::vector<double> policy_costs(const PolicyTable& policy, const TruncatedStateSpace& space);

/**
Exact long-run average cost of a deterministic stationary policy on the
truncated MDP, via the stationary distribution of the induced chain.
Faults if the chain is not unichain, which would contradict the model.
*/
ExactEvaluation evaluate_policy_exact(const PolicyTable& policy,
                                      const TruncatedStateSpace& space,
                                      const ArrivalModel& model);

/**
Long-run average cost starting from a given state, valid for any chain:
transient states are resolved through absorption probabilities into the
closed classes. Used by the exhaustive search, where arbitrary policies
may induce several recurrent classes.
*/
double gain_from_state(const StochasticMatrix& P, const std::vector<double>& costs,
                       std::size_t start);

/**
Optimal deterministic stationary policy and its exact average cost.

Small instances ((N+1)^{|S|} within the enumeration budget) are settled by
exhaustive policy enumeration with exact evaluation from the reference
state. Larger ones run Howard policy iteration, whose result is certified
against the average cost optimality equation before being returned; fully
deterministic instances (all p_i = 1) that defeat the unichain evaluation
fall back to a minimum mean cycle computation. Throws if no route can
certify an optimum.
*/
std::pair<PolicyTable, double> brute_force_optimal(const TruncatedStateSpace& space,
                                                   const ArrivalModel& model,
                                                   double enumeration_budget = 1 << 16);

struct SwitchReport {
    bool ok = true;
    // Ordinal pairs (s, s') within one slice where the smaller age is served
    // but the larger is not.
    std::vector<std::pair<std::size_t, std::size_t>> violations;
};

/**
Verifies the switch structure: for every user i and slice (x_{-i}, lambda),
the set of own-ages where the policy serves i must be upward-closed.
*/
SwitchReport check_switch_structure(const PolicyTable& policy,
                                    const TruncatedStateSpace& space);

} // namespace aoisched
