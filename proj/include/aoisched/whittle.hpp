#pragma once

#include <cstdint>
#include <vector>

namespace aoisched {

/**
Average cost of the single-user threshold policy (update iff an arrival is
present and the age is at least the threshold), with arrival probability p
and update cost c:

    [ X^2/2 + (1/p - 1/2) X + 1/p^2 - 1/p + c ] / [ X + (1-p)/p ].

Throws for p = 0, where every policy has infinite cost.
*/
double threshold_average_cost(std::int64_t threshold, double p, double c);

/// Evaluates the same expression at a real-valued threshold. The public
/// API only deals in integer thresholds; this is the convexity probe.
double threshold_average_cost_real(double threshold, double p, double c);

struct SteadyState {
    std::vector<double> probs; // post-action ages 1..K
    double tail_mass;          // exact geometric mass beyond K
};

/**
Stationary distribution of the post-action age chain under a threshold
policy: uniform 1/(X + (1-p)/p) up to the threshold, geometric with ratio
(1-p) beyond it. Truncated at K with the tail mass reported, never
silently renormalized.
*/
SteadyState threshold_steady_state(std::int64_t threshold, double p, std::int64_t truncate_at);

/**
Whittle index of the decoupled sub-problem at state (x, lambda):
0 without an arrival, x^2/2 - x/2 + x/p with one.
*/
double whittle_index(std::int64_t age, bool arrival, double p);

/**
Optimal threshold for update cost c: the unique x with
I(x-1, 1) <= c < I(x, 1), taking I(0, 1) = 0. A cost exactly on the
boundary goes to the larger threshold (ties favor idling).
*/
std::int64_t optimal_threshold(double p, double c);

struct IndexabilityReport {
    bool indexable = false;
    std::vector<std::int64_t> thresholds; // one per grid cost
};

/**
Checks indexability along an ascending nonnegative cost grid: the optimal
threshold must be nondecreasing, i.e. the idle set only grows with c.
*/
IndexabilityReport verify_indexability(double p, const std::vector<double>& c_grid);

} // namespace aoisched
