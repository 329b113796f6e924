#include "aoisched/rvia.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace aoisched {

namespace {

/// Product probability of every arrival vector, indexed by arrival ordinal.
std::vector<double> arrival_probabilities(const TruncatedStateSpace& space,
                                          const ArrivalModel& model) {
    const int n = space.users();
    std::vector<double> probs(space.arrival_count());
    for (std::size_t a = 0; a < space.arrival_count(); ++a) {
        double p = 1.0;
        for (int i = 0; i < n; ++i) {
            const bool bit = (a >> (n - 1 - i)) & 1;
            p *= bit ? model.probs[i] : 1.0 - model.probs[i];
        }
        probs[a] = p;
    }
    return probs;
}

/**
Expected value over next arrivals for every post-decision age vector:
    W[a] = sum_{lambda'} P(lambda') V[a * 2^N + lambda'].
Each state/action evaluation then reduces to one lookup.
*/
std::vector<double> post_age_expectation(const std::vector<double>& values,
                                         const TruncatedStateSpace& space,
                                         const std::vector<double>& arrival_probs) {
    std::vector<double> w(space.age_count());
    const std::size_t ac = space.arrival_count();
    for (std::size_t a = 0; a < space.age_count(); ++a) {
        double acc = 0.0;
        const std::size_t base = a * ac;
        for (std::size_t l = 0; l < ac; ++l) acc += arrival_probs[l] * values[base + l];
        w[a] = acc;
    }
    return w;
}

std::int64_t state_cost(const AgeVec& ages, const BitVec& arrivals, int action) {
    std::int64_t total = 0;
    for (auto a : ages) total += a + 1;
    if (action >= 1 && arrivals[action - 1]) total -= ages[action - 1];
    return total;
}

struct SweepContext {
    const TruncatedStateSpace& space;
    std::vector<double> arrival_probs;
    std::vector<double> w; // post-age expectations of the previous table

    SweepContext(const ValueTable& prev, const TruncatedStateSpace& sp,
                 const ArrivalModel& model)
        : space(sp), arrival_probs(arrival_probabilities(sp, model)) {
        if (prev.values.size() != sp.size())
            throw std::invalid_argument("rvia: value table does not match the space");
        model.validate();
        if (model.user_count() != sp.users())
            throw std::invalid_argument("rvia: model does not match the space");
        w = post_age_expectation(prev.values, sp, arrival_probs);
    }

    /// Post-decision age ordinal for (ages, arrivals, action).
    std::size_t post_age_ordinal(const AgeVec& ages, const BitVec& arrivals,
                                 int action) const {
        std::size_t ord = 0;
        const int n = space.users();
        for (int i = 0; i < n; ++i) {
            const bool updated = (action == i + 1) && arrivals[i];
            const std::int64_t next = updated ? 1 : truncate_age(ages[i] + 1, space.bound());
            ord += std::size_t(next - 1) * space.age_stride(i);
        }
        return ord;
    }

    double action_value(const AgeVec& ages, const BitVec& arrivals, int action) const {
        return double(state_cost(ages, arrivals, action)) +
               w[post_age_ordinal(ages, arrivals, action)];
    }
};

void check_finite(double v) {
    if (!std::isfinite(v)) throw std::runtime_error("rvia: non-finite value encountered");
}

} // namespace

double expected_next_value(const ValueTable& vt, const TruncatedStateSpace& space,
                           const AgeVec& ages, const BitVec& arrivals, Decision d,
                           const ArrivalModel& model) {
    SweepContext ctx(vt, space, model);
    return ctx.w[ctx.post_age_ordinal(ages, arrivals, d.target)];
}

SweepOutput rvia_sweep(const ValueTable& prev, const TruncatedStateSpace& space,
                       const ArrivalModel& model) {
    SweepContext ctx(prev, space, model);
    const double ref_value = prev.values[prev.reference];

    SweepOutput out;
    out.values.values.resize(space.size());
    out.values.reference = prev.reference;
    out.policy.actions.resize(space.size());

    AgeVec ages;
    BitVec arrivals;
    for (std::size_t ord = 0; ord < space.size(); ++ord) {
        space.decode(ord, ages, arrivals);
        double best = std::numeric_limits<double>::infinity();
        int best_action = 0;
        for (int d = 0; d <= space.users(); ++d) {
            const double q = ctx.action_value(ages, arrivals, d);
            if (q < best) {
                best = q;
                best_action = d;
            }
        }
        check_finite(best);
        out.values.values[ord] = best - ref_value;
        out.policy.actions[ord] = best_action;
    }
    return out;
}

SweepOutput structural_rvia_sweep(const ValueTable& prev, const PolicyTable& prev_policy,
                                  const TruncatedStateSpace& space,
                                  const ArrivalModel& model) {
    if (prev_policy.actions.size() != space.size())
        throw std::invalid_argument("rvia: policy table does not match the space");
    SweepContext ctx(prev, space, model);
    const double ref_value = prev.values[prev.reference];
    const int n = space.users();

    SweepOutput out;
    out.values.values.resize(space.size());
    out.values.reference = prev.reference;
    out.policy.actions = prev_policy.actions;

    // chosen[(i-1) * size + slice] marks that some smaller x_i in the slice
    // (x_{-i}, lambda) picked action i during this sweep. Slices are keyed
    // by the ordinal with the x_i digit zeroed.
    std::vector<std::uint8_t> chosen(std::size_t(n) * space.size(), 0);

    AgeVec ages;
    BitVec arrivals;
    for (std::size_t ord = 0; ord < space.size(); ++ord) {
        space.decode(ord, ages, arrivals);

        int action = -1;
        for (int i = 1; i <= n; ++i) {
            const std::size_t slice =
                ord - std::size_t(ages[i - 1] - 1) * space.age_stride(i - 1) *
                          space.arrival_count();
            if (chosen[std::size_t(i - 1) * space.size() + slice]) {
                action = i;
                break;
            }
        }
        if (action < 0) {
            double best = std::numeric_limits<double>::infinity();
            action = 0;
            for (int d = 0; d <= n; ++d) {
                const double q = ctx.action_value(ages, arrivals, d);
                if (q < best) {
                    best = q;
                    action = d;
                }
            }
        }

        const double value = ctx.action_value(ages, arrivals, action) - ref_value;
        check_finite(value);
        out.values.values[ord] = value;
        out.policy.actions[ord] = action;

        if (action >= 1) {
            const std::size_t slice =
                ord - std::size_t(ages[action - 1] - 1) * space.age_stride(action - 1) *
                          space.arrival_count();
            chosen[std::size_t(action - 1) * space.size() + slice] = 1;
        }
    }
    return out;
}

SolveResult solve(const SolveConfig& config) {
    TruncatedStateSpace space(config.users, config.bound);
    ArrivalModel model{config.probs};
    model.validate();
    if (model.user_count() != config.users)
        throw std::invalid_argument("solve: probs size does not match users");
    if (!(config.damping > 0.0 && config.damping <= 1.0))
        throw std::invalid_argument("solve: damping must be in (0,1]");

    ValueTable current;
    current.values.assign(space.size(), 0.0);
    current.reference = space.reference();
    PolicyTable policy;
    policy.actions.assign(space.size(), 0);

    SolveResult result;
    for (int iter = 1; iter <= config.max_iters; ++iter) {
        SweepOutput raw = config.structural
                              ? structural_rvia_sweep(current, policy, space, model)
                              : rvia_sweep(current, space, model);

        // Bellman residual T V - V = (raw - V) + V(ref); its span bounds the
        // distance of the midpoint estimate from the optimal gain.
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (std::size_t s = 0; s < space.size(); ++s) {
            const double d = raw.values.values[s] - current.values[s];
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
        const double span = hi - lo;
        result.iterations = iter;
        result.final_span = span;
        result.average_cost = current.values[current.reference] + 0.5 * (lo + hi);
        policy = raw.policy;

        if (span < config.tol) {
            result.converged = true;
            result.policy = std::move(raw.policy);
            result.values = std::move(raw.values);
            return result;
        }

        const double tau = config.damping;
        for (std::size_t s = 0; s < space.size(); ++s)
            current.values[s] = (1.0 - tau) * current.values[s] + tau * raw.values.values[s];
    }

    result.converged = false;
    result.policy = std::move(policy);
    result.values = std::move(current);
    return result;
}

ValueTable discounted_value_iteration(int users, int bound,
                                      const std::vector<double>& probs, double alpha,
                                      int n_iters) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("discounted_value_iteration: alpha outside (0,1)");
    TruncatedStateSpace space(users, bound);
    ArrivalModel model{probs};
    model.validate();

    ValueTable vt;
    vt.values.assign(space.size(), 0.0);
    vt.reference = space.reference();

    AgeVec ages;
    BitVec arrivals;
    for (int n = 0; n < n_iters; ++n) {
        SweepContext ctx(vt, space, model);
        std::vector<double> next(space.size());
        for (std::size_t ord = 0; ord < space.size(); ++ord) {
            space.decode(ord, ages, arrivals);
            double best = std::numeric_limits<double>::infinity();
            for (int d = 0; d <= users; ++d) {
                const double q = double(state_cost(ages, arrivals, d)) +
                                 alpha * ctx.w[ctx.post_age_ordinal(ages, arrivals, d)];
                best = std::min(best, q);
            }
            check_finite(best);
            next[ord] = best;
        }
        vt.values = std::move(next);
    }
    return vt;
}

} // namespace aoisched
