#include "aoisched/buffered.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace aoisched {

BufferedStateSpace::BufferedStateSpace(int users, int bound)
    : users_(users), bound_(bound) {
    if (users < 1) throw std::invalid_argument("buffered space: need users >= 1");
    if (bound <= users)
        throw std::invalid_argument(
            "buffered space: truncation bound must exceed the user count (m > N)");
    const std::size_t radix = std::size_t(bound) * std::size_t(bound + 1);
    size_ = 1;
    stride_.resize(users);
    for (int i = users - 1; i >= 0; --i) {
        stride_[i] = size_;
        if (size_ > (std::size_t(1) << 40) / radix)
            throw std::invalid_argument("buffered space: too large to enumerate");
        size_ *= radix;
    }
}

std::size_t BufferedStateSpace::ordinal(const AgeVec& ages, const AgeVec& buffer_ages) const {
    std::size_t ord = 0;
    for (int i = 0; i < users_; ++i) {
        if (ages[i] < 1 || ages[i] > bound_)
            throw std::out_of_range("buffered space: age outside {1..m}");
        if (buffer_ages[i] < 0 || buffer_ages[i] > bound_)
            throw std::out_of_range("buffered space: buffer age outside {0..m}");
        const std::size_t digit =
            std::size_t(ages[i] - 1) * std::size_t(bound_ + 1) + std::size_t(buffer_ages[i]);
        ord += digit * stride_[i];
    }
    return ord;
}

void BufferedStateSpace::decode(std::size_t ord, AgeVec& ages, AgeVec& buffer_ages) const {
    ages.resize(users_);
    buffer_ages.resize(users_);
    for (int i = 0; i < users_; ++i) {
        const std::size_t digit = ord / stride_[i];
        ord %= stride_[i];
        ages[i] = std::int64_t(digit / std::size_t(bound_ + 1)) + 1;
        buffer_ages[i] = std::int64_t(digit % std::size_t(bound_ + 1));
    }
}

std::size_t BufferedStateSpace::reference() const {
    AgeVec ages(users_), buffers(users_, 0);
    for (int i = 0; i < users_; ++i) ages[i] = i + 1;
    return ordinal(ages, buffers);
}

std::int64_t buffered_cost(const AgeVec& ages, const AgeVec& buffer_ages, int action) {
    std::int64_t total = 0;
    for (auto a : ages) total += a + 1;
    if (action >= 1) total -= ages[action - 1] - buffer_ages[action - 1];
    return total;
}

BufferedSolveResult solve_buffered(const BufferedSolveConfig& config) {
    BufferedStateSpace space(config.users, config.bound);
    ArrivalModel model{config.probs};
    model.validate();
    if (model.user_count() != config.users)
        throw std::invalid_argument("solve_buffered: probs size does not match users");
    if (!(config.damping > 0.0 && config.damping <= 1.0))
        throw std::invalid_argument("solve_buffered: damping must be in (0,1]");

    const int n = config.users;
    const int m = config.bound;
    const std::size_t ref = space.reference();
    const std::size_t arrival_count = std::size_t(1) << n;

    std::vector<double> arrival_probs(arrival_count);
    for (std::size_t l = 0; l < arrival_count; ++l) {
        double p = 1.0;
        for (int i = 0; i < n; ++i) {
            const bool bit = (l >> (n - 1 - i)) & 1;
            p *= bit ? model.probs[i] : 1.0 - model.probs[i];
        }
        arrival_probs[l] = p;
    }

    std::vector<double> values(space.size(), 0.0);
    std::vector<double> raw(space.size());
    PolicyTable policy;
    policy.actions.assign(space.size(), 0);

    // Expectations are precomputed per post-decision pair (x', z), where
    // z_i = min(y_i + 1, m) is the buffer age before next slot's arrivals
    // reset it: W[(x', z)] = sum_l P(l) V[(x', y' with y'_i = l_i ? 0 : z_i)].
    std::vector<std::size_t> w_stride(n);
    std::size_t w_size = 1;
    for (int i = n - 1; i >= 0; --i) {
        w_stride[i] = w_size;
        w_size *= std::size_t(m) * std::size_t(m);
    }
    std::vector<double> w(w_size);

    BufferedSolveResult result;
    AgeVec ages, buffers, next_ages(n), next_buffers(n), wx(n), wz(n);
    for (int iter = 1; iter <= config.max_iters; ++iter) {
        const double ref_value = values[ref];

        for (std::size_t word = 0; word < w_size; ++word) {
            std::size_t rem = word;
            for (int i = 0; i < n; ++i) {
                const std::size_t digit = rem / w_stride[i];
                rem %= w_stride[i];
                wx[i] = std::int64_t(digit / std::size_t(m)) + 1;
                wz[i] = std::int64_t(digit % std::size_t(m)) + 1;
            }
            double acc = 0.0;
            for (std::size_t l = 0; l < arrival_count; ++l) {
                if (arrival_probs[l] == 0.0) continue;
                for (int i = 0; i < n; ++i)
                    next_buffers[i] = ((l >> (n - 1 - i)) & 1) ? 0 : wz[i];
                acc += arrival_probs[l] * values[space.ordinal(wx, next_buffers)];
            }
            w[word] = acc;
        }

        for (std::size_t ord = 0; ord < space.size(); ++ord) {
            space.decode(ord, ages, buffers);
            double best = std::numeric_limits<double>::infinity();
            int best_action = 0;
            for (int d = 0; d <= n; ++d) {
                std::size_t word = 0;
                for (int i = 0; i < n; ++i) {
                    const std::int64_t x_next = std::min<std::int64_t>(
                        (d == i + 1) ? buffers[i] + 1 : ages[i] + 1, m);
                    const std::int64_t z = std::min<std::int64_t>(buffers[i] + 1, m);
                    word += (std::size_t(x_next - 1) * std::size_t(m) + std::size_t(z - 1)) *
                            w_stride[i];
                }
                const double q = double(buffered_cost(ages, buffers, d)) + w[word];
                if (q < best) {
                    best = q;
                    best_action = d;
                }
            }
            if (!std::isfinite(best))
                throw std::runtime_error("solve_buffered: non-finite value");
            raw[ord] = best - ref_value;
            policy.actions[ord] = best_action;
        }

        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (std::size_t s = 0; s < space.size(); ++s) {
            const double d = raw[s] - values[s];
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
        result.iterations = iter;
        result.final_span = hi - lo;
        result.average_cost = values[ref] + 0.5 * (lo + hi);
        if (result.final_span < config.tol) {
            result.converged = true;
            result.policy = policy;
            return result;
        }
        const double tau = config.damping;
        for (std::size_t s = 0; s < space.size(); ++s)
            values[s] = (1.0 - tau) * values[s] + tau * raw[s];
    }
    result.converged = false;
    result.policy = policy;
    return result;
}

BufferedMdpScheduler::BufferedMdpScheduler(BufferedStateSpace space, PolicyTable policy)
    : space_(space), policy_(std::move(policy)) {
    if (policy_.actions.size() != space_.size())
        throw std::invalid_argument("BufferedMdpScheduler: table does not match space");
}

Decision BufferedMdpScheduler::decide(const BufferedState& observation, std::int64_t) {
    const int n = space_.users();
    AgeVec x(n), y(n);
    for (int i = 0; i < n; ++i) {
        x[i] = truncate_age(observation.ages[i], space_.bound());
        // An empty buffer looks like the stalest possible packet.
        y[i] = observation.has_packet[i]
                   ? std::min<std::int64_t>(observation.buffer_ages[i], space_.bound())
                   : space_.bound();
    }
    return Decision{policy_.actions[space_.ordinal(x, y)]};
}

} // namespace aoisched
