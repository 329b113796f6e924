#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "aoisched/core.hpp"

namespace aoisched {

/// Virtual age increment: grows by one, saturating at the bound.
inline std::int64_t truncate_age(std::int64_t age, int bound) {
    return age < bound ? age : bound;
}

/**
One slot of the truncated dynamics: like age_step but every age saturates
at the bound m, so the result stays inside {1..m}^N.
*/
inline AgeVec truncated_step(const AgeVec& ages, Decision d, const BitVec& arrivals,
                             int bound) {
    const int n = static_cast<int>(ages.size());
    if (d.target < 0 || d.target > n)
        throw std::out_of_range("truncated_step: invalid decision");
    AgeVec next(n);
    for (int i = 0; i < n; ++i) {
        const bool updated = (d.target == i + 1) && arrivals[i];
        next[i] = updated ? 1 : truncate_age(ages[i] + 1, bound);
    }
    return next;
}

/**
Dense enumeration of the truncated state space: all (x, lambda) with
x in {1..m}^N and lambda in {0,1}^N, mapped to ordinals by a mixed-radix
code with ages as the high digits and arrival bits as the low digits.

Two properties of the ordinal order matter elsewhere:
  - within any slice that fixes (x_{-i}, lambda), ordinals increase with
    x_i, for every user i at once (the structural sweep relies on this);
  - the arrival bits vary fastest, so the 2^N next-arrival values of a
    fixed age vector are contiguous.
*/
class TruncatedStateSpace {
public:
    TruncatedStateSpace(int users, int bound) : users_(users), bound_(bound) {
        if (users < 1) throw std::invalid_argument("state space: need users >= 1");
        if (bound <= users)
            throw std::invalid_argument(
                "state space: truncation bound must exceed the user count (m > N)");
        if (users > 16) throw std::invalid_argument("state space: too many users");
        age_count_ = 1;
        for (int i = 0; i < users; ++i) {
            if (age_count_ > (std::size_t(1) << 40) / std::size_t(bound))
                throw std::invalid_argument("state space: too large to enumerate");
            age_count_ *= std::size_t(bound);
        }
        arrival_count_ = std::size_t(1) << users;
        age_stride_.resize(users);
        std::size_t s = 1;
        for (int i = users - 1; i >= 0; --i) {
            age_stride_[i] = s;
            s *= std::size_t(bound);
        }
    }

    int users() const { return users_; }
    int bound() const { return bound_; }
    std::size_t size() const { return age_count_ * arrival_count_; }
    std::size_t age_count() const { return age_count_; }
    std::size_t arrival_count() const { return arrival_count_; }

    std::size_t age_ordinal(const AgeVec& ages) const {
        std::size_t ord = 0;
        for (int i = 0; i < users_; ++i) {
            if (ages[i] < 1 || ages[i] > bound_)
                throw std::out_of_range("state space: age outside {1..m}");
            ord += std::size_t(ages[i] - 1) * age_stride_[i];
        }
        return ord;
    }

    std::size_t arrival_ordinal(const BitVec& arrivals) const {
        std::size_t ord = 0;
        for (int i = 0; i < users_; ++i) ord = (ord << 1) | (arrivals[i] ? 1 : 0);
        return ord;
    }

    std::size_t ordinal(const AgeVec& ages, const BitVec& arrivals) const {
        return age_ordinal(ages) * arrival_count_ + arrival_ordinal(arrivals);
    }

    void decode(std::size_t ord, AgeVec& ages, BitVec& arrivals) const {
        ages.resize(users_);
        arrivals.resize(users_);
        std::size_t arr = ord % arrival_count_;
        std::size_t age = ord / arrival_count_;
        for (int i = users_ - 1; i >= 0; --i) {
            arrivals[i] = arr & 1;
            arr >>= 1;
        }
        for (int i = 0; i < users_; ++i) {
            ages[i] = std::int64_t(age / age_stride_[i]) + 1;
            age %= age_stride_[i];
        }
    }

    /// Ordinal of the reference state (ages 1..N, all arrivals).
    std::size_t reference() const {
        NetworkState ref = reference_state(users_);
        return ordinal(ref.ages, ref.arrivals);
    }

    std::size_t age_stride(int user) const { return age_stride_[user]; }

private:
    int users_;
    int bound_;
    std::size_t age_count_;
    std::size_t arrival_count_;
    std::vector<std::size_t> age_stride_;
};

/// Relative values, one per state ordinal.
struct ValueTable {
    std::vector<double> values;
    std::size_t reference = 0;
};

/// One decision per state ordinal.
struct PolicyTable {
    std::vector<int> actions;
};

} // namespace aoisched
