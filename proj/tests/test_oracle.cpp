#include <doctest.h>

#include <cmath>

#include "aoisched/oracle.hpp"
#include "aoisched/rvia.hpp"
#include "aoisched/whittle.hpp"

using namespace aoisched;

namespace {

PolicyTable constant_policy(const TruncatedStateSpace& space, int action) {
    PolicyTable p;
    p.actions.assign(space.size(), action);
    return p;
}

/// Policy that serves user 1 exactly when it has an arrival (N=1).
PolicyTable update_on_arrival(const TruncatedStateSpace& space) {
    PolicyTable p;
    p.actions.resize(space.size());
    AgeVec ages;
    BitVec arrivals;
    for (std::size_t s = 0; s < space.size(); ++s) {
        space.decode(s, ages, arrivals);
        p.actions[s] = arrivals[0] ? 1 : 0;
    }
    return p;
}

} // namespace

TEST_CASE("stationary distribution of trivial chains") {
    StochasticMatrix one;
    one.n = 1;
    one.p = {1.0};
    CHECK(stationary_distribution(one)[0] == doctest::Approx(1.0));

    StochasticMatrix flip;
    flip.n = 2;
    flip.p = {0.0, 1.0, 1.0, 0.0};
    auto pi = stationary_distribution(flip);
    CHECK(pi[0] == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(pi[1] == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("stationary distribution rejects bad matrices") {
    StochasticMatrix bad;
    bad.n = 2;
    bad.p = {0.5, 0.4, 0.0, 1.0}; // first row sums to 0.9
    CHECK_THROWS_AS(stationary_distribution(bad), std::invalid_argument);

    StochasticMatrix two_classes;
    two_classes.n = 2;
    two_classes.p = {1.0, 0.0, 0.0, 1.0};
    CHECK_THROWS_WITH_AS(stationary_distribution(two_classes),
                         doctest::Contains("disjoint closed sets"), std::runtime_error);
}

TEST_CASE("threshold chain matches the closed-form steady state") {
    // explicit post-action age chain, threshold 2, p=0.5, truncated at 50
    const std::int64_t k = 50;
    StochasticMatrix P;
    P.n = std::size_t(k);
    P.p.assign(P.n * P.n, 0.0);
    for (std::int64_t i = 1; i <= k; ++i) {
        const std::size_t row = std::size_t(i - 1);
        if (i < 2) {
            P.at(row, std::size_t(i)) = 1.0;
        } else {
            P.at(row, 0) = 0.5;
            if (i < k)
                P.at(row, std::size_t(i)) = 0.5;
            else
                P.at(row, row) += 0.5;
        }
    }
    auto pi = stationary_distribution(P);
    SteadyState closed = threshold_steady_state(2, 0.5, k);
    for (std::int64_t i = 0; i + 1 < k; ++i)
        CHECK(pi[std::size_t(i)] ==
              doctest::Approx(closed.probs[std::size_t(i)]).epsilon(1e-9));
}

TEST_CASE("exact evaluation of always-update at p=1") {
    TruncatedStateSpace space(1, 3);
    ExactEvaluation eval =
        evaluate_policy_exact(update_on_arrival(space), space, ArrivalModel{{1.0}});
    CHECK(eval.average_cost == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("exact evaluation of always-update at p=0.5") {
    // Age marginal: 1 w.p. 1/2, else capped increment. pi = (1/2, 1/4, 1/4),
    // E[cost] = 1/2 * 1 + 1/2 * (E[age] + 1) = 1.875 with E[age] = 1.75.
    TruncatedStateSpace space(1, 3);
    ExactEvaluation eval =
        evaluate_policy_exact(update_on_arrival(space), space, ArrivalModel{{0.5}});
    CHECK(eval.average_cost == doctest::Approx(1.875).epsilon(1e-12));
}

TEST_CASE("exact evaluation of never-update saturates") {
    TruncatedStateSpace space(1, 3);
    ExactEvaluation eval =
        evaluate_policy_exact(constant_policy(space, 0), space, ArrivalModel{{0.5}});
    // all mass at the truncated age m, cost m+1 per slot
    CHECK(eval.average_cost == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("multichain policies fault in evaluate but resolve from a state") {
    // p=1, update only at age 1: the orbit from (1,1) stays at age 1 while
    // ages 2..m drain into the saturated state, so two closed classes exist.
    TruncatedStateSpace space(1, 3);
    ArrivalModel model{{1.0}};
    PolicyTable policy;
    policy.actions.resize(space.size());
    AgeVec ages;
    BitVec arrivals;
    for (std::size_t s = 0; s < space.size(); ++s) {
        space.decode(s, ages, arrivals);
        policy.actions[s] = (ages[0] == 1 && arrivals[0]) ? 1 : 0;
    }
    CHECK_THROWS_WITH_AS(evaluate_policy_exact(policy, space, model),
                         doctest::Contains("not unichain"), std::runtime_error);

    StochasticMatrix P = induced_chain(policy, space, model);
    const double from_ref = gain_from_state(P, policy_costs(policy, space), space.reference());
    CHECK(from_ref == doctest::Approx(1.0).epsilon(1e-12)); // stays on the age-1 cycle
    const double from_saturated =
        gain_from_state(P, policy_costs(policy, space), space.ordinal({2}, {1}));
    CHECK(from_saturated == doctest::Approx(4.0).epsilon(1e-12)); // drains to age m
}

TEST_CASE("brute force optimum N=1 m=2 p=0.5") {
    TruncatedStateSpace space(1, 2);
    auto [policy, cost] = brute_force_optimal(space, ArrivalModel{{0.5}});
    // always-update: pi over ages = (1/2, 1/2), E[cost] = 1/2*1 + 1/2*2.5
    CHECK(cost == doctest::Approx(1.75).epsilon(1e-12));
    for (std::int64_t x = 1; x <= 2; ++x)
        CHECK(policy.actions[space.ordinal({x}, {1})] == 1);
}

TEST_CASE("policy iteration and deterministic route agree with rvia") {
    for (const auto& probs :
         {std::vector<double>{1.0, 1.0}, std::vector<double>{0.3, 1.0}}) {
        TruncatedStateSpace space(2, 3);
        ArrivalModel model{probs};
        auto [policy, cost] = brute_force_optimal(space, model);
        SolveConfig cfg;
        cfg.users = 2;
        cfg.bound = 3;
        cfg.probs = probs;
        SolveResult rvia = solve(cfg);
        REQUIRE(rvia.converged);
        CHECK(std::abs(rvia.average_cost - cost) < 1e-6);
    }
}

TEST_CASE("optimal cost at p=(1,1) is the round-robin value") {
    TruncatedStateSpace space(2, 3);
    auto [policy, cost] = brute_force_optimal(space, ArrivalModel{{1.0, 1.0}});
    CHECK(cost == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("switch checker flags a constructed violation") {
    TruncatedStateSpace space(1, 3);
    PolicyTable policy = constant_policy(space, 0);
    policy.actions[space.ordinal({1}, {1})] = 1; // served at age 1 but not at age 2
    SwitchReport report = check_switch_structure(policy, space);
    CHECK(!report.ok);
    REQUIRE(report.violations.size() >= 1);
    CHECK(report.violations[0].first == space.ordinal({1}, {1}));
    CHECK(report.violations[0].second == space.ordinal({2}, {1}));

    // N=1 passes trivially for upward-closed tables
    CHECK(check_switch_structure(update_on_arrival(space), space).ok);
    CHECK(check_switch_structure(constant_policy(space, 0), space).ok);
}
