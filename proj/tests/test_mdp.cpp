#include <doctest.h>

#include <cmath>

#include "aoisched/rvia.hpp"
#include "aoisched/state_space.hpp"

using namespace aoisched;

TEST_CASE("state space sizes") {
    CHECK(TruncatedStateSpace(1, 2).size() == 4);
    CHECK(TruncatedStateSpace(2, 3).size() == 36);
    CHECK(TruncatedStateSpace(2, 30).size() == 3600);
}

TEST_CASE("truncation bound must exceed the user count") {
    CHECK_THROWS_WITH_AS(TruncatedStateSpace(2, 2),
                         doctest::Contains("must exceed the user count"),
                         std::invalid_argument);
    CHECK_THROWS_AS(TruncatedStateSpace(3, 3), std::invalid_argument);
}

TEST_CASE("ordinal map is a bijection") {
    TruncatedStateSpace space(2, 4);
    AgeVec ages;
    BitVec arrivals;
    std::vector<bool> seen(space.size(), false);
    for (std::size_t ord = 0; ord < space.size(); ++ord) {
        space.decode(ord, ages, arrivals);
        for (auto a : ages) {
            CHECK(a >= 1);
            CHECK(a <= 4);
        }
        const std::size_t back = space.ordinal(ages, arrivals);
        CHECK(back == ord);
        CHECK(!seen[back]);
        seen[back] = true;
    }
}

TEST_CASE("truncated_step saturates at the bound") {
    CHECK(truncated_step({30, 30}, Decision::idle(), {1, 1}, 30) == AgeVec{30, 30});
    CHECK(truncated_step({29, 5}, Decision{2}, {0, 1}, 30) == AgeVec{30, 1});
    CHECK(truncated_step({1}, Decision{1}, {1}, 5) == AgeVec{1});
}

TEST_CASE("expected_next_value single outcome at p=1") {
    TruncatedStateSpace space(1, 4);
    ArrivalModel model{{1.0}};
    ValueTable vt;
    vt.values.resize(space.size());
    vt.reference = space.reference();
    for (std::size_t s = 0; s < space.size(); ++s) vt.values[s] = double(s) * 1.25;

    // served with arrival: next age 1, next arrival certain
    const double got = expected_next_value(vt, space, {3}, {1}, Decision{1}, model);
    CHECK(got == vt.values[space.ordinal({1}, {1})]);
    // idle: next age 4
    const double idle = expected_next_value(vt, space, {3}, {1}, Decision::idle(), model);
    CHECK(idle == vt.values[space.ordinal({4}, {1})]);
}

TEST_CASE("expected_next_value zero table") {
    TruncatedStateSpace space(1, 3);
    ValueTable vt;
    vt.values.assign(space.size(), 0.0);
    vt.reference = space.reference();
    CHECK(expected_next_value(vt, space, {2}, {1}, Decision{1}, ArrivalModel{{0.5}}) == 0.0);
}

TEST_CASE("expected_next_value four-outcome expectation") {
    TruncatedStateSpace space(2, 3);
    ArrivalModel model{{0.3, 0.7}};
    ValueTable vt;
    vt.values.resize(space.size());
    vt.reference = space.reference();
    for (std::size_t s = 0; s < space.size(); ++s) vt.values[s] = double(s);

    // ages (2,3), arrivals (1,0), serve user 1: post ages (1,3)
    const AgeVec post{1, 3};
    double expected = 0.0;
    for (int l1 = 0; l1 <= 1; ++l1)
        for (int l2 = 0; l2 <= 1; ++l2) {
            const double prob = (l1 ? 0.3 : 0.7) * (l2 ? 0.7 : 0.3);
            expected += prob * vt.values[space.ordinal(post, {std::uint8_t(l1),
                                                             std::uint8_t(l2)})];
        }
    const double got = expected_next_value(vt, space, {2, 3}, {1, 0}, Decision{1}, model);
    CHECK(got == doctest::Approx(expected).epsilon(1e-12));
    CHECK(got == doctest::Approx(9.3).epsilon(1e-12));
}

TEST_CASE("one rvia sweep from the zero table") {
    // N=1, m=2: V'(s) = min_d C(s,d) - V(ref), and V(ref)=0 initially.
    TruncatedStateSpace space(1, 2);
    ArrivalModel model{{0.5}};
    ValueTable zero;
    zero.values.assign(space.size(), 0.0);
    zero.reference = space.reference();

    SweepOutput out = rvia_sweep(zero, space, model);
    CHECK(out.values.values[space.ordinal({1}, {0})] == 2.0);
    CHECK(out.values.values[space.ordinal({1}, {1})] == 1.0);
    CHECK(out.values.values[space.ordinal({2}, {0})] == 3.0);
    CHECK(out.values.values[space.ordinal({2}, {1})] == 1.0);
    // argmin prefers idle on ties, serves on arrivals
    CHECK(out.policy.actions[space.ordinal({1}, {0})] == 0);
    CHECK(out.policy.actions[space.ordinal({1}, {1})] == 1);
    CHECK(out.policy.actions[space.ordinal({2}, {1})] == 1);
    // the reference entry carries min_d C(ref, d)
    CHECK(out.values.values[zero.reference] == 1.0);
}

TEST_CASE("converged table is a fixed point of the sweep") {
    SolveConfig cfg;
    cfg.users = 2;
    cfg.bound = 5;
    cfg.probs = {0.4, 0.8};
    SolveResult result = solve(cfg);
    REQUIRE(result.converged);

    TruncatedStateSpace space(2, 5);
    SweepOutput again = rvia_sweep(result.values, space, ArrivalModel{cfg.probs});
    double max_diff = 0.0;
    for (std::size_t s = 0; s < space.size(); ++s)
        max_diff = std::max(max_diff,
                            std::abs(again.values.values[s] - result.values.values[s]));
    CHECK(max_diff < 1e-6);
}

TEST_CASE("structural and plain sweeps converge to the same policy") {
    SolveConfig cfg;
    cfg.users = 2;
    cfg.bound = 6;
    cfg.probs = {0.9, 0.5};
    cfg.structural = true;
    SolveResult structural = solve(cfg);
    cfg.structural = false;
    SolveResult plain = solve(cfg);
    REQUIRE(structural.converged);
    REQUIRE(plain.converged);
    CHECK(structural.policy.actions == plain.policy.actions);
    CHECK(structural.average_cost == doctest::Approx(plain.average_cost).epsilon(1e-9));
}

TEST_CASE("solve anchors") {
    SolveConfig cfg;
    cfg.users = 1;
    cfg.bound = 3;
    cfg.probs = {1.0};
    CHECK(solve(cfg).average_cost == doctest::Approx(1.0).epsilon(1e-6));

    cfg.users = 1;
    cfg.bound = 5;
    cfg.probs = {1.0};
    CHECK(solve(cfg).average_cost == doctest::Approx(1.0).epsilon(1e-6));

    cfg.users = 2;
    cfg.bound = 5;
    cfg.probs = {1.0, 1.0};
    CHECK(solve(cfg).average_cost == doctest::Approx(3.0).epsilon(1e-6));

    cfg.users = 1;
    cfg.bound = 30;
    cfg.probs = {0.5};
    CHECK(solve(cfg).average_cost == doctest::Approx(2.0).epsilon(0.01));
}

TEST_CASE("single user policy updates exactly on arrivals") {
    SolveConfig cfg;
    cfg.users = 1;
    cfg.bound = 6;
    cfg.probs = {0.5};
    SolveResult result = solve(cfg);
    REQUIRE(result.converged);
    TruncatedStateSpace space(1, 6);
    for (std::int64_t x = 1; x <= 6; ++x) {
        CHECK(result.policy.actions[space.ordinal({x}, {1})] == 1);
        CHECK(result.policy.actions[space.ordinal({x}, {0})] == 0);
    }
}

TEST_CASE("non-convergence is reported, not thrown") {
    SolveConfig cfg;
    cfg.users = 2;
    cfg.bound = 8;
    cfg.probs = {0.5, 0.5};
    cfg.max_iters = 2;
    SolveResult result = solve(cfg);
    CHECK(!result.converged);
    CHECK(result.iterations == 2);
    CHECK(result.final_span > 0.0);
}

TEST_CASE("discounted value iteration") {
    // zero iterations: all zeros; one iteration: min_d C(s,d)
    ValueTable v0 = discounted_value_iteration(1, 3, {0.5}, 0.9, 0);
    for (double v : v0.values) CHECK(v == 0.0);

    ValueTable v1 = discounted_value_iteration(1, 3, {0.5}, 0.9, 1);
    TruncatedStateSpace space(1, 3);
    for (std::int64_t x = 1; x <= 3; ++x) {
        CHECK(v1.values[space.ordinal({x}, {0})] == double(x + 1));
        CHECK(v1.values[space.ordinal({x}, {1})] == 1.0);
    }

    // long-horizon table is nondecreasing in the age
    ValueTable v200 = discounted_value_iteration(1, 4, {0.6}, 0.9, 200);
    TruncatedStateSpace sp4(1, 4);
    for (std::uint8_t lam : {0, 1})
        for (std::int64_t x = 1; x < 4; ++x)
            CHECK(v200.values[sp4.ordinal({x + 1}, {lam})] >=
                  v200.values[sp4.ordinal({x}, {lam})]);

    CHECK_THROWS_AS(discounted_value_iteration(1, 3, {0.5}, 1.0, 1), std::invalid_argument);
}
