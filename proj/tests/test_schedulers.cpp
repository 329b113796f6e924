#include <doctest.h>

#include "aoisched/rvia.hpp"
#include "aoisched/schedulers.hpp"

using namespace aoisched;

TEST_CASE("index decisions") {
    CHECK(index_decide({{3, 9}, {1, 1}}, {0.5, 0.5}) == Decision{2});
    CHECK(index_decide({{3, 9}, {0, 0}}, {0.5, 0.5}) == Decision{0});
    // I1 = 8 - 2 + 4/0.9 ~ 10.44, I2 = 2 - 1 + 2/0.1 = 21: the slow user wins
    CHECK(index_decide({{4, 2}, {1, 1}}, {0.9, 0.1}) == Decision{2});
    // equal indices tie toward the smaller id
    CHECK(index_decide({{5, 5}, {1, 1}}, {0.5, 0.5}) == Decision{1});
}

TEST_CASE("baselines") {
    RandomSource rng(3);
    CHECK(baseline_decide(BaselineKind::max_age_arrival, {{3, 9}, {1, 0}}, rng) ==
          Decision{1});
    CHECK(baseline_decide(BaselineKind::max_age_arrival, {{3, 9}, {0, 0}}, rng) ==
          Decision{0});

    // random over both arrivals picks each user about half the time
    int first = 0;
    for (int t = 0; t < 10000; ++t)
        if (baseline_decide(BaselineKind::random_arrival, {{3, 9}, {1, 1}}, rng) ==
            Decision{1})
            ++first;
    CHECK(first > 4500);
    CHECK(first < 5500);

    // round robin skips users without arrivals
    CHECK(baseline_decide(BaselineKind::round_robin, {{1, 1, 1}, {1, 0, 1}}, rng, 1) ==
          Decision{3});
    CHECK(baseline_decide(BaselineKind::round_robin, {{1, 1, 1}, {0, 0, 0}}, rng, 1) ==
          Decision{0});
    CHECK(baseline_decide(BaselineKind::round_robin, {{1, 1, 1}, {1, 1, 1}}, rng, 3) ==
          Decision{1});
}

TEST_CASE("structural scheduler looks up clamped ages") {
    // m=3 table: pick a recognizable action at the fully saturated state
    TruncatedStateSpace space(1, 3);
    PolicyTable table;
    table.actions.assign(space.size(), 0);
    table.actions[space.ordinal({3}, {1})] = 1;
    StructuralMdpScheduler policy(space, table);

    // real age 40 clamps to the bound before lookup
    CHECK(policy.decide({{40}, {1}}, 0) == Decision{1});
    CHECK(policy.decide({{2}, {1}}, 0) == Decision{0});
}

TEST_CASE("structural scheduler alternates users under certain arrivals") {
    SolveConfig cfg;
    cfg.users = 2;
    cfg.bound = 5;
    cfg.probs = {1.0, 1.0};
    SolveResult solved = solve(cfg);
    REQUIRE(solved.converged);
    StructuralMdpScheduler policy(TruncatedStateSpace(2, 5), solved.policy);

    NetworkState s = reference_state(2);
    int previous = 0;
    for (int t = 0; t < 20; ++t) {
        Decision d = policy.decide(s, t);
        if (t > 0) CHECK(d.target != previous);
        previous = d.target;
        s = age_step(s, d, {1, 1});
    }
}

TEST_CASE("mdp online with a zero store is myopic") {
    MdpOnlineScheduler policy(2, 10, StepSchedule{0.01});
    // cost argmin serves the larger arriving virtual age; the internal
    // post-action ages start at the reference (1, 2)
    CHECK(policy.decide({{1, 2}, {1, 1}}, 0) == Decision{2});
    CHECK(policy.decide({{1, 2}, {0, 0}}, 0) == Decision{0});
    CHECK(policy.decide({{1, 2}, {1, 0}}, 0) == Decision{1});
}

TEST_CASE("mdp online full replacement at gamma=1") {
    MdpOnlineScheduler policy(1, 3, StepSchedule{1.0});
    const std::size_t entering =
        TruncatedStateSpace(1, 3).ordinal({1}, {1}); // the initial post state
    NetworkState obs{{1}, {1}};
    const Decision d = policy.decide(obs, 0);
    policy.observe(obs, d, 0);
    // v = C((1,1), d) + 0 - 0 = 1 for the update action
    CHECK(d == Decision{1});
    CHECK(policy.store().values[entering] == doctest::Approx(1.0));
}

TEST_CASE("mdp online learns the single-user optimum") {
    // with p=1, always updating keeps the age at 1
    MdpOnlineScheduler policy(1, 5, StepSchedule{0.01});
    NetworkState s = reference_state(1);
    double total = 0.0;
    const int horizon = 100000;
    for (int t = 0; t < horizon; ++t) {
        Decision d = policy.decide(s, t);
        policy.observe(s, d, t);
        s = age_step(s, d, {1});
        total += double(s.ages[0]);
    }
    CHECK(total / horizon == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("index online saturates to the offline rule under certain arrivals") {
    IndexOnlineScheduler policy(2);
    NetworkState s = reference_state(2);
    for (int t = 0; t < 50; ++t) {
        Decision d = policy.decide(s, t);
        CHECK(d == index_decide(s, {1.0, 1.0}));
        policy.observe(s, d, t);
        s = age_step(s, d, {1, 1});
    }
    CHECK(policy.estimator().estimate(0) == doctest::Approx(1.0));
}

TEST_CASE("index online idles without arrivals") {
    IndexOnlineScheduler policy(2);
    CHECK(policy.decide({{4, 7}, {0, 0}}, 0) == Decision{0});
}

TEST_CASE("frozen estimates reproduce the offline index policy") {
    auto frozen = IndexOnlineScheduler::with_frozen_estimates({0.3, 0.9});
    RandomSource rng(8);
    for (int trial = 0; trial < 1000; ++trial) {
        NetworkState s;
        for (int i = 0; i < 2; ++i) {
            s.ages.push_back(1 + std::int64_t(rng.uniform_int(50)));
            s.arrivals.push_back(rng.bernoulli(0.5) ? 1 : 0);
        }
        CHECK(frozen.decide(s, trial) == index_decide(s, {0.3, 0.9}));
    }
}

TEST_CASE("mdp online resumes exactly from a snapshot") {
    const ArrivalModel model{{0.6, 0.4}};
    const auto drive = [&](MdpOnlineScheduler& policy, RandomSource& rng, NetworkState& s,
                           int slots, std::int64_t t0) {
        for (int k = 0; k < slots; ++k) {
            const std::int64_t t = t0 + k;
            Decision d = policy.decide(s, t);
            policy.observe(s, d, t);
            s = age_step(s, d, sample_arrivals(model, rng));
        }
    };

    MdpOnlineScheduler uninterrupted(2, 6, StepSchedule{0.1});
    RandomSource rng_a(404);
    NetworkState state_a = reference_state(2);
    drive(uninterrupted, rng_a, state_a, 2000, 0);

    MdpOnlineScheduler first_half(2, 6, StepSchedule{0.1});
    RandomSource rng_b(404);
    NetworkState state_b = reference_state(2);
    drive(first_half, rng_b, state_b, 1000, 0);
    MdpOnlineScheduler resumed(TruncatedStateSpace(2, 6), first_half.store(),
                               StepSchedule{0.1});
    drive(resumed, rng_b, state_b, 1000, 1000);

    CHECK(resumed.store().values == uninterrupted.store().values);
    CHECK(resumed.store().post_ages == uninterrupted.store().post_ages);
    CHECK(resumed.store().slot == uninterrupted.store().slot);
}

TEST_CASE("rate estimator follows the running average") {
    RateEstimator est(1);
    CHECK(est.estimate(0) == 1.0); // optimistic before data
    est.record({1});
    est.record({0});
    est.record({1});
    est.record({1});
    CHECK(est.estimate(0) == doctest::Approx(0.75));
}

TEST_CASE("threshold scheduler contract") {
    ThresholdScheduler policy(3);
    CHECK(policy.decide({{2}, {1}}, 0) == Decision{0});
    CHECK(policy.decide({{3}, {1}}, 0) == Decision{1});
    CHECK(policy.decide({{9}, {0}}, 0) == Decision{0});
}
