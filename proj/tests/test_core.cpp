#include <doctest.h>

#include "aoisched/core.hpp"

using namespace aoisched;

TEST_CASE("sample_arrivals degenerate probabilities") {
    RandomSource rng(7);
    for (int t = 0; t < 100; ++t) {
        BitVec sure = sample_arrivals(ArrivalModel{{1.0, 1.0}}, rng);
        CHECK(sure == BitVec{1, 1});
        BitVec never = sample_arrivals(ArrivalModel{{0.0}}, rng);
        CHECK(never == BitVec{0});
    }
}

TEST_CASE("sample_arrivals empirical mean at p=0.5") {
    RandomSource rng(12345);
    ArrivalModel model{{0.5}};
    std::int64_t ones = 0;
    const int draws = 1000000;
    for (int t = 0; t < draws; ++t) ones += sample_arrivals(model, rng)[0];
    const double mean = double(ones) / draws;
    CHECK(mean >= 0.497);
    CHECK(mean <= 0.503);
}

TEST_CASE("age_step resets only the served arriving user") {
    NetworkState s{{3, 5}, {1, 0}};
    CHECK(age_step(s, Decision{1}, {0, 0}).ages == AgeVec{1, 6});

    NetworkState t{{3, 5}, {0, 1}};
    CHECK(age_step(t, Decision{1}, {0, 0}).ages == AgeVec{4, 6}); // no arrival, no reset

    NetworkState u{{2}, {1}};
    CHECK(age_step(u, Decision::idle(), {1}).ages == AgeVec{3});
}

TEST_CASE("age_step installs the next arrivals and rejects bad targets") {
    NetworkState s{{3, 5}, {1, 1}};
    NetworkState next = age_step(s, Decision{2}, {0, 1});
    CHECK(next.arrivals == BitVec{0, 1});
    CHECK_THROWS_AS(age_step(s, Decision{3}, {0, 1}), std::out_of_range);
    CHECK_THROWS_AS(age_step(s, Decision{-1}, {0, 1}), std::out_of_range);
}

TEST_CASE("immediate_cost formula") {
    CHECK(immediate_cost(NetworkState{{3, 5}, {1, 1}}, Decision{2}) == 5);
    CHECK(immediate_cost(NetworkState{{3, 5}, {1, 1}}, Decision::idle()) == 10);
    CHECK(immediate_cost(NetworkState{{3, 5}, {0, 0}}, Decision::idle()) == 10);
    CHECK(immediate_cost(NetworkState{{1}, {1}}, Decision{1}) == 1);
}

TEST_CASE("cost equals the total age after the step") {
    RandomSource rng(99);
    for (int trial = 0; trial < 500; ++trial) {
        const int n = 1 + int(rng.uniform_int(4));
        NetworkState s;
        for (int i = 0; i < n; ++i) {
            s.ages.push_back(1 + std::int64_t(rng.uniform_int(30)));
            s.arrivals.push_back(rng.bernoulli(0.5) ? 1 : 0);
        }
        const int d = int(rng.uniform_int(std::uint64_t(n) + 1));
        NetworkState next = age_step(s, Decision{d}, BitVec(n, 0));
        std::int64_t total = 0;
        for (auto a : next.ages) total += a;
        CHECK(total == immediate_cost(s, Decision{d}));
        CHECK(immediate_cost(s, Decision{d}) >= n);
    }
}

TEST_CASE("model validation") {
    CHECK_THROWS_AS(ArrivalModel{{}}.validate(), std::invalid_argument);
    CHECK_THROWS_AS(ArrivalModel{{1.2}}.validate(), std::invalid_argument);
    CHECK_THROWS_AS(ArrivalModel{{-0.1}}.validate(), std::invalid_argument);
    CHECK_NOTHROW(ArrivalModel{{0.0, 1.0, 0.5}}.validate());
    CHECK_THROWS_AS((NetworkState{{0}, {1}}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((NetworkState{{1, 2}, {1}}).validate(), std::invalid_argument);
}

TEST_CASE("reference state is ages 1..N with all arrivals") {
    NetworkState ref = reference_state(3);
    CHECK(ref.ages == AgeVec{1, 2, 3});
    CHECK(ref.arrivals == BitVec{1, 1, 1});
}

TEST_CASE("random source is reproducible and splittable") {
    RandomSource a(42), b(42);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());

    RandomSource parent(42);
    RandomSource c1 = parent.derive(0);
    RandomSource c2 = parent.derive(1);
    CHECK(c1.next_u64() != c2.next_u64());
    // derive depends on the seed, not on consumed state
    parent.next_u64();
    CHECK(parent.derive(0).next_u64() == RandomSource(42).derive(0).next_u64());
}

TEST_CASE("uniform_int stays in range") {
    RandomSource rng(5);
    for (int i = 0; i < 10000; ++i) CHECK(rng.uniform_int(7) < 7);
}
