#include <doctest.h>

#include "aoisched/buffered.hpp"
#include "aoisched/rvia.hpp"
#include "aoisched/schedulers.hpp"
#include "aoisched/sim.hpp"

using namespace aoisched;

namespace {

class FixedDecisionPolicy : public SchedulerPolicy {
public:
    FixedDecisionPolicy(int users, int target) : users_(users), target_(target) {}
    Decision decide(const NetworkState&, std::int64_t) override { return Decision{target_}; }
    int user_count() const override { return users_; }
    std::string name() const override { return "fixed"; }

private:
    int users_;
    int target_;
};

} // namespace

TEST_CASE("always idle gives the arithmetic series average") {
    AlwaysIdleScheduler policy(1);
    SimConfig cfg;
    cfg.model = ArrivalModel{{0.5}};
    cfg.horizon = 101;
    cfg.seed = 1;
    SimMetrics metrics = run(policy, cfg);
    // X(0)=1 and never updated: the counted ages are 2..T+1
    CHECK(metrics.avg_total_age == doctest::Approx((101.0 + 3.0) / 2.0));
}

TEST_CASE("max age arrival under certain arrivals settles at 3") {
    MaxAgeArrivalScheduler policy(2);
    SimConfig cfg;
    cfg.model = ArrivalModel{{1.0, 1.0}};
    cfg.horizon = 100000;
    cfg.seed = 2;
    CHECK(run(policy, cfg).avg_total_age == doctest::Approx(3.0).epsilon(0.01));
}

TEST_CASE("index scheduler hits the single-user analytic average") {
    IndexScheduler policy({0.5});
    SimConfig cfg;
    cfg.model = ArrivalModel{{0.5}};
    cfg.horizon = 1000000;
    cfg.seed = 3;
    CHECK(run(policy, cfg).avg_total_age == doctest::Approx(2.0).epsilon(0.01));
}

TEST_CASE("identical runs produce identical metrics") {
    IndexScheduler a({0.4, 0.6}), b({0.4, 0.6});
    SimConfig cfg;
    cfg.model = ArrivalModel{{0.4, 0.6}};
    cfg.horizon = 30000;
    cfg.seed = 77;
    cfg.record_decisions = true;
    CHECK(run(a, cfg) == run(b, cfg));
}

TEST_CASE("config validation") {
    IndexScheduler policy({0.5});
    SimConfig cfg;
    cfg.model = ArrivalModel{{0.5}};
    cfg.horizon = 0;
    CHECK_THROWS_AS(run(policy, cfg), std::invalid_argument);
    cfg.horizon = 10;
    cfg.warmup = 10;
    CHECK_THROWS_AS(run(policy, cfg), std::invalid_argument);
    cfg.warmup = 0;
    cfg.initial_ages = {0};
    CHECK_THROWS_AS(run(policy, cfg), std::invalid_argument);

    IndexScheduler wrong({0.5, 0.5});
    SimConfig two;
    two.model = ArrivalModel{{0.5}};
    two.horizon = 10;
    CHECK_THROWS_AS(run(wrong, two), std::invalid_argument);
}

TEST_CASE("invalid decisions fault with the slot index") {
    FixedDecisionPolicy rogue(2, 7);
    SimConfig cfg;
    cfg.model = ArrivalModel{{0.5, 0.5}};
    cfg.horizon = 10;
    CHECK_THROWS_WITH_AS(run(rogue, cfg), doctest::Contains("slot 0"), std::runtime_error);
}

TEST_CASE("warmup excludes the transient") {
    AlwaysIdleScheduler policy(1);
    SimConfig cfg;
    cfg.model = ArrivalModel{{1.0}};
    cfg.horizon = 100;
    cfg.warmup = 50;
    SimMetrics metrics = run(policy, cfg);
    CHECK(metrics.slots_counted == 50);
    // counted ages are 52..101
    CHECK(metrics.avg_total_age == doctest::Approx((52.0 + 101.0) / 2.0));
}

TEST_CASE("update counts track successful updates only") {
    ThresholdScheduler policy(1);
    SimConfig cfg;
    cfg.model = ArrivalModel{{1.0}};
    cfg.horizon = 1000;
    cfg.seed = 5;
    SimMetrics metrics = run(policy, cfg);
    CHECK(metrics.update_counts[0] == 1000);

    AlwaysIdleScheduler idle(1);
    CHECK(run(idle, cfg).update_counts[0] == 0);
}

TEST_CASE("sweep runs every cell and keeps order") {
    std::vector<SweepCell> cells;
    for (int i = 1; i <= 9; ++i) {
        SweepCell cell;
        cell.scheduler = "index";
        cell.model = ArrivalModel{{0.6, i / 10.0}};
        cell.horizon = 5000;
        cell.seed = cell_seed(9, std::size_t(i));
        cells.push_back(cell);
    }
    auto factory = [](const SweepCell& cell) -> std::unique_ptr<SchedulerPolicy> {
        return std::make_unique<IndexScheduler>(cell.model.probs);
    };
    std::vector<SweepRow> rows = sweep(cells, factory, 4);
    REQUIRE(rows.size() == 9);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].error.empty());
        CHECK(rows[i].cell.model.probs[1] == doctest::Approx((i + 1) / 10.0));
    }

    // a single cell reproduces a direct run
    IndexScheduler direct(cells[0].model.probs);
    SimConfig cfg;
    cfg.model = cells[0].model;
    cfg.horizon = cells[0].horizon;
    cfg.seed = cells[0].seed;
    CHECK(rows[0].metrics.avg_total_age == run(direct, cfg).avg_total_age);
}

TEST_CASE("sweep captures per-cell faults without aborting") {
    std::vector<SweepCell> cells(3);
    for (std::size_t i = 0; i < 3; ++i) {
        cells[i].scheduler = "probe";
        cells[i].model = ArrivalModel{{0.5, 0.5}};
        cells[i].horizon = 100;
        cells[i].seed = i;
        cells[i].tag = i;
    }
    auto factory = [](const SweepCell& cell) -> std::unique_ptr<SchedulerPolicy> {
        if (cell.tag == 1) return std::make_unique<FixedDecisionPolicy>(2, 9);
        return std::make_unique<IndexScheduler>(cell.model.probs);
    };
    std::vector<SweepRow> rows = sweep(cells, factory, 2);
    CHECK(rows[0].error.empty());
    CHECK(!rows[1].error.empty());
    CHECK(rows[2].error.empty());
    CHECK_THROWS_AS(sweep({}, factory, 1), std::invalid_argument);
}

TEST_CASE("buffered run matches the plain run when packets always arrive") {
    const std::vector<double> probs{1.0, 1.0};
    SolveConfig cfg;
    cfg.users = 2;
    cfg.bound = 5;
    cfg.probs = probs;
    SolveResult plain = solve(cfg);
    REQUIRE(plain.converged);
    StructuralMdpScheduler plain_policy(TruncatedStateSpace(2, 5), plain.policy);

    BufferedSolveConfig bcfg;
    bcfg.users = 2;
    bcfg.bound = 5;
    bcfg.probs = probs;
    BufferedSolveResult buffered = solve_buffered(bcfg);
    REQUIRE(buffered.converged);
    BufferedMdpScheduler buffered_policy(BufferedStateSpace(2, 5), buffered.policy);

    SimConfig sim_cfg;
    sim_cfg.model = ArrivalModel{probs};
    sim_cfg.horizon = 20000;
    sim_cfg.seed = 6;
    const double plain_avg = run(plain_policy, sim_cfg).avg_total_age;
    sim_cfg.buffered = true;
    const double buffered_avg = run_buffered(buffered_policy, sim_cfg).avg_total_age;
    CHECK(plain_avg == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(buffered_avg == doctest::Approx(plain_avg).epsilon(1e-9));
}

TEST_CASE("serving an empty buffer is a no-op") {
    BufferedSolveConfig bcfg;
    bcfg.users = 1;
    bcfg.bound = 3;
    bcfg.probs = {0.0};
    // No arrivals ever: with empty starting buffers every serve is a no-op,
    // so the ages grow exactly like always-idle.
    BufferedStateSpace space(1, 3);
    PolicyTable always_serve;
    always_serve.actions.assign(space.size(), 1);
    BufferedMdpScheduler policy(space, always_serve);

    SimConfig cfg;
    cfg.model = ArrivalModel{{0.0}};
    cfg.horizon = 101;
    cfg.seed = 7;
    cfg.buffered = true;
    cfg.start_with_empty_buffers = true;
    SimMetrics metrics = run_buffered(policy, cfg);
    CHECK(metrics.update_counts[0] == 0);
    CHECK(metrics.avg_total_age == doctest::Approx((101.0 + 3.0) / 2.0));
}

TEST_CASE("run entry points enforce the buffered flag") {
    IndexScheduler policy({0.5});
    SimConfig cfg;
    cfg.model = ArrivalModel{{0.5}};
    cfg.horizon = 10;
    cfg.buffered = true;
    CHECK_THROWS_AS(run(policy, cfg), std::invalid_argument);

    BufferedStateSpace space(1, 3);
    PolicyTable table;
    table.actions.assign(space.size(), 0);
    BufferedMdpScheduler buffered_policy(space, table);
    cfg.buffered = false;
    CHECK_THROWS_AS(run_buffered(buffered_policy, cfg), std::invalid_argument);
}

TEST_CASE("age trajectory sampling") {
    AlwaysIdleScheduler policy(2);
    SimConfig cfg;
    cfg.model = ArrivalModel{{0.5, 0.5}};
    cfg.horizon = 20;
    cfg.warmup = 5;
    cfg.record_age_trajectory = true;
    SimMetrics metrics = run(policy, cfg);
    REQUIRE(metrics.total_age_trajectory.size() == 15);
    double total = 0.0;
    for (auto v : metrics.total_age_trajectory) total += double(v);
    CHECK(total / 15.0 == doctest::Approx(metrics.avg_total_age));
}

TEST_CASE("buffered cost formula") {
    CHECK(buffered_cost({3, 5}, {1, 2}, 0) == 10);
    CHECK(buffered_cost({3, 5}, {1, 2}, 1) == 10 - (3 - 1));
    CHECK(buffered_cost({3, 5}, {1, 2}, 2) == 10 - (5 - 2));
    // stale buffer applied literally: serving gives nonpositive gain
    CHECK(buffered_cost({2, 5}, {4, 0}, 1) == 9 - (2 - 4));
}
