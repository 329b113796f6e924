#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "aoisched/artifact.hpp"
#include "aoisched/rvia.hpp"

using namespace aoisched;
namespace fs = std::filesystem;

namespace {

std::string scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "aoisched_test_artifacts";
    fs::create_directories(dir);
    return (dir / name).string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("policy artifact round trip") {
    SolveConfig cfg;
    cfg.users = 2;
    cfg.bound = 4;
    cfg.probs = {0.3, 0.8};
    SolveResult result = solve(cfg);
    REQUIRE(result.converged);

    PolicyMeta meta;
    meta.users = 2;
    meta.bound = 4;
    meta.probs = cfg.probs;
    meta.tol = cfg.tol;
    meta.iterations = result.iterations;
    meta.converged = true;
    meta.average_cost = result.average_cost;
    meta.version = "test";

    const std::string base = scratch("roundtrip");
    save_policy(base, result.policy, meta);
    LoadedPolicy loaded = load_policy(base);
    CHECK(loaded.policy.actions == result.policy.actions);
    CHECK(loaded.meta.users == 2);
    CHECK(loaded.meta.bound == 4);
    CHECK(loaded.meta.probs == cfg.probs);
    CHECK(loaded.meta.converged);
    CHECK(loaded.meta.average_cost == result.average_cost);
}

TEST_CASE("saving twice is byte identical") {
    PolicyTable policy;
    policy.actions = {0, 1, 2, 0, 1, 2};
    PolicyMeta meta;
    meta.users = 2;
    meta.bound = 3;
    meta.probs = {0.5, 0.25};
    meta.average_cost = 1.0 / 3.0;
    meta.version = "test";

    const std::string a = scratch("bytes_a");
    const std::string b = scratch("bytes_b");
    save_policy(a, policy, meta);
    save_policy(b, policy, meta);
    CHECK(slurp(a + ".csv") == slurp(b + ".csv"));
    CHECK(slurp(a + ".json") == slurp(b + ".json"));
}

TEST_CASE("loading rejects malformed artifacts") {
    CHECK_THROWS(load_policy(scratch("missing")));

    const std::string base = scratch("badheader");
    {
        std::ofstream csv(base + ".csv");
        csv << "wrong,header\n0,0\n";
        std::ofstream json_file(base + ".json");
        json_file << R"({"kind":"policy","users":1,"bound":2,"probs":[0.5],"tol":1e-9,)"
                  << R"("iterations":1,"converged":true,"average_cost":1.0,"seed":0,)"
                  << R"("version":"test"})";
    }
    CHECK_THROWS_WITH_AS(load_policy(base), doctest::Contains("bad header"),
                         std::runtime_error);
}

TEST_CASE("value store round trip keeps the post-action state") {
    TruncatedStateSpace space(2, 3);
    OnlineValueStore store;
    store.values.resize(space.size());
    for (std::size_t s = 0; s < space.size(); ++s) store.values[s] = 0.125 * double(s);
    store.reference = space.reference();
    store.post_ages = {2, 3};
    store.post_arrivals = {1, 0};
    store.slot = 4711;

    PolicyMeta meta;
    meta.kind = "value_store";
    meta.users = 2;
    meta.bound = 3;
    meta.probs = {0.5, 0.5};
    meta.version = "test";

    const std::string base = scratch("store");
    save_value_store(base, store, meta);
    LoadedValueStore loaded = load_value_store(base, space);
    CHECK(loaded.store.values == store.values);
    CHECK(loaded.store.post_ages == store.post_ages);
    CHECK(loaded.store.post_arrivals == store.post_arrivals);
    CHECK(loaded.store.reference == store.reference);
    CHECK(loaded.store.slot == 4711);
}

TEST_CASE("metrics csv layout") {
    SweepRow narrow;
    narrow.cell.scheduler = "index";
    narrow.cell.model = ArrivalModel{{0.5}};
    narrow.cell.horizon = 10;
    narrow.cell.seed = 1;
    narrow.metrics.avg_total_age = 2.0;
    narrow.metrics.per_user_avg_age = {2.0};
    narrow.metrics.update_counts = {4};

    SweepRow wide;
    wide.cell.scheduler = "max_age_arrival";
    wide.cell.model = ArrivalModel{{0.5, 0.25}};
    wide.cell.horizon = 10;
    wide.cell.seed = 2;
    wide.error = "boom";

    const std::string path = scratch("metrics.csv");
    write_metrics_csv(path, {narrow, wide});
    const std::string text = slurp(path);
    CHECK(text.find("policy,N,p_1,p_2,horizon,seed,avg_total_age,"
                    "avg_age_u1,avg_age_u2,updates_u1,updates_u2,error\n") == 0);
    CHECK(text.find("index,1,0.5,,10,1,2,2,,4,,\n") != std::string::npos);
    CHECK(text.find("max_age_arrival,2,0.5,0.25,10,2,,,,,,boom\n") != std::string::npos);
}

TEST_CASE("format_double is deterministic and round trips") {
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(1.0 / 3.0) == format_double(1.0 / 3.0));
    const double v = 4.348476912909296;
    CHECK(std::stod(format_double(v)) == v);
}
