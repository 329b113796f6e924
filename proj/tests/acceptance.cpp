#include <cstdio>

#include "aoisched/checks.hpp"

// Runs every acceptance criterion and prints one pass/fail line each.
int main() {
    int failures = 0;
    auto observer = [&](const aoisched::CheckResult& r) {
        std::printf("[%s] %-28s (%6.2fs) %s\n", r.pass ? "PASS" : "FAIL", r.id.c_str(),
                    r.seconds, r.detail.c_str());
        std::fflush(stdout);
        if (!r.pass) ++failures;
    };
    const auto results = aoisched::run_acceptance_checks(observer);
    std::printf("%zu criteria, %d failures\n", results.size(), failures);
    return failures == 0 ? 0 : 1;
}
