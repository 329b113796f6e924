#pragma once

#include <functional>
#include <string>
#include <vector>

namespace aoisched {

struct CheckResult {
    std::string id;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

using CheckObserver = std::function<void(const CheckResult&)>;

/**
Module property suite: every cross-module invariant, runnable standalone
through `aoisched verify`. The observer, when given, is called as each
check finishes so progress can be streamed.
*/
std::vector<CheckResult> run_property_checks(const CheckObserver& observer = {});

/// The acceptance criteria, one result per criterion.
std::vector<CheckResult> run_acceptance_checks(const CheckObserver& observer = {});

} // namespace aoisched
