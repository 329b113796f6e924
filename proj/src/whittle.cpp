#include "aoisched/whittle.hpp"

#include <cmath>
#include <stdexcept>

namespace aoisched {

double threshold_average_cost_real(double threshold, double p, double c) {
    if (!(p > 0.0 && p <= 1.0))
        throw std::invalid_argument("threshold_average_cost: need 0 < p <= 1");
    if (threshold < 1.0)
        throw std::invalid_argument("threshold_average_cost: threshold below 1");
    const double x = threshold;
    const double numerator = x * x / 2.0 + (1.0 / p - 0.5) * x + 1.0 / (p * p) - 1.0 / p + c;
    const double denominator = x + (1.0 - p) / p;
    return numerator / denominator;
}

double threshold_average_cost(std::int64_t threshold, double p, double c) {
    return threshold_average_cost_real(double(threshold), p, c);
}

SteadyState threshold_steady_state(std::int64_t threshold, double p,
                                   std::int64_t truncate_at) {
    if (!(p > 0.0 && p <= 1.0))
        throw std::invalid_argument("threshold_steady_state: need 0 < p <= 1");
    if (threshold < 1) throw std::invalid_argument("threshold_steady_state: threshold below 1");
    if (truncate_at < threshold)
        throw std::invalid_argument("threshold_steady_state: K below the threshold");

    const double base = 1.0 / (double(threshold) + (1.0 - p) / p);
    SteadyState out;
    out.probs.resize(std::size_t(truncate_at));
    for (std::int64_t i = 1; i <= truncate_at; ++i) {
        out.probs[std::size_t(i - 1)] =
            i <= threshold ? base : base * std::pow(1.0 - p, double(i - threshold));
    }
    // Exact geometric remainder: base * sum_{i>K} (1-p)^{i-threshold}.
    out.tail_mass = p < 1.0 ? base * std::pow(1.0 - p, double(truncate_at - threshold)) *
                                  (1.0 - p) / p
                            : 0.0;
    return out;
}

double whittle_index(std::int64_t age, bool arrival, double p) {
    if (age < 1) throw std::invalid_argument("whittle_index: age below 1");
    if (!arrival) return 0.0;
    if (!(p > 0.0 && p <= 1.0))
        throw std::invalid_argument("whittle_index: need 0 < p <= 1");
    const double x = double(age);
    return x * x / 2.0 - x / 2.0 + x / p;
}

std::int64_t optimal_threshold(double p, double c) {
    if (!(p > 0.0 && p <= 1.0))
        throw std::invalid_argument("optimal_threshold: need 0 < p <= 1");
    if (c < 0.0) return 1; // negative cost: always update
    std::int64_t x = 1;
    while (!(c < whittle_index(x, true, p))) ++x;
    return x;
}

IndexabilityReport verify_indexability(double p, const std::vector<double>& c_grid) {
    IndexabilityReport report;
    report.thresholds.reserve(c_grid.size());
    double prev_c = -1.0;
    for (double c : c_grid) {
        if (c < 0.0) throw std::invalid_argument("verify_indexability: negative cost");
        if (c < prev_c) throw std::invalid_argument("verify_indexability: grid not ascending");
        prev_c = c;
        report.thresholds.push_back(optimal_threshold(p, c));
    }
    report.indexable = true;
    for (std::size_t i = 1; i < report.thresholds.size(); ++i)
        if (report.thresholds[i] < report.thresholds[i - 1]) report.indexable = false;
    return report;
}

} // namespace aoisched
