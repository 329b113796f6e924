#include "aoisched/oracle.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace aoisched {

namespace {

constexpr double kEdgeEps = 0.0; // any positive probability is an edge

/// Strongly connected components (iterative Tarjan), returned as component
/// index per node.
std::vector<int> scc_components(const StochasticMatrix& P, int& count) {
    const std::size_t n = P.n;
    std::vector<int> index(n, -1), lowlink(n, 0), component(n, -1);
    std::vector<std::uint8_t> on_stack(n, 0);
    std::vector<std::size_t> stack;
    int next_index = 0;
    count = 0;

    struct Frame {
        std::size_t v;
        std::size_t next_col;
    };
    for (std::size_t root = 0; root < n; ++root) {
        if (index[root] >= 0) continue;
        std::vector<Frame> call;
        call.push_back({root, 0});
        index[root] = lowlink[root] = next_index++;
        stack.push_back(root);
        on_stack[root] = 1;
        while (!call.empty()) {
            Frame& f = call.back();
            bool descended = false;
            while (f.next_col < n) {
                const std::size_t w = f.next_col++;
                if (P.at(f.v, w) <= kEdgeEps) continue;
                if (index[w] < 0) {
                    index[w] = lowlink[w] = next_index++;
                    stack.push_back(w);
                    on_stack[w] = 1;
                    call.push_back({w, 0});
                    descended = true;
                    break;
                }
                if (on_stack[w]) lowlink[f.v] = std::min(lowlink[f.v], index[w]);
            }
            if (descended) continue;
            const std::size_t v = f.v;
            call.pop_back();
            if (!call.empty())
                lowlink[call.back().v] = std::min(lowlink[call.back().v], lowlink[v]);
            if (lowlink[v] == index[v]) {
                while (true) {
                    const std::size_t w = stack.back();
                    stack.pop_back();
                    on_stack[w] = 0;
                    component[w] = count;
                    if (w == v) break;
                }
                ++count;
            }
        }
    }
    return component;
}

std::string describe_states(const std::vector<std::size_t>& states) {
    std::ostringstream os;
    os << "{";
    for (std::size_t i = 0; i < states.size() && i < 6; ++i)
        os << (i ? "," : "") << states[i];
    if (states.size() > 6) os << ",..";
    os << "}";
    return os.str();
}

/// Stationary distribution restricted to one closed class.
std::vector<double> class_stationary(const StochasticMatrix& P,
                                     const std::vector<std::size_t>& members) {
    const std::size_t k = members.size();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(k, k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j)
            A(j, i) = P.at(members[i], members[j]); // transpose of the submatrix
    for (std::size_t i = 0; i < k; ++i) A(i, i) -= 1.0;
    for (std::size_t j = 0; j < k; ++j) A(k - 1, j) = 1.0; // normalization row
    Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
    b(k - 1) = 1.0;
    Eigen::VectorXd pi = A.partialPivLu().solve(b);

    std::vector<double> out(k);
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        double v = pi(i);
        if (v < -1e-10)
            throw std::runtime_error("stationary_distribution: negative solve result");
        if (v < 0.0) v = 0.0;
        out[i] = v;
        sum += v;
    }
    for (double& v : out) v /= sum;
    return out;
}

/// Lazy power iteration (P+I)/2 keeps periodic chains convergent.
std::vector<double> power_iteration_stationary(const StochasticMatrix& P) {
    const std::size_t n = P.n;
    struct Entry {
        std::size_t col;
        double p;
    };
    std::vector<std::vector<Entry>> rows(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (P.at(i, j) > 0.0) rows[i].push_back({j, P.at(i, j)});

    std::vector<double> pi(n, 1.0 / double(n)), next(n);
    for (int iter = 0; iter < 1000000; ++iter) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double w = pi[i];
            if (w == 0.0) continue;
            next[i] += 0.5 * w;
            for (const Entry& e : rows[i]) next[e.col] += 0.5 * w * e.p;
        }
        double delta = 0.0;
        for (std::size_t i = 0; i < n; ++i) delta += std::abs(next[i] - pi[i]);
        pi.swap(next);
        if (delta < 1e-14) break;
    }
    return pi;
}

struct GainBias {
    double gain;
    std::vector<double> bias;
};

/// Solves h + g = c + P h with h(ref) = 0 for a unichain policy.
GainBias solve_gain_bias(const StochasticMatrix& P, const std::vector<double>& costs,
                         std::size_t ref) {
    const std::size_t n = P.n;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n + 1, n + 1);
    Eigen::VectorXd b(n + 1);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) A(i, j) = (i == j ? 1.0 : 0.0) - P.at(i, j);
        A(i, n) = 1.0;
        b(i) = costs[i];
    }
    A(n, ref) = 1.0;
    b(n) = 0.0;
    Eigen::VectorXd x = A.partialPivLu().solve(b);
    GainBias gb;
    gb.gain = x(n);
    gb.bias.resize(n);
    for (std::size_t i = 0; i < n; ++i) gb.bias[i] = x(i);
    return gb;
}

} // namespace

void StochasticMatrix::validate() const {
    if (p.size() != n * n) throw std::invalid_argument("StochasticMatrix: bad size");
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double v = at(i, j);
            if (v < 0.0) throw std::invalid_argument("StochasticMatrix: negative entry");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw std::invalid_argument("StochasticMatrix: row does not sum to 1");
    }
}

std::vector<std::vector<std::size_t>> closed_classes(const StochasticMatrix& P) {
    int count = 0;
    std::vector<int> comp = scc_components(P, count);
    std::vector<std::uint8_t> closed(count, 1);
    for (std::size_t i = 0; i < P.n; ++i)
        for (std::size_t j = 0; j < P.n; ++j)
            if (P.at(i, j) > 0.0 && comp[j] != comp[i]) closed[comp[i]] = 0;

    std::vector<std::vector<std::size_t>> out;
    std::vector<int> remap(count, -1);
    for (std::size_t i = 0; i < P.n; ++i) {
        if (!closed[comp[i]]) continue;
        if (remap[comp[i]] < 0) {
            remap[comp[i]] = int(out.size());
            out.emplace_back();
        }
        out[remap[comp[i]]].push_back(i);
    }
    return out;
}

std::vector<double> stationary_distribution(const StochasticMatrix& P) {
    P.validate();
    auto classes = closed_classes(P);
    if (classes.size() != 1) {
        std::ostringstream os;
        os << "stationary_distribution: chain is not unichain; disjoint closed sets "
           << describe_states(classes.at(0)) << " and " << describe_states(classes.at(1));
        throw std::runtime_error(os.str());
    }

    std::vector<double> pi(P.n, 0.0);
    const auto& members = classes[0];
    std::vector<double> inner = class_stationary(P, members);
    for (std::size_t i = 0; i < members.size(); ++i) pi[members[i]] = inner[i];

    std::vector<double> check = power_iteration_stationary(P);
    for (std::size_t i = 0; i < P.n; ++i)
        if (std::abs(check[i] - pi[i]) > 1e-9)
            throw std::runtime_error(
                "stationary_distribution: power iteration disagrees with linear solve");
    return pi;
}

StochasticMatrix induced_chain(const PolicyTable& policy, const TruncatedStateSpace& space,
                               const ArrivalModel& model) {
    if (policy.actions.size() != space.size())
        throw std::invalid_argument("induced_chain: policy does not match the space");
    model.validate();
    const int n_users = space.users();
    StochasticMatrix P;
    P.n = space.size();
    P.p.assign(P.n * P.n, 0.0);

    AgeVec ages;
    BitVec arrivals;
    const std::size_t ac = space.arrival_count();
    for (std::size_t s = 0; s < space.size(); ++s) {
        space.decode(s, ages, arrivals);
        const int d = policy.actions[s];
        if (d < 0 || d > n_users) throw std::invalid_argument("induced_chain: bad action");
        AgeVec post = truncated_step(ages, Decision{d}, arrivals, space.bound());
        const std::size_t post_age = space.age_ordinal(post);
        for (std::size_t l = 0; l < ac; ++l) {
            double prob = 1.0;
            for (int i = 0; i < n_users; ++i) {
                const bool bit = (l >> (n_users - 1 - i)) & 1;
                prob *= bit ? model.probs[i] : 1.0 - model.probs[i];
            }
            if (prob > 0.0) P.at(s, post_age * ac + l) += prob;
        }
    }
    return P;
}

std::vector<double> policy_costs(const PolicyTable& policy, const TruncatedStateSpace& space) {
    std::vector<double> costs(space.size());
    AgeVec ages;
    BitVec arrivals;
    for (std::size_t s = 0; s < space.size(); ++s) {
        space.decode(s, ages, arrivals);
        NetworkState st{ages, arrivals};
        costs[s] = double(immediate_cost(st, Decision{policy.actions[s]}));
    }
    return costs;
}

ExactEvaluation evaluate_policy_exact(const PolicyTable& policy,
                                      const TruncatedStateSpace& space,
                                      const ArrivalModel& model) {
    StochasticMatrix P = induced_chain(policy, space, model);
    auto classes = closed_classes(P);
    if (classes.size() != 1) {
        std::ostringstream os;
        os << "evaluate_policy_exact: induced chain is not unichain; closed sets "
           << describe_states(classes.at(0)) << " and " << describe_states(classes.at(1));
        throw std::runtime_error(os.str());
    }
    ExactEvaluation eval;
    eval.stationary = stationary_distribution(P);
    eval.recurrent.assign(space.size(), 0);
    for (std::size_t s : classes[0]) eval.recurrent[s] = 1;

    std::vector<double> costs = policy_costs(policy, space);
    eval.average_cost = 0.0;
    for (std::size_t s = 0; s < space.size(); ++s)
        eval.average_cost += eval.stationary[s] * costs[s];
    return eval;
}

double gain_from_state(const StochasticMatrix& P, const std::vector<double>& costs,
                       std::size_t start) {
    auto classes = closed_classes(P);
    std::vector<int> class_of(P.n, -1);
    for (std::size_t k = 0; k < classes.size(); ++k)
        for (std::size_t s : classes[k]) class_of[s] = int(k);

    std::vector<double> class_gain(classes.size());
    for (std::size_t k = 0; k < classes.size(); ++k) {
        std::vector<double> pi = class_stationary(P, classes[k]);
        double g = 0.0;
        for (std::size_t i = 0; i < classes[k].size(); ++i)
            g += pi[i] * costs[classes[k][i]];
        class_gain[k] = g;
    }
    if (class_of[start] >= 0) return class_gain[class_of[start]];

    // Absorption probabilities from the transient states into each class.
    std::vector<std::size_t> transient;
    std::vector<int> tindex(P.n, -1);
    for (std::size_t s = 0; s < P.n; ++s)
        if (class_of[s] < 0) {
            tindex[s] = int(transient.size());
            transient.push_back(s);
        }
    const std::size_t t = transient.size();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(t, t);
    for (std::size_t i = 0; i < t; ++i) {
        for (std::size_t j = 0; j < t; ++j)
            A(i, j) = (i == j ? 1.0 : 0.0) - P.at(transient[i], transient[j]);
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);

    double gain = 0.0;
    for (std::size_t k = 0; k < classes.size(); ++k) {
        Eigen::VectorXd b = Eigen::VectorXd::Zero(t);
        for (std::size_t i = 0; i < t; ++i)
            for (std::size_t s : classes[k]) b(i) += P.at(transient[i], s);
        Eigen::VectorXd a = lu.solve(b);
        gain += a(tindex[start]) * class_gain[k];
    }
    return gain;
}

namespace {

/// Expected action values q(s, d) = c(s, d) + sum_s' P(s'|s,d) h(s').
std::vector<double> action_values(const TruncatedStateSpace& space,
                                  const ArrivalModel& model, const std::vector<double>& h,
                                  const AgeVec& ages, const BitVec& arrivals) {
    const int n = space.users();
    const std::size_t ac = space.arrival_count();
    std::vector<double> arrival_probs(ac);
    for (std::size_t l = 0; l < ac; ++l) {
        double prob = 1.0;
        for (int i = 0; i < n; ++i) {
            const bool bit = (l >> (n - 1 - i)) & 1;
            prob *= bit ? model.probs[i] : 1.0 - model.probs[i];
        }
        arrival_probs[l] = prob;
    }
    std::vector<double> q(n + 1);
    NetworkState st{ages, arrivals};
    for (int d = 0; d <= n; ++d) {
        AgeVec post = truncated_step(ages, Decision{d}, arrivals, space.bound());
        const std::size_t base = space.age_ordinal(post) * ac;
        double cont = 0.0;
        for (std::size_t l = 0; l < ac; ++l) cont += arrival_probs[l] * h[base + l];
        q[d] = double(immediate_cost(st, Decision{d})) + cont;
    }
    return q;
}

std::pair<PolicyTable, double> enumerate_policies(const TruncatedStateSpace& space,
                                                  const ArrivalModel& model) {
    const std::size_t n = space.size();
    const int actions = space.users() + 1;
    PolicyTable best;
    double best_gain = std::numeric_limits<double>::infinity();

    PolicyTable current;
    current.actions.assign(n, 0);
    const std::size_t ref = space.reference();
    while (true) {
        StochasticMatrix P = induced_chain(current, space, model);
        std::vector<double> costs = policy_costs(current, space);
        const double g = gain_from_state(P, costs, ref);
        if (g < best_gain) {
            best_gain = g;
            best = current;
        }
        // odometer increment
        std::size_t pos = 0;
        while (pos < n) {
            if (++current.actions[pos] < actions) break;
            current.actions[pos] = 0;
            ++pos;
        }
        if (pos == n) break;
    }
    return {best, best_gain};
}

/// Minimum mean cycle (Karp) over the deterministic transition graph
/// reachable from the reference state; only valid when all p_i = 1.
double deterministic_optimal_gain(const TruncatedStateSpace& space) {
    const int n_users = space.users();
    const std::size_t ac = space.arrival_count();
    const std::size_t all_on = ac - 1; // arrivals are certain

    // Reachable subgraph under every action.
    std::vector<std::size_t> nodes;
    std::vector<int> node_index(space.size(), -1);
    std::vector<std::size_t> frontier{space.reference()};
    node_index[space.reference()] = 0;
    nodes.push_back(space.reference());
    AgeVec ages;
    BitVec arrivals;
    while (!frontier.empty()) {
        const std::size_t s = frontier.back();
        frontier.pop_back();
        space.decode(s, ages, arrivals);
        for (int d = 0; d <= n_users; ++d) {
            AgeVec post = truncated_step(ages, Decision{d}, arrivals, space.bound());
            const std::size_t next = space.age_ordinal(post) * ac + all_on;
            if (node_index[next] < 0) {
                node_index[next] = int(nodes.size());
                nodes.push_back(next);
                frontier.push_back(next);
            }
        }
    }

    struct Edge {
        int from;
        int to;
        double w;
    };
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        space.decode(nodes[i], ages, arrivals);
        NetworkState st{ages, arrivals};
        for (int d = 0; d <= n_users; ++d) {
            AgeVec post = truncated_step(ages, Decision{d}, arrivals, space.bound());
            const std::size_t next = space.age_ordinal(post) * ac + all_on;
            edges.push_back({int(i), node_index[next],
                             double(immediate_cost(st, Decision{d}))});
        }
    }

    const std::size_t v = nodes.size();
    const double inf = std::numeric_limits<double>::infinity();
    // d[k][x] = min weight over walks of exactly k edges from the reference.
    std::vector<std::vector<double>> dist(v + 1, std::vector<double>(v, inf));
    dist[0][0] = 0.0;
    for (std::size_t k = 1; k <= v; ++k)
        for (const Edge& e : edges)
            if (dist[k - 1][e.from] < inf)
                dist[k][e.to] = std::min(dist[k][e.to], dist[k - 1][e.from] + e.w);

    double mu = inf;
    for (std::size_t x = 0; x < v; ++x) {
        if (dist[v][x] == inf) continue;
        double worst = -inf;
        for (std::size_t k = 0; k < v; ++k)
            if (dist[k][x] < inf)
                worst = std::max(worst, (dist[v][x] - dist[k][x]) / double(v - k));
        mu = std::min(mu, worst);
    }
    if (mu == inf)
        throw std::runtime_error("brute_force_optimal: no cycle reachable");
    return mu;
}

/// Exact orbit gain of a policy from the reference when the dynamics are
/// deterministic: walk until the cycle repeats, average its costs.
double deterministic_policy_gain(const PolicyTable& policy,
                                 const TruncatedStateSpace& space) {
    const std::size_t ac = space.arrival_count();
    const std::size_t all_on = ac - 1;
    std::vector<int> visit_step(space.size(), -1);
    std::vector<std::size_t> path;
    std::size_t s = space.reference();
    AgeVec ages;
    BitVec arrivals;
    while (visit_step[s] < 0) {
        visit_step[s] = int(path.size());
        path.push_back(s);
        space.decode(s, ages, arrivals);
        AgeVec post =
            truncated_step(ages, Decision{policy.actions[s]}, arrivals, space.bound());
        s = space.age_ordinal(post) * ac + all_on;
    }
    const int start = visit_step[s];
    double total = 0.0;
    for (std::size_t k = start; k < path.size(); ++k) {
        space.decode(path[k], ages, arrivals);
        NetworkState st{ages, arrivals};
        total += double(immediate_cost(st, Decision{policy.actions[path[k]]}));
    }
    return total / double(path.size() - start);
}

/// Policy serving the oldest user that has an arrival.
PolicyTable max_age_policy(const TruncatedStateSpace& space) {
    PolicyTable policy;
    policy.actions.resize(space.size());
    AgeVec ages;
    BitVec arrivals;
    for (std::size_t s = 0; s < space.size(); ++s) {
        space.decode(s, ages, arrivals);
        int best = 0;
        std::int64_t best_age = 0;
        for (int i = 0; i < space.users(); ++i)
            if (arrivals[i] && ages[i] > best_age) {
                best_age = ages[i];
                best = i + 1;
            }
        policy.actions[s] = best;
    }
    return policy;
}

std::pair<PolicyTable, double> howard_policy_iteration(const TruncatedStateSpace& space,
                                                       const ArrivalModel& model) {
    const std::size_t n = space.size();
    const std::size_t ref = space.reference();

    // Myopic start: argmin of the immediate cost.
    PolicyTable policy;
    policy.actions.resize(n);
    AgeVec ages;
    BitVec arrivals;
    for (std::size_t s = 0; s < n; ++s) {
        space.decode(s, ages, arrivals);
        NetworkState st{ages, arrivals};
        std::int64_t best = std::numeric_limits<std::int64_t>::max();
        int best_d = 0;
        for (int d = 0; d <= space.users(); ++d) {
            const std::int64_t c = immediate_cost(st, Decision{d});
            if (c < best) {
                best = c;
                best_d = d;
            }
        }
        policy.actions[s] = best_d;
    }

    GainBias gb{0.0, {}};
    for (int iter = 0; iter < 500; ++iter) {
        StochasticMatrix P = induced_chain(policy, space, model);
        auto classes = closed_classes(P);
        if (classes.size() != 1)
            throw std::runtime_error("policy iteration: intermediate policy not unichain");
        gb = solve_gain_bias(P, policy_costs(policy, space), ref);

        bool changed = false;
        for (std::size_t s = 0; s < n; ++s) {
            space.decode(s, ages, arrivals);
            std::vector<double> q = action_values(space, model, gb.bias, ages, arrivals);
            const double cur = q[policy.actions[s]];
            double best = cur;
            int best_d = policy.actions[s];
            for (int d = 0; d <= space.users(); ++d)
                if (q[d] < best - 1e-10) {
                    best = q[d];
                    best_d = d;
                }
            if (best_d != policy.actions[s]) {
                policy.actions[s] = best_d;
                changed = true;
            }
        }
        if (!changed) {
            // Certify the average cost optimality equation before trusting it.
            for (std::size_t s = 0; s < n; ++s) {
                space.decode(s, ages, arrivals);
                std::vector<double> q =
                    action_values(space, model, gb.bias, ages, arrivals);
                const double lhs = gb.bias[s] + gb.gain;
                const double rhs = *std::min_element(q.begin(), q.end());
                if (std::abs(lhs - rhs) > 1e-7 * std::max(1.0, std::abs(gb.gain)))
                    throw std::runtime_error(
                        "policy iteration: optimality equation certification failed");
            }
            return {policy, gb.gain};
        }
    }
    throw std::runtime_error("policy iteration: did not converge within budget");
}

} // namespace

std::pair<PolicyTable, double> brute_force_optimal(const TruncatedStateSpace& space,
                                                   const ArrivalModel& model,
                                                   double enumeration_budget) {
    model.validate();
    if (model.user_count() != space.users())
        throw std::invalid_argument("brute_force_optimal: model does not match the space");

    const double policies =
        std::pow(double(space.users() + 1), double(space.size()));
    if (policies <= enumeration_budget) return enumerate_policies(space, model);

    const bool deterministic =
        std::all_of(model.probs.begin(), model.probs.end(), [](double p) { return p == 1.0; });
    try {
        return howard_policy_iteration(space, model);
    } catch (const std::runtime_error&) {
        if (!deterministic) throw;
    }

    // All arrivals certain: the MDP is a deterministic graph and the optimal
    // gain is its minimum mean cycle. The max-age policy is returned once its
    // exact orbit gain matches that value.
    const double mu = deterministic_optimal_gain(space);
    PolicyTable policy = max_age_policy(space);
    const double achieved = deterministic_policy_gain(policy, space);
    if (std::abs(achieved - mu) > 1e-9)
        throw std::runtime_error(
            "brute_force_optimal: deterministic certification failed");
    return {policy, mu};
}

SwitchReport check_switch_structure(const PolicyTable& policy,
                                    const TruncatedStateSpace& space) {
    if (policy.actions.size() != space.size())
        throw std::invalid_argument("check_switch_structure: size mismatch");
    SwitchReport report;
    AgeVec ages;
    BitVec arrivals;
    for (int i = 1; i <= space.users(); ++i) {
        const std::size_t stride = space.age_stride(i - 1) * space.arrival_count();
        for (std::size_t ord = 0; ord < space.size(); ++ord) {
            space.decode(ord, ages, arrivals);
            if (ages[i - 1] >= space.bound()) continue;
            const std::size_t above = ord + stride;
            if (policy.actions[ord] == i && policy.actions[above] != i) {
                report.ok = false;
                report.violations.emplace_back(ord, above);
            }
        }
    }
    return report;
}

} // namespace aoisched
