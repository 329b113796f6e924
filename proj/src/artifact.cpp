#include "aoisched/artifact.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace aoisched {

namespace {

using nlohmann::json;

json meta_to_json(const PolicyMeta& meta) {
    json j;
    j["kind"] = meta.kind;
    j["users"] = meta.users;
    j["bound"] = meta.bound;
    j["probs"] = meta.probs;
    j["tol"] = meta.tol;
    j["iterations"] = meta.iterations;
    j["converged"] = meta.converged;
    j["average_cost"] = meta.average_cost;
    j["seed"] = meta.seed;
    j["version"] = meta.version;
    return j;
}

PolicyMeta meta_from_json(const json& j) {
    PolicyMeta meta;
    meta.kind = j.at("kind").get<std::string>();
    meta.users = j.at("users").get<int>();
    meta.bound = j.at("bound").get<int>();
    meta.probs = j.at("probs").get<std::vector<double>>();
    meta.tol = j.at("tol").get<double>();
    meta.iterations = j.at("iterations").get<int>();
    meta.converged = j.at("converged").get<bool>();
    meta.average_cost = j.at("average_cost").get<double>();
    meta.seed = j.at("seed").get<std::uint64_t>();
    meta.version = j.at("version").get<std::string>();
    return meta;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void save_meta(const std::string& base_path, const PolicyMeta& meta) {
    write_file(base_path + ".json", meta_to_json(meta).dump(2) + "\n");
}

PolicyMeta load_meta(const std::string& base_path) {
    return meta_from_json(json::parse(read_file(base_path + ".json")));
}

} // namespace

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void save_policy(const std::string& base_path, const PolicyTable& policy,
                 const PolicyMeta& meta) {
    std::ostringstream csv;
    csv << "ordinal,action\n";
    for (std::size_t s = 0; s < policy.actions.size(); ++s)
        csv << s << ',' << policy.actions[s] << '\n';
    write_file(base_path + ".csv", csv.str());
    save_meta(base_path, meta);
}

LoadedPolicy load_policy(const std::string& base_path) {
    LoadedPolicy out;
    out.meta = load_meta(base_path);

    std::istringstream csv(read_file(base_path + ".csv"));
    std::string line;
    if (!std::getline(csv, line) || line != "ordinal,action")
        throw std::runtime_error("policy artifact: bad header in " + base_path + ".csv");
    std::size_t expected = 0;
    while (std::getline(csv, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error("policy artifact: malformed row");
        const std::size_t ordinal = std::stoull(line.substr(0, comma));
        const int action = std::stoi(line.substr(comma + 1));
        if (ordinal != expected)
            throw std::runtime_error("policy artifact: ordinals not contiguous");
        if (action < 0 || action > out.meta.users)
            throw std::runtime_error("policy artifact: action out of range");
        out.policy.actions.push_back(action);
        ++expected;
    }
    if (out.policy.actions.empty())
        throw std::runtime_error("policy artifact: empty table");
    return out;
}

void save_value_store(const std::string& base_path, const OnlineValueStore& store,
                      const PolicyMeta& meta) {
    std::ostringstream csv;
    csv << "ordinal,value\n";
    for (std::size_t s = 0; s < store.values.size(); ++s)
        csv << s << ',' << format_double(store.values[s]) << '\n';
    write_file(base_path + ".csv", csv.str());

    json j = meta_to_json(meta);
    j["post_ages"] = store.post_ages;
    j["post_arrivals"] = store.post_arrivals;
    j["slot"] = store.slot;
    write_file(base_path + ".json", j.dump(2) + "\n");
}

LoadedValueStore load_value_store(const std::string& base_path,
                                  const TruncatedStateSpace& space) {
    LoadedValueStore out;
    const json j = json::parse(read_file(base_path + ".json"));
    out.meta = meta_from_json(j);

    std::istringstream csv(read_file(base_path + ".csv"));
    std::string line;
    if (!std::getline(csv, line) || line != "ordinal,value")
        throw std::runtime_error("value store artifact: bad header");
    while (std::getline(csv, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        out.store.values.push_back(std::stod(line.substr(comma + 1)));
    }
    if (out.store.values.size() != space.size())
        throw std::runtime_error("value store artifact: size does not match space");
    out.store.reference = space.reference();
    out.store.post_ages = j.at("post_ages").get<AgeVec>();
    out.store.post_arrivals = j.at("post_arrivals").get<BitVec>();
    out.store.slot = j.at("slot").get<std::int64_t>();
    return out;
}

void write_metrics_csv(const std::string& path, const std::vector<SweepRow>& rows) {
    std::size_t max_users = 0;
    for (const auto& row : rows)
        max_users = std::max(max_users, row.cell.model.probs.size());

    std::ostringstream csv;
    csv << "policy,N";
    for (std::size_t i = 1; i <= max_users; ++i) csv << ",p_" << i;
    csv << ",horizon,seed,avg_total_age";
    for (std::size_t i = 1; i <= max_users; ++i) csv << ",avg_age_u" << i;
    for (std::size_t i = 1; i <= max_users; ++i) csv << ",updates_u" << i;
    csv << ",error\n";

    for (const auto& row : rows) {
        const std::size_t n = row.cell.model.probs.size();
        csv << row.cell.scheduler << ',' << n;
        for (std::size_t i = 0; i < max_users; ++i) {
            csv << ',';
            if (i < n) csv << format_double(row.cell.model.probs[i]);
        }
        csv << ',' << row.cell.horizon << ',' << row.cell.seed << ','
            << (row.error.empty() ? format_double(row.metrics.avg_total_age) : "");
        for (std::size_t i = 0; i < max_users; ++i) {
            csv << ',';
            if (row.error.empty() && i < n)
                csv << format_double(row.metrics.per_user_avg_age[i]);
        }
        for (std::size_t i = 0; i < max_users; ++i) {
            csv << ',';
            if (row.error.empty() && i < n) csv << row.metrics.update_counts[i];
        }
        csv << ',' << row.error << '\n';
    }
    write_file(path, csv.str());
}

} // namespace aoisched
