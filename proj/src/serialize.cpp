#include "colform/serialize.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace colform {

namespace {

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

// 9 significant digits for features; %.17g (round-trip exact) for values the
// solver consumes downstream.
std::string fmt_feature(double v) { return fmt("%.9g", v); }
std::string fmt_value(double v) { return fmt("%.17g", v); }

}  // namespace

std::string instance_to_json(const Instance& inst) {
    std::ostringstream os;
    os << "{\"domain\":\"" << domain_name(inst.domain) << "\",\"seed\":" << inst.seed
       << ",\"n\":" << inst.n() << ",\"agents\":[";
    for (int i = 0; i < inst.n(); ++i) {
        os << (i ? ",[" : "[");
        const auto& vals = inst.agents[i].values;
        for (size_t j = 0; j < vals.size(); ++j)
            os << (j ? "," : "") << fmt_feature(vals[j]);
        os << "]";
    }
    os << "]}";
    return os.str();
}

Instance instance_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    Instance inst;
    inst.domain = domain_from_name(j.at("domain").get<std::string>());
    inst.seed = j.at("seed").get<uint64_t>();
    const int n = j.at("n").get<int>();
    const int d = feature_dim(inst.domain);
    for (const auto& row : j.at("agents")) {
        AgentFeatures f;
        f.values = row.get<std::vector<double>>();
        if (static_cast<int>(f.values.size()) != d)
            throw IoError("instance agent feature width mismatch");
        inst.agents.push_back(std::move(f));
    }
    if (inst.n() != n) throw IoError("instance agent count mismatch");
    return inst;
}

void write_instance(const std::string& path, const Instance& inst) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write instance: " + path);
    os << instance_to_json(inst) << "\n";
}

Instance read_instance(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot read instance: " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return instance_from_json(ss.str());
}

void write_pool_jsonl(std::ostream& os, const std::vector<Collective>& pool) {
    for (const auto& c : pool) {
        os << "{\"members\":[";
        for (size_t i = 0; i < c.members.size(); ++i)
            os << (i ? "," : "") << c.members[i];
        os << "],\"value\":" << fmt_value(c.value) << "}\n";
    }
}

std::vector<Collective> read_pool_jsonl(std::istream& is) {
    std::vector<Collective> pool;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        Collective c;
        c.members = j.at("members").get<std::vector<int>>();
        c.value = j.at("value").get<double>();
        pool.push_back(std::move(c));
    }
    return pool;
}

void write_pool_file(const std::string& path, const std::vector<Collective>& pool) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write pool: " + path);
    write_pool_jsonl(os, pool);
}

std::vector<Collective> read_pool_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot read pool: " + path);
    return read_pool_jsonl(is);
}

std::string packing_to_json(const Packing& p) {
    std::ostringstream os;
    os << "{\"chosen_members\":[";
    for (size_t i = 0; i < p.chosen_members.size(); ++i) {
        os << (i ? ",[" : "[");
        for (size_t j = 0; j < p.chosen_members[i].size(); ++j)
            os << (j ? "," : "") << p.chosen_members[i][j];
        os << "]";
    }
    os << "],\"total\":" << fmt_value(p.total)
       << ",\"proven_optimal\":" << (p.proven_optimal ? "true" : "false")
       << ",\"nodes_expanded\":" << p.nodes_expanded << ",\"wall_ms\":" << fmt("%.0f", p.wall_ms)
       << "}";
    return os.str();
}

}  // namespace colform
