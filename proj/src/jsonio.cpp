#include "swtree/jsonio.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "swtree/slowmix.hpp"

namespace swtree {

std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

namespace {

Json load_json_or_inline(const std::string& spec) {
    if (!spec.empty() && (spec[0] == '{' || spec[0] == '[')) return Json::parse(spec);
    std::ifstream in(spec);
    if (!in) throw Error("cannot open JSON file: " + spec);
    Json j;
    in >> j;
    return j;
}

}  // namespace

SpinBoundary parse_spin_boundary(const std::string& spec, const TreeTopology& T, int q) {
    if (spec.rfind("mono:", 0) == 0) return SpinBoundary::mono(T, q, std::stoi(spec.substr(5)));
    if (spec.rfind("random:", 0) == 0)
        return SpinBoundary::random(T, q, std::stoull(spec.substr(7)));
    Json j = load_json_or_inline(spec);
    std::string kind = j.at("kind");
    if (kind == "mono") return SpinBoundary::mono(T, q, j.at("spin").get<int>());
    if (kind == "list") return SpinBoundary::list(T, q, j.at("spins").get<std::vector<int>>());
    throw Error("spin boundary: unknown kind " + kind);
}

RCBoundary parse_rc_boundary(const std::string& spec) {
    if (spec == "free") return RCBoundary::free();
    if (spec == "wired") return RCBoundary::wired();
    Json j = load_json_or_inline(spec);
    std::string kind = j.at("kind");
    if (kind == "free") return RCBoundary::free();
    if (kind == "wired") return RCBoundary::wired();
    if (kind == "partition")
        return RCBoundary::partition(j.at("classes").get<std::vector<std::vector<int>>>());
    throw Error("rc boundary: unknown kind " + kind);
}

Graph load_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open graph file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return read_edge_list(ss.str());
}

uint64_t config_hash(const Json& config) {
    std::string s = config.dump();
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void write_manifest(const std::string& dir, const Json& config) {
    std::filesystem::create_directories(dir);
    Json manifest{{"schema_version", 1},
                  {"tool", "swtreelab"},
                  {"config", config},
                  {"config_hash", config_hash(config)}};
    std::ofstream out(dir + "/manifest.json");
    out << manifest.dump(2) << "\n";
}

void write_text(const std::string& path, const std::string& text) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << text;
}

}  // namespace swtree
