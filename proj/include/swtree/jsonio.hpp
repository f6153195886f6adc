#pragma once

#include <string>

#include "json.hpp"
#include "swtree/model.hpp"

namespace swtree {

using Json = nlohmann::json;

// all floating point output carries 17 significant digits
std::string format_double(double x);

// "mono:K", "random:SEED", inline JSON, or a path to a JSON file with
// {"kind":"mono","spin":K} | {"kind":"list","spins":[...]}
SpinBoundary parse_spin_boundary(const std::string& spec, const TreeTopology& T, int q);

// "free", "wired", inline JSON, or a path with
// {"kind":"free"|"wired"} | {"kind":"partition","classes":[[...],...]}
RCBoundary parse_rc_boundary(const std::string& spec);

Graph load_graph(const std::string& path);

uint64_t config_hash(const Json& config);

// manifest-first artifact directory: manifest.json is written before
// anything else lands in `dir`
void write_manifest(const std::string& dir, const Json& config);
void write_text(const std::string& path, const std::string& text);

}  // namespace swtree
