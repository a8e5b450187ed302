#pragma once

#include "mixsim/topology.hpp"

#include "json.hpp"

#include <string>

namespace mixsim {

/// Parses the topology file schema:
///   {"n": int, "model": "general"|"uniform-mm"|"general-mm"|"cluster"|"pure-mp",
///    "memories": [{"readers": [...], "writers": [...]}],   // general
///    "edges": [[u, v], ...],                                // uniform-mm
///    "domain": [[...], ...],                                // general-mm
///    "clusters": [[...], ...]}                              // cluster
/// Exactly the field belonging to the model must be present (pure-mp takes none).
/// Errors are reported as TopologyError with a JSON-pointer style location.
/// The returned topology is normalized.
MixedTopology topology_from_json(const nlohmann::json& doc);
MixedTopology load_topology(const std::string& path);

nlohmann::json topology_to_json(const MixedTopology& topology);

nlohmann::json to_json(ProcessSet s);
nlohmann::json to_json(const ResilienceReport& report);

}  // namespace mixsim
