#include "mixsim/topology_io.hpp"

#include <fstream>

namespace mixsim {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw TopologyError(where + ": " + what);
}

std::size_t read_count(const json& doc, const std::string& where) {
    if (!doc.is_number_integer() || doc.get<long long>() < 1) fail(where, "expected a positive integer");
    return doc.get<std::size_t>();
}

ProcessSet read_set(const json& arr, std::size_t n, const std::string& where) {
    if (!arr.is_array()) fail(where, "expected an array of process ids");
    ProcessSet s;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const auto& v = arr[i];
        const auto at = where + "/" + std::to_string(i);
        if (!v.is_number_integer()) fail(at, "expected an integer process id");
        const auto id = v.get<long long>();
        if (id < 0 || static_cast<std::size_t>(id) >= n) fail(at, "process id " + std::to_string(id) + " out of range");
        s.insert(static_cast<ProcessId>(id));
    }
    return s;
}

std::vector<ProcessSet> read_set_list(const json& arr, std::size_t n, const std::string& where) {
    if (!arr.is_array()) fail(where, "expected an array of process-id arrays");
    std::vector<ProcessSet> out;
    for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(read_set(arr[i], n, where + "/" + std::to_string(i)));
    return out;
}

const char* const kModelFields[] = {"memories", "edges", "domain", "clusters"};

}  // namespace

MixedTopology topology_from_json(const json& doc) {
    if (!doc.is_object()) fail("", "expected a JSON object");
    if (!doc.contains("n")) fail("/n", "missing");
    const auto n = read_count(doc["n"], "/n");
    if (n > kMaxProcesses) fail("/n", "more than 64 processes");
    if (!doc.contains("model") || !doc["model"].is_string()) fail("/model", "missing or not a string");
    const auto model = doc["model"].get<std::string>();

    std::string required;
    if (model == "general") required = "memories";
    else if (model == "uniform-mm") required = "edges";
    else if (model == "general-mm") required = "domain";
    else if (model == "cluster") required = "clusters";
    else if (model != "pure-mp") fail("/model", "unknown model '" + model + "'");

    for (const char* field : kModelFields) {
        const bool present = doc.contains(field);
        if (field == required && !present) fail(std::string("/") + field, "required for model '" + model + "'");
        if (field != required && present) fail(std::string("/") + field, "not allowed for model '" + model + "'");
    }

    try {
        if (model == "pure-mp") return pure_mp(n);
        if (model == "general") {
            MixedTopology t;
            t.n = n;
            const auto& mems = doc["memories"];
            if (!mems.is_array()) fail("/memories", "expected an array");
            for (std::size_t i = 0; i < mems.size(); ++i) {
                const auto at = "/memories/" + std::to_string(i);
                const auto& m = mems[i];
                if (!m.is_object()) fail(at, "expected an object");
                MemorySpec spec;
                if (m.contains("readers")) spec.readers = read_set(m["readers"], n, at + "/readers");
                if (m.contains("writers")) spec.writers = read_set(m["writers"], n, at + "/writers");
                if (spec.readers.empty() && spec.writers.empty()) fail(at, "memory has neither readers nor writers");
                t.memories.push_back(spec);
            }
            return normalize(std::move(t));
        }
        if (model == "uniform-mm") {
            const auto& edges = doc["edges"];
            if (!edges.is_array()) fail("/edges", "expected an array");
            SharedMemoryGraph g(n);
            for (std::size_t i = 0; i < edges.size(); ++i) {
                const auto at = "/edges/" + std::to_string(i);
                const auto ends = read_set(edges[i], n, at);
                if (edges[i].size() != 2 || ends.size() != 2) fail(at, "expected two distinct endpoints");
                const auto v = ends.to_vector();
                g.add_edge(v[0], v[1]);
            }
            return from_uniform_mm(g);
        }
        if (model == "general-mm") return from_general_mm(n, read_set_list(doc["domain"], n, "/domain"));
        Clustering c{read_set_list(doc["clusters"], n, "/clusters")};
        c.validate(n);
        return from_clusters(c);
    } catch (const TopologyError&) {
        throw;
    } catch (const std::exception& e) {
        fail("", e.what());
    }
}

MixedTopology load_topology(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw TopologyError(path + ": cannot open");
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw TopologyError(path + ": " + e.what());
    }
    return topology_from_json(doc);
}

json to_json(ProcessSet s) { return s.to_vector(); }

json topology_to_json(const MixedTopology& topology) {
    json doc;
    doc["n"] = topology.n;
    doc["model"] = model_name(topology.origin);
    std::visit(
        [&](const auto& o) {
            using T = std::decay_t<decltype(o)>;
            if constexpr (std::is_same_v<T, origin::UniformMM>) {
                json edges = json::array();
                for (auto [u, v] : o.graph.edges()) edges.push_back({u, v});
                doc["edges"] = edges;
            } else if constexpr (std::is_same_v<T, origin::GeneralMM>) {
                json d = json::array();
                for (auto s : o.domain) d.push_back(to_json(s));
                doc["domain"] = d;
            } else if constexpr (std::is_same_v<T, origin::Cluster>) {
                json d = json::array();
                for (auto s : o.clustering.clusters) d.push_back(to_json(s));
                doc["clusters"] = d;
            } else if constexpr (std::is_same_v<T, origin::General>) {
                json mems = json::array();
                for (const auto& m : topology.memories)
                    mems.push_back({{"readers", to_json(m.readers)}, {"writers", to_json(m.writers)}});
                doc["memories"] = mems;
            }
        },
        topology.origin);
    return doc;
}

json to_json(const ResilienceReport& report) {
    json doc;
    doc["n"] = report.n;
    doc["f_opt"] = report.f_opt;
    doc["f_maj"] = report.f_maj;
    doc["rho"] = report.rho;
    doc["sigma"] = report.sigma;
    if (const auto* mm = std::get_if<UniformMMParams>(&report.model_params)) {
        doc["f_G"] = mm->f_g;
        doc["f_mm"] = mm->f_mm;
    } else if (const auto* cl = std::get_if<ClusterParams>(&report.model_params)) {
        doc["f_cluster"] = cl->f_cluster;
    }
    if (report.witness) {
        doc["witness"] = {{"f", report.witness->f}, {"P", to_json(report.witness->p)}, {"Q", to_json(report.witness->q)}};
    } else {
        doc["witness"] = nullptr;
    }
    return doc;
}

}  // namespace mixsim
