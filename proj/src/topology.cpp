#include "mixsim/topology.hpp"

#include <algorithm>
#include <sstream>

namespace mixsim {

std::string ProcessSet::to_string() const {
    std::ostringstream os;
    os << '{';
    bool first = true;
    for (auto p : to_vector()) {
        if (!first) os << ',';
        os << p;
        first = false;
    }
    os << '}';
    return os.str();
}

bool lex_less(ProcessSet a, ProcessSet b) {
    const auto va = a.to_vector();
    const auto vb = b.to_vector();
    return std::lexicographical_compare(va.begin(), va.end(), vb.begin(), vb.end());
}

// SharedMemoryGraph -------------------------------------------------------------

SharedMemoryGraph::SharedMemoryGraph(std::size_t n) : adjacency_(n) {
    if (n > kMaxProcesses) throw TopologyError("graph has more than 64 vertices");
}

SharedMemoryGraph::SharedMemoryGraph(std::size_t n, const std::vector<std::pair<ProcessId, ProcessId>>& edges)
    : SharedMemoryGraph(n) {
    for (auto [u, v] : edges) add_edge(u, v);
}

void SharedMemoryGraph::add_edge(ProcessId u, ProcessId v) {
    if (u >= size() || v >= size())
        throw TopologyError("edge (" + std::to_string(u) + "," + std::to_string(v) + ") out of range");
    if (u == v) throw TopologyError("self-loop on vertex " + std::to_string(u));
    adjacency_[u].insert(v);
    adjacency_[v].insert(u);
}

bool SharedMemoryGraph::has_edge(ProcessId u, ProcessId v) const {
    return u < size() && adjacency_[u].contains(v);
}

std::size_t SharedMemoryGraph::edge_count() const {
    std::size_t twice = 0;
    for (auto a : adjacency_) twice += a.size();
    return twice / 2;
}

std::vector<std::pair<ProcessId, ProcessId>> SharedMemoryGraph::edges() const {
    std::vector<std::pair<ProcessId, ProcessId>> out;
    for (ProcessId u = 0; u < size(); ++u)
        for (auto v : adjacency_[u].to_vector())
            if (u < v) out.emplace_back(u, v);
    return out;
}

// Clustering ----------------------------------------------------------------------

void Clustering::validate(std::size_t n) const {
    ProcessSet seen;
    for (std::size_t i = 0; i < clusters.size(); ++i) {
        const auto c = clusters[i];
        if (c.empty()) throw TopologyError("cluster " + std::to_string(i) + " is empty");
        if (c.extent() > n) throw TopologyError("cluster " + std::to_string(i) + " has a process id >= n");
        if (c.intersects(seen)) throw TopologyError("cluster " + std::to_string(i) + " overlaps an earlier cluster");
        seen |= c;
    }
    if (seen != ProcessSet::all(n)) throw TopologyError("clusters do not cover every process");
}

ProcessSet Clustering::cluster_of(ProcessId p) const {
    for (auto c : clusters)
        if (c.contains(p)) return c;
    throw TopologyError("process " + std::to_string(p) + " is in no cluster");
}

std::string model_name(const TopologyOrigin& o) {
    struct Visitor {
        std::string operator()(const origin::General&) const { return "general"; }
        std::string operator()(const origin::UniformMM&) const { return "uniform-mm"; }
        std::string operator()(const origin::GeneralMM&) const { return "general-mm"; }
        std::string operator()(const origin::Cluster&) const { return "cluster"; }
        std::string operator()(const origin::PureMP&) const { return "pure-mp"; }
    };
    return std::visit(Visitor{}, o);
}

// MixedTopology -------------------------------------------------------------------

std::vector<std::size_t> MixedTopology::readable_by(ProcessId p) const {
    std::vector<std::size_t> out;
    for (std::size_t m = 0; m < memories.size(); ++m)
        if (memories[m].readers.contains(p)) out.push_back(m);
    return out;
}

std::vector<std::size_t> MixedTopology::writable_by(ProcessId p) const {
    std::vector<std::size_t> out;
    for (std::size_t m = 0; m < memories.size(); ++m)
        if (memories[m].writers.contains(p)) out.push_back(m);
    return out;
}

bool MixedTopology::is_normalized() const {
    ProcessSet covered;
    for (const auto& m : memories) covered |= (m.readers & m.writers);
    return covered == ProcessSet::all(n);
}

void validate(const MixedTopology& topology) {
    if (topology.n == 0) throw TopologyError("topology needs at least one process");
    if (topology.n > kMaxProcesses) throw TopologyError("topology has more than 64 processes");
    for (std::size_t i = 0; i < topology.memories.size(); ++i) {
        const auto& m = topology.memories[i];
        if (m.readers.empty() && m.writers.empty())
            throw TopologyError("memory " + std::to_string(i) + " has neither readers nor writers");
        if (m.readers.extent() > topology.n || m.writers.extent() > topology.n)
            throw TopologyError("memory " + std::to_string(i) + " names a process id >= n");
    }
}

MixedTopology normalize(MixedTopology topology) {
    validate(topology);
    ProcessSet covered;
    for (const auto& m : topology.memories) covered |= (m.readers & m.writers);
    for (ProcessId p = 0; p < topology.n; ++p) {
        if (!covered.contains(p)) topology.memories.push_back({ProcessSet::single(p), ProcessSet::single(p)});
    }
    return topology;
}

MixedTopology pure_mp(std::size_t n) {
    MixedTopology t;
    t.n = n;
    t.origin = origin::PureMP{};
    return normalize(std::move(t));
}

MixedTopology from_uniform_mm(const SharedMemoryGraph& g) {
    MixedTopology t;
    t.n = g.size();
    for (ProcessId p = 0; p < g.size(); ++p) {
        const auto s = g.closed_neighborhood(p);
        t.memories.push_back({s, s});
    }
    t.origin = origin::UniformMM{g};
    return normalize(std::move(t));
}

MixedTopology from_general_mm(std::size_t n, const std::vector<ProcessSet>& domain) {
    MixedTopology t;
    t.n = n;
    for (std::size_t i = 0; i < domain.size(); ++i) {
        if (domain[i].empty()) throw TopologyError("domain set " + std::to_string(i) + " is empty");
        t.memories.push_back({domain[i], domain[i]});
    }
    t.origin = origin::GeneralMM{domain};
    return normalize(std::move(t));
}

MixedTopology from_clusters(const Clustering& clustering) {
    std::size_t n = 0;
    for (auto c : clustering.clusters) n += c.size();
    clustering.validate(n);
    MixedTopology t;
    t.n = n;
    for (auto c : clustering.clusters) t.memories.push_back({c, c});
    t.origin = origin::Cluster{clustering};
    return normalize(std::move(t));
}

// Relation ------------------------------------------------------------------------

bool ReadRelation::is_reflexive() const {
    for (ProcessId p = 0; p < rows_.size(); ++p)
        if (!rows_[p].contains(p)) return false;
    return true;
}

ReadRelation read_relation(const MixedTopology& topology) {
    validate(topology);
    std::vector<ProcessSet> rows(topology.n);
    for (const auto& m : topology.memories)
        for (auto p : m.readers.to_vector()) rows[p] |= m.writers;
    return ReadRelation(std::move(rows));
}

ProcessSet communicate_set(const ReadRelation& relation, ProcessSet p) {
    ProcessSet out;
    for (auto id : p.to_vector()) out |= relation.row(id);
    return out;
}

namespace {

void check_limit(std::size_t n, const EnumerationLimits& limits) {
    if (n == 0) throw TopologyError("relation over zero processes");
    if (n > limits.max_n || n > kMaxProcesses)
        throw EnumerationLimitError("subset enumeration refused for n=" + std::to_string(n) +
                                    " (limit " + std::to_string(limits.max_n) + ")");
}

}  // namespace

std::optional<PartitionWitness> is_f_partitionable(const ReadRelation& relation, std::size_t f,
                                                   const EnumerationLimits& limits) {
    const std::size_t n = relation.size();
    if (f > n) throw std::out_of_range("f=" + std::to_string(f) + " exceeds n=" + std::to_string(n));
    check_limit(n, limits);
    const auto everyone = ProcessSet::all(n);
    const std::size_t k = n - f;
    std::optional<PartitionWitness> found;
    for_each_subset(everyone, k, [&](ProcessSet p) {
        const auto reach = communicate_set(relation, p);
        if (reach.size() > f) return true;
        // n - |N(P)| >= n - f, so a Q of size k exists outside N(P).
        for_each_subset(everyone - reach, k, [&](ProcessSet q) {
            found = PartitionWitness{f, p, q};
            return false;
        });
        return false;
    });
    return found;
}

std::size_t compute_f_opt(const ReadRelation& relation, const EnumerationLimits& limits) {
    const std::size_t n = relation.size();
    check_limit(n, limits);
    // Partitionability is monotone in f and never holds below floor((n-1)/2).
    for (std::size_t f = (n - 1) / 2; f < n; ++f)
        if (is_f_partitionable(relation, f + 1, limits)) return f;
    return n - 1;
}

std::size_t compute_f_maj(const ReadRelation& relation, const EnumerationLimits& limits) {
    const std::size_t n = relation.size();
    check_limit(n, limits);
    const auto everyone = ProcessSet::all(n);
    auto holds = [&](std::size_t f) {
        return for_each_subset(everyone, n - f,
                               [&](ProcessSet p) { return communicate_set(relation, p).size() > n / 2; });
    };
    std::size_t f = 0;
    while (f + 1 < n && holds(f + 1)) ++f;
    return f;
}

RhoSigma compute_rho_sigma(const MixedTopology& topology) {
    RhoSigma out;
    for (const auto& m : topology.memories) {
        out.rho += m.writers.size();
        out.sigma += m.readers.size() * m.writers.size();
    }
    return out;
}

// Uniform m&m ---------------------------------------------------------------------

SharedMemoryGraph square_graph(const SharedMemoryGraph& g) {
    SharedMemoryGraph sq(g.size());
    for (ProcessId u = 0; u < g.size(); ++u) {
        ProcessSet reach = g.neighbors(u);
        for (auto w : g.neighbors(u).to_vector()) reach |= g.neighbors(w);
        reach.erase(u);
        for (auto v : reach.to_vector())
            if (u < v) sq.add_edge(u, v);
    }
    return sq;
}

std::size_t compute_f_g(const SharedMemoryGraph& g, const EnumerationLimits& limits) {
    const std::size_t n = g.size();
    check_limit(n, limits);
    const auto sq = square_graph(g);
    const auto everyone = ProcessSet::all(n);
    auto separable = [&](std::size_t f) {
        const std::size_t k = n - f;
        return !for_each_subset(everyone, k, [&](ProcessSet p) {
            ProcessSet reach = p;
            for (auto u : p.to_vector()) reach |= sq.neighbors(u);
            return (n - reach.size()) < k;
        });
    };
    for (std::size_t f = (n - 1) / 2; f < n; ++f)
        if (separable(f + 1)) return f;
    return n - 1;
}

std::size_t compute_f_mm(const SharedMemoryGraph& g, const EnumerationLimits& limits) {
    const std::size_t n = g.size();
    check_limit(n, limits);
    const auto everyone = ProcessSet::all(n);
    auto holds = [&](std::size_t f) {
        return for_each_subset(everyone, n - f, [&](ProcessSet p) {
            ProcessSet represented = p;
            for (auto u : p.to_vector()) represented |= g.neighbors(u);
            return represented.size() > n / 2;
        });
    };
    std::size_t f = 0;
    while (f + 1 < n && holds(f + 1)) ++f;
    return f;
}

std::optional<SmCut> find_sm_cut(const SharedMemoryGraph& g, std::size_t f, const EnumerationLimits& limits) {
    const auto witness = is_f_partitionable(read_relation(from_uniform_mm(g)), f, limits);
    if (!witness) return std::nullopt;
    const std::size_t n = g.size();
    SmCut cut;
    cut.s = witness->p;
    cut.t = witness->q;
    ProcessSet near_s;
    ProcessSet near_t;
    for (auto v : cut.s.to_vector()) near_s |= g.neighbors(v);
    for (auto v : cut.t.to_vector()) near_t |= g.neighbors(v);
    const ProcessSet b1_core = near_s - cut.s;
    cut.b2 = near_t - cut.t;
    cut.b1 = b1_core | (ProcessSet::all(n) - (cut.s | cut.t | cut.b2));
    return cut;
}

bool verify_sm_cut(const SharedMemoryGraph& g, const SmCut& cut) {
    const std::size_t n = g.size();
    const ProcessSet parts[] = {cut.b1, cut.b2, cut.s, cut.t};
    ProcessSet seen;
    for (auto part : parts) {
        if (part.intersects(seen)) return false;
        seen |= part;
    }
    if (seen != ProcessSet::all(n)) return false;
    for (ProcessId v = 0; v < n; ++v) {
        const auto adj = g.neighbors(v);
        if (cut.s.contains(v) && adj.intersects(cut.t)) return false;
        if (cut.b1.contains(v) && adj.intersects(cut.t)) return false;
        if (cut.b2.contains(v) && adj.intersects(cut.s)) return false;
    }
    return true;
}

// Cluster model -------------------------------------------------------------------

std::size_t compute_f_cluster(const Clustering& clustering, std::size_t n) {
    clustering.validate(n);
    // achievable[s]: some union of whole clusters has exactly s processes.
    std::vector<bool> achievable(n + 1, false);
    achievable[0] = true;
    for (auto c : clustering.clusters) {
        const auto sz = c.size();
        for (std::size_t s = n; s + 1 > sz; --s)
            if (achievable[s - sz]) achievable[s] = true;
    }
    for (std::size_t f = 1; f <= n; ++f) {
        for (std::size_t s = n - f; s <= f; ++s)
            if (achievable[s]) return f - 1;
    }
    return n - 1;
}

// Report --------------------------------------------------------------------------

ResilienceReport analyze(const MixedTopology& topology, const EnumerationLimits& limits) {
    const auto normalized = normalize(topology);
    const auto relation = read_relation(normalized);
    ResilienceReport r;
    r.n = normalized.n;
    r.f_opt = compute_f_opt(relation, limits);
    r.f_maj = compute_f_maj(relation, limits);
    const auto rs = compute_rho_sigma(normalized);
    r.rho = rs.rho;
    r.sigma = rs.sigma;
    if (const auto* mm = std::get_if<origin::UniformMM>(&normalized.origin)) {
        r.model_params = UniformMMParams{compute_f_g(mm->graph, limits), compute_f_mm(mm->graph, limits)};
    } else if (const auto* cl = std::get_if<origin::Cluster>(&normalized.origin)) {
        r.model_params = ClusterParams{compute_f_cluster(cl->clustering, normalized.n)};
    }
    if (r.f_opt + 1 <= r.n) r.witness = is_f_partitionable(relation, r.f_opt + 1, limits);
    return r;
}

}  // namespace mixsim
