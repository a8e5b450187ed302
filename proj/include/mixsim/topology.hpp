#pragma once

// Mixed shared-memory / message-passing topologies and their resilience
// parameters.
//
// A topology is a set of n processes plus a list of memories, each with a
// reader set and a writer set. Process p "reads" q (p -> q) when some memory is
// readable by p and writable by q. Everything else here is derived from that
// relation: the communicate set N(P), f-partitionability, f_opt, f_maj, and
// the model-specific parameters of the uniform m&m and cluster models.
//
// The subset-enumerating calculators are exponential in n. They refuse inputs
// above EnumerationLimits::max_n instead of approximating.

#include "mixsim/process_set.hpp"

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace mixsim {

class TopologyError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class EnumerationLimitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct EnumerationLimits {
    std::size_t max_n = 20;
};

struct MemorySpec {
    ProcessSet readers;
    ProcessSet writers;

    friend bool operator==(const MemorySpec&, const MemorySpec&) = default;
};

/// Undirected graph without self-loops; adjacency kept as one bitmask per vertex.
class SharedMemoryGraph {
public:
    SharedMemoryGraph() = default;
    explicit SharedMemoryGraph(std::size_t n);
    SharedMemoryGraph(std::size_t n, const std::vector<std::pair<ProcessId, ProcessId>>& edges);

    std::size_t size() const { return adjacency_.size(); }
    void add_edge(ProcessId u, ProcessId v);
    bool has_edge(ProcessId u, ProcessId v) const;
    ProcessSet neighbors(ProcessId v) const { return adjacency_.at(v); }
    // v together with its neighbours.
    ProcessSet closed_neighborhood(ProcessId v) const { return adjacency_.at(v) | ProcessSet::single(v); }
    std::size_t edge_count() const;
    // Sorted (u < v) edge list.
    std::vector<std::pair<ProcessId, ProcessId>> edges() const;

    friend bool operator==(const SharedMemoryGraph&, const SharedMemoryGraph&) = default;

private:
    std::vector<ProcessSet> adjacency_;
};

struct Clustering {
    std::vector<ProcessSet> clusters;

    // Throws TopologyError unless the clusters are nonempty, disjoint, and cover [0, n).
    void validate(std::size_t n) const;
    // Cluster containing p.
    ProcessSet cluster_of(ProcessId p) const;

    friend bool operator==(const Clustering&, const Clustering&) = default;
};

namespace origin {
struct General {
    friend bool operator==(const General&, const General&) = default;
};
struct UniformMM {
    SharedMemoryGraph graph;
    friend bool operator==(const UniformMM&, const UniformMM&) = default;
};
struct GeneralMM {
    std::vector<ProcessSet> domain;
    friend bool operator==(const GeneralMM&, const GeneralMM&) = default;
};
struct Cluster {
    Clustering clustering;
    friend bool operator==(const Cluster&, const Cluster&) = default;
};
struct PureMP {
    friend bool operator==(const PureMP&, const PureMP&) = default;
};
}  // namespace origin

using TopologyOrigin = std::variant<origin::General, origin::UniformMM, origin::GeneralMM, origin::Cluster, origin::PureMP>;

std::string model_name(const TopologyOrigin& o);

struct MixedTopology {
    std::size_t n = 0;
    std::vector<MemorySpec> memories;
    TopologyOrigin origin = origin::General{};

    // R_p and W_p as memory indices.
    std::vector<std::size_t> readable_by(ProcessId p) const;
    std::vector<std::size_t> writable_by(ProcessId p) const;
    bool is_normalized() const;

    friend bool operator==(const MixedTopology&, const MixedTopology&) = default;
};

/// reads(p, q) holds iff some memory is readable by p and writable by q.
class ReadRelation {
public:
    ReadRelation() = default;
    explicit ReadRelation(std::vector<ProcessSet> rows) : rows_(std::move(rows)) {}

    std::size_t size() const { return rows_.size(); }
    bool reads(ProcessId p, ProcessId q) const { return rows_.at(p).contains(q); }
    // Everyone p can read from.
    ProcessSet row(ProcessId p) const { return rows_.at(p); }
    bool both_ways(ProcessId p, ProcessId q) const { return reads(p, q) && reads(q, p); }
    bool is_reflexive() const;

    friend bool operator==(const ReadRelation&, const ReadRelation&) = default;

private:
    std::vector<ProcessSet> rows_;
};

/// Two disjoint sets of size n-f where P cannot read anything Q writes.
struct PartitionWitness {
    std::size_t f = 0;
    ProcessSet p;
    ProcessSet q;
};

struct SmCut {
    ProcessSet b1;
    ProcessSet b2;
    ProcessSet s;
    ProcessSet t;
};

struct UniformMMParams {
    std::size_t f_g = 0;
    std::size_t f_mm = 0;
};

struct ClusterParams {
    std::size_t f_cluster = 0;
};

struct ResilienceReport {
    std::size_t n = 0;
    std::size_t f_opt = 0;
    std::size_t f_maj = 0;
    std::size_t rho = 0;
    std::size_t sigma = 0;
    std::variant<std::monostate, UniformMMParams, ClusterParams> model_params;
    // Witness that the system is (f_opt + 1)-partitionable; absent only when f_opt + 1 > n.
    std::optional<PartitionWitness> witness;
};

// Construction ----------------------------------------------------------------

/// Adds a private read/write memory for every process lacking one. Idempotent.
MixedTopology normalize(MixedTopology topology);

MixedTopology pure_mp(std::size_t n);
MixedTopology from_uniform_mm(const SharedMemoryGraph& g);
MixedTopology from_general_mm(std::size_t n, const std::vector<ProcessSet>& domain);
MixedTopology from_clusters(const Clustering& clustering);

// Throws TopologyError on out-of-range ids or a memory with no readers and no writers.
void validate(const MixedTopology& topology);

// Relation and derived parameters ------------------------------------------------

ReadRelation read_relation(const MixedTopology& topology);

/// N(P) = {q : exists p in P with p -> q}.
ProcessSet communicate_set(const ReadRelation& relation, ProcessSet p);

/// Returns a witness iff some (n-f)-set P has |N(P)| <= f. The lexicographically
/// smallest such P is chosen, then the smallest Q outside N(P).
std::optional<PartitionWitness> is_f_partitionable(const ReadRelation& relation, std::size_t f,
                                                   const EnumerationLimits& limits = {});

std::size_t compute_f_opt(const ReadRelation& relation, const EnumerationLimits& limits = {});
std::size_t compute_f_maj(const ReadRelation& relation, const EnumerationLimits& limits = {});

struct RhoSigma {
    std::size_t rho = 0;
    std::size_t sigma = 0;
};
RhoSigma compute_rho_sigma(const MixedTopology& topology);

// Uniform m&m model --------------------------------------------------------------

SharedMemoryGraph square_graph(const SharedMemoryGraph& g);

/// f_G evaluated over G^2 directly, without building memories.
std::size_t compute_f_g(const SharedMemoryGraph& g, const EnumerationLimits& limits = {});

/// Largest f such that every (n-f)-set together with its G-neighbours covers a strict majority.
std::size_t compute_f_mm(const SharedMemoryGraph& g, const EnumerationLimits& limits = {});

std::optional<SmCut> find_sm_cut(const SharedMemoryGraph& g, std::size_t f, const EnumerationLimits& limits = {});
bool verify_sm_cut(const SharedMemoryGraph& g, const SmCut& cut);

// Cluster model ------------------------------------------------------------------

/// f_cluster from cluster sizes alone: f is bad iff some union of whole clusters
/// has total size in [n-f, f].
std::size_t compute_f_cluster(const Clustering& clustering, std::size_t n);

// Whole report -------------------------------------------------------------------

ResilienceReport analyze(const MixedTopology& topology, const EnumerationLimits& limits = {});

}  // namespace mixsim
