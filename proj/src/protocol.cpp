#include "mixsim/protocol.hpp"

#include <algorithm>

namespace mixsim {

bool precedes(const VersionedVector& a, const VersionedVector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("vectors of different length");
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].seq > b[i].seq) return false;
    return true;
}

bool same_sequence_numbers(const VersionedVector& a, const VersionedVector& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].seq != b[i].seq) return false;
    return true;
}

VersionedVector componentwise_max(const VersionedVector& a, const VersionedVector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("vectors of different length");
    VersionedVector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::max(a[i], b[i]);
    return out;
}

Value vector_sum(const VersionedVector& v) {
    Value s = 0;
    for (const auto& e : v) s += e.val;
    return s;
}

const char* to_string(MsgType t) {
    switch (t) {
        case MsgType::W: return "W";
        case MsgType::AckW: return "AckW";
        case MsgType::R: return "R";
        case MsgType::AckR: return "AckR";
        case MsgType::WB: return "WB";
        case MsgType::AckWB: return "AckWB";
    }
    return "?";
}

const char* to_string(OpKind k) {
    switch (k) {
        case OpKind::Write: return "write";
        case OpKind::Read: return "read";
        case OpKind::BatchWrite: return "batch_write";
        case OpKind::Collect: return "collect";
        case OpKind::Sdc: return "sdc";
        case OpKind::Coin: return "coin";
        case OpKind::Propose: return "propose";
    }
    return "?";
}

QuorumRule quorum_for(const MixedTopology& topology, std::size_t f, bool use_clusters) {
    if (f > topology.n) throw std::invalid_argument("f exceeds n");
    // At least one ack, even when f = n.
    const std::size_t needed = std::max<std::size_t>(topology.n - f, 1);
    if (!use_clusters) return CountAtLeast{needed};
    const auto* cl = std::get_if<origin::Cluster>(&topology.origin);
    if (cl == nullptr) throw std::invalid_argument("represented-quorum rule needs a cluster topology");
    return RepresentedAtLeast{needed, cl->clustering};
}

Exchange::Exchange(MsgType request, InstanceId instance, std::uint64_t id, SeqNum seq, QuorumRule rule)
    : request_(request), instance_(instance), id_(id), seq_(seq), rule_(std::move(rule)) {}

bool Exchange::matches(const Message& ack) const {
    return ack.type == ack_of(request_) && ack.instance == instance_ && ack.exchange == id_ && ack.seq == seq_;
}

bool Exchange::on_ack(const Message& ack) {
    if (complete_ || !matches(ack)) return false;
    if (!responses_.emplace(ack.from, ack).second) return false;
    if (const auto* count = std::get_if<CountAtLeast>(&rule_)) {
        complete_ = responses_.size() >= count->needed;
    } else {
        const auto& rep = std::get<RepresentedAtLeast>(rule_);
        represented_ |= rep.clustering.cluster_of(ack.from);
        complete_ = represented_.size() >= rep.needed;
    }
    return complete_;
}

NodeLayout make_layout(const MixedTopology& topology, ProcessId self, const QuorumRule& quorum) {
    if (!topology.is_normalized()) throw std::invalid_argument("layout needs a normalized topology");
    NodeLayout layout;
    layout.n = topology.n;
    layout.self = self;
    layout.quorum = quorum;
    for (auto m : topology.writable_by(self)) layout.writable.push_back(static_cast<MemoryId>(m));
    for (auto m : topology.readable_by(self))
        for (auto owner : topology.memories[m].writers.to_vector())
            layout.readable.emplace_back(static_cast<MemoryId>(m), owner);
    return layout;
}

void broadcast(Actions& out, const NodeLayout& layout, Message proto) {
    proto.from = layout.self;
    for (ProcessId q = 0; q < layout.n; ++q) {
        proto.to = q;
        out.emplace_back(SendAction{proto});
    }
}

}  // namespace mixsim
