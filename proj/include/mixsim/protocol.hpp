#pragma once

// Vocabulary shared by every protocol automaton and by the simulator: tagged
// values, messages, the request/ack exchange, and the event/action interface.
//
// Automata never touch memory or the network themselves. They consume one
// Event at a time and return the Actions the simulator must carry out. Memory
// reads and coin flips are separate process steps; their results come back as
// ReadDone / FlipDone events.

#include "mixsim/process_set.hpp"
#include "mixsim/topology.hpp"

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace mixsim {

using SeqNum = std::uint64_t;
using Value = std::int64_t;
using InstanceId = std::uint32_t;
using MemoryId = std::uint32_t;

/// Op ids are (process << 32) | local counter, so they are unique without coordination.
using OpId = std::uint64_t;
inline constexpr OpId make_op_id(ProcessId p, std::uint32_t local) { return (OpId{p} << 32) | local; }

class ProtocolMisuse : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

struct TaggedValue {
    SeqNum seq = 0;
    Value val = 0;

    friend auto operator<=>(const TaggedValue&, const TaggedValue&) = default;
};

/// One entry per process.
using VersionedVector = std::vector<TaggedValue>;

/// Every component's sequence number is <= the other's.
bool precedes(const VersionedVector& a, const VersionedVector& b);
bool same_sequence_numbers(const VersionedVector& a, const VersionedVector& b);
VersionedVector componentwise_max(const VersionedVector& a, const VersionedVector& b);
Value vector_sum(const VersionedVector& v);

enum class MsgType : std::uint8_t { W, AckW, R, AckR, WB, AckWB };

const char* to_string(MsgType t);
constexpr bool is_request(MsgType t) { return t == MsgType::W || t == MsgType::R || t == MsgType::WB; }
constexpr MsgType ack_of(MsgType t) {
    switch (t) {
        case MsgType::W: return MsgType::AckW;
        case MsgType::R: return MsgType::AckR;
        default: return MsgType::AckWB;
    }
}

struct Message {
    ProcessId from = 0;
    ProcessId to = 0;
    MsgType type = MsgType::W;
    InstanceId instance = 0;
    // Initiator-local exchange number, echoed by acks so stale acks can be told apart.
    std::uint64_t exchange = 0;
    SeqNum seq = 0;
    TaggedValue value;       // single-register payload
    VersionedVector vector;  // batched payload
    OpId op = 0;             // operation the exchange belongs to (metrics only)

    friend bool operator==(const Message&, const Message&) = default;
};

// Exchange ------------------------------------------------------------------------

struct CountAtLeast {
    std::size_t needed = 0;
};
struct RepresentedAtLeast {
    std::size_t needed = 0;
    Clustering clustering;
};
using QuorumRule = std::variant<CountAtLeast, RepresentedAtLeast>;

/// n-f responders, or n-f represented processes when a clustering is given.
QuorumRule quorum_for(const MixedTopology& topology, std::size_t f, bool use_clusters);

/// A broadcast request waiting for a quorum of acks. Acks are keyed by sender,
/// so duplicates make no progress; acks for another exchange are ignored.
class Exchange {
public:
    Exchange(MsgType request, InstanceId instance, std::uint64_t id, SeqNum seq, QuorumRule rule);

    bool matches(const Message& ack) const;
    /// Records the ack; returns true when this ack completes the exchange.
    bool on_ack(const Message& ack);
    bool complete() const { return complete_; }

    MsgType request() const { return request_; }
    InstanceId instance() const { return instance_; }
    std::uint64_t id() const { return id_; }
    SeqNum seq() const { return seq_; }
    const std::map<ProcessId, Message>& responses() const { return responses_; }
    ProcessSet represented() const { return represented_; }

private:
    MsgType request_;
    InstanceId instance_;
    std::uint64_t id_;
    SeqNum seq_;
    QuorumRule rule_;
    std::map<ProcessId, Message> responses_;
    ProcessSet represented_;
    bool complete_ = false;
};

// Memory layout -------------------------------------------------------------------

/// Register R_mu[owner] of one register instance.
struct CellKey {
    InstanceId instance = 0;
    MemoryId memory = 0;
    ProcessId owner = 0;

    friend auto operator<=>(const CellKey&, const CellKey&) = default;
};

/// What one process may touch, precomputed from the topology.
struct NodeLayout {
    std::size_t n = 0;
    ProcessId self = 0;
    std::vector<MemoryId> writable;                          // W_p
    std::vector<std::pair<MemoryId, ProcessId>> readable;    // (mu, owner) for mu in R_p, owner in W_mu
    QuorumRule quorum = CountAtLeast{};
};

NodeLayout make_layout(const MixedTopology& topology, ProcessId self, const QuorumRule& quorum);

// Operations and history --------------------------------------------------------------

enum class OpKind : std::uint8_t { Write, Read, BatchWrite, Collect, Sdc, Coin, Propose };
const char* to_string(OpKind k);

namespace request {
struct Write {
    Value value = 0;
};
struct Read {};
struct BatchWrite {
    Value value = 0;
};
struct Collect {};
struct Sdc {};
struct Coin {};
struct Propose {
    Value input = 0;
};
}  // namespace request

using OpRequest = std::variant<request::Write, request::Read, request::BatchWrite, request::Collect, request::Sdc,
                               request::Coin, request::Propose>;

struct OpResult {
    std::optional<TaggedValue> tagged;    // Read
    VersionedVector vector;               // Collect, Sdc
    std::optional<Value> value;           // Coin (+1/-1), Propose (decision)
};

// Events --------------------------------------------------------------------------

struct InvokeEvent {
    OpRequest request;
};
struct DeliverEvent {
    Message message;
};
struct ReadDoneEvent {
    std::vector<VersionedVector> contents;  // one per requested cell, same order
};
struct FlipDoneEvent {
    int outcome = 1;  // +1 or -1
};
using Event = std::variant<InvokeEvent, DeliverEvent, ReadDoneEvent, FlipDoneEvent>;

// Actions -------------------------------------------------------------------------

struct SendAction {
    Message message;
};
/// One atomic write of a register; slot-wise updates for batched registers.
struct MemWriteAction {
    CellKey cell;
    std::vector<std::pair<std::size_t, TaggedValue>> updates;
    OpId op = 0;
};
/// Reads each cell as its own atomic step, then reports a ReadDoneEvent.
struct MemReadAction {
    std::vector<CellKey> cells;
    OpId op = 0;
};
struct FlipAction {
    OpId op = 0;
};
struct OpStartedAction {
    OpId op = 0;
    OpKind kind = OpKind::Write;
    InstanceId instance = 0;
    std::optional<OpId> parent;
    Value arg = 0;
    SeqNum write_seq = 0;  // sequence number assigned to a write
};
struct OpFinishedAction {
    OpId op = 0;
    OpResult result;
};
struct ExchangeDoneAction {
    OpId op = 0;
    MsgType request = MsgType::W;
    std::size_t responders = 0;
    std::size_t represented = 0;
};

using Action = std::variant<SendAction, MemWriteAction, MemReadAction, FlipAction, OpStartedAction, OpFinishedAction,
                            ExchangeDoneAction>;
using Actions = std::vector<Action>;

constexpr bool is_local_step(const Action& a) {
    return std::holds_alternative<MemWriteAction>(a) || std::holds_alternative<MemReadAction>(a) ||
           std::holds_alternative<FlipAction>(a);
}

/// Broadcasts a request to all n processes, self included.
void broadcast(Actions& out, const NodeLayout& layout, Message proto);

}  // namespace mixsim
