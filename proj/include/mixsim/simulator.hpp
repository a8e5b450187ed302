#pragma once

// Deterministic discrete-event simulator. One tick is one step of one
// process: an invocation, a message delivery, a single shared-memory access,
// a coin flip, or a crash. Channels are reliable and FIFO per ordered pair;
// only the head of a channel is ever deliverable.
//
// Automata return actions in order. Sends before the first memory access or
// flip happen in the current step; each later memory access or flip becomes
// its own step, and the sends following it ride along with that step. While
// a process has such local steps queued it takes no invocation and receives
// no message.

#include "mixsim/batch_node.hpp"
#include "mixsim/protocol.hpp"
#include "mixsim/register_node.hpp"
#include "mixsim/topology.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace mixsim {

using Tick = std::uint64_t;
inline constexpr Tick kNever = std::numeric_limits<Tick>::max();

class AccessViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

namespace adversary {
/// Uniform over enabled events, driven by the run seed.
struct Random {};
/// Cycles over processes; within a process, cycles over its enabled events.
struct RoundRobin {};
/// Holds back deliveries between the two groups before release_tick, as long
/// as anything else can happen. Held messages are delayed, never dropped.
struct Partition {
    ProcessSet group_a;
    ProcessSet group_b;
    Tick release_tick = kNever;
};
/// Choice i picks enabled event (choices[i] mod count); random once exhausted.
struct Scripted {
    std::vector<std::size_t> choices;
};
}  // namespace adversary

using AdversaryPolicy = std::variant<adversary::Random, adversary::RoundRobin, adversary::Partition, adversary::Scripted>;

struct CrashPoint {
    ProcessId process = 0;
    Tick tick = 0;
};

struct WorkItem {
    ProcessId process = 0;
    OpRequest request;
    /// Index of another item that must respond before this one is invoked.
    std::optional<std::size_t> after;
};

enum class ProtocolKind : std::uint8_t { Register, Batched };

struct SimConfig {
    MixedTopology topology;
    std::size_t f = 0;
    std::uint64_t seed = 1;
    AdversaryPolicy adversary = adversary::Random{};
    std::vector<CrashPoint> crash_plan;
    std::vector<WorkItem> workload;
    std::uint64_t step_budget = 1'000'000;

    ProtocolKind protocol = ProtocolKind::Register;
    ProcessId writer = 0;
    Value initial = 0;
    CoinThreshold c;
    bool cluster_quorum = false;
    bool immediate_self_delivery = false;
    bool record_trace = true;
};

struct TraceRecord {
    Tick tick = 0;
    ProcessId process = 0;
    std::string action;
    nlohmann::ordered_json detail;
};
using Trace = std::vector<TraceRecord>;

struct OpRecord {
    OpId id = 0;
    ProcessId process = 0;
    OpKind kind = OpKind::Write;
    InstanceId instance = 0;
    std::optional<OpId> parent;
    Tick invoke_tick = 0;
    std::optional<Tick> response_tick;
    Value arg = 0;
    SeqNum write_seq = 0;
    std::optional<OpResult> result;

    bool complete() const { return response_tick.has_value(); }
};

struct History {
    std::vector<OpRecord> ops;  // in invocation order
    std::vector<Value> inputs;  // consensus inputs, one per Propose invocation

    const OpRecord* find(OpId id) const;
};

struct ExchangeRecord {
    MsgType request = MsgType::W;
    std::size_t responders = 0;
    std::size_t represented = 0;
};

struct OpMetrics {
    std::size_t requests_sent = 0;
    std::size_t acks_sent = 0;
    std::size_t round_trips = 0;
    std::size_t sm_reads = 0;
    std::size_t sm_writes = 0;
    std::size_t flips = 0;
    std::vector<ExchangeRecord> exchanges;

    std::size_t messages_sent() const { return requests_sent + acks_sent; }
};

struct Metrics {
    std::map<OpId, OpMetrics> per_op;
    /// Registers per instance: one per (memory, writer) pair, a batched vector counting once.
    std::size_t registers_allocated = 0;
    std::size_t instances_used = 0;
    std::size_t messages_sent = 0;
    std::size_t sm_reads = 0;
    std::size_t sm_writes = 0;
    std::size_t flips = 0;
};

enum class RunStatus : std::uint8_t {
    Completed,        // every op of a live process responded and nothing is left to do
    BudgetExhausted,  // step budget ran out
    Stalled,          // nothing enabled, yet some live process has an op outstanding
};
const char* to_string(RunStatus s);

struct SimResult {
    RunStatus status = RunStatus::Completed;
    Tick ticks = 0;
    Trace trace;
    History history;
    Metrics metrics;
    ProcessSet crashed;
    /// Top-level op started for each workload item, if it was invoked.
    std::vector<std::optional<OpId>> item_ops;
    std::vector<ProcessId> item_process;

    /// Every item of a process that never crashed has responded.
    bool live_ops_complete() const;
};

SimResult run(const SimConfig& config);

// Export --------------------------------------------------------------------------------

void write_trace_jsonl(std::ostream& out, const Trace& trace);
std::string trace_jsonl(const Trace& trace);
nlohmann::ordered_json metrics_to_json(const Metrics& metrics);
nlohmann::ordered_json op_to_json(const OpRecord& op);

// Scenarios ------------------------------------------------------------------------------

/// The three-execution construction for an f-partitionable system: the
/// writer sits in Q, the reader in P (P cannot read anything Q writes).
/// Everyone outside P and Q crashes at tick 0, cross-group messages are held
/// back for the whole run, and the read starts once the write has responded.
struct PartitionScenario {
    SimConfig config;
    PartitionWitness witness;
    ProcessId writer = 0;
    ProcessId reader = 0;
    Value written = 1;
};

PartitionScenario partition_scenario(const MixedTopology& topology, std::size_t f, std::uint64_t seed = 1);

struct ComplexityReport {
    bool ok = true;
    std::vector<std::string> problems;
    std::size_t writes = 0;
    std::size_t reads = 0;
};

/// Checks a failure-free register run against the exact message and round-trip
/// counts, the shared-access bounds and the register count.
ComplexityReport measure_complexities(const History& history, const Metrics& metrics, const MixedTopology& topology);

// Batch execution ---------------------------------------------------------------------------

/// Runs fn(0..count-1) on worker threads; fn must only touch its own slot.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn, unsigned threads = 0);

}  // namespace mixsim
