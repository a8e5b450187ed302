#pragma once

// Batched registers: every process keeps, in each memory it can write, one
// vector register with a slot per source process. On top of the write/collect
// primitives sit client programs:
//
//   SdcProgram        collect until two consecutive vectors carry the same
//                     sequence numbers
//   CoinProgram       weak shared coin: flip, publish the cumulative sum,
//                     SDC, stop once |sum| >= c*n
//   ConsensusProgram  binary consensus: adopt-commit from two write/collect
//                     phases per round, with the round's shared coin as the
//                     fallback
//
// Programs are plain values. The node asks a program for its next step and
// feeds back the outcome once the node has carried it out.

#include "mixsim/protocol.hpp"

#include <map>
#include <optional>
#include <variant>

namespace mixsim {

/// c as an exact rational num/den (den > 0, c > 1).
struct CoinThreshold {
    std::int64_t num = 2;
    std::int64_t den = 1;

    bool valid() const { return den > 0 && num > den; }
    double as_double() const { return static_cast<double>(num) / static_cast<double>(den); }
    /// sum >= c*n
    bool reached_up(Value sum, std::size_t n) const;
    /// sum <= -c*n
    bool reached_down(Value sum, std::size_t n) const;
};

/// Parses "p/q" or a decimal such as "2.5".
CoinThreshold parse_threshold(const std::string& text);

namespace step {
struct Write {
    InstanceId instance = 0;
    Value value = 0;
};
struct Collect {
    InstanceId instance = 0;
};
struct Flip {};
struct Done {
    OpResult result;
};
}  // namespace step
using ProgramStep = std::variant<step::Write, step::Collect, step::Flip, step::Done>;

struct WriteDone {};
using StepOutcome = std::variant<WriteDone, VersionedVector, int>;

class SdcProgram {
public:
    explicit SdcProgram(InstanceId instance) : instance_(instance) {}

    ProgramStep start();
    ProgramStep resume(const StepOutcome& outcome);
    std::size_t collects() const { return collects_; }

private:
    InstanceId instance_;
    std::optional<VersionedVector> previous_;
    std::size_t collects_ = 0;
};

class CoinProgram {
public:
    CoinProgram(InstanceId instance, CoinThreshold c, std::size_t n);

    ProgramStep start();
    ProgramStep resume(const StepOutcome& outcome);

    Value counter() const { return counter_; }
    std::size_t flips() const { return flips_; }

private:
    enum class Stage : std::uint8_t { Flipping, Writing, Collecting };

    InstanceId instance_;
    CoinThreshold c_;
    std::size_t n_;
    Value counter_ = 0;
    std::size_t flips_ = 0;
    Stage stage_ = Stage::Flipping;
    SdcProgram sdc_;
};

class ConsensusProgram {
public:
    ConsensusProgram(Value input, CoinThreshold c, std::size_t n);

    ProgramStep start();
    ProgramStep resume(const StepOutcome& outcome);

    std::size_t round() const { return round_; }
    Value preference() const { return preference_; }
    std::optional<Value> decided() const { return decided_; }
    std::size_t coin_flips() const { return coin_flips_; }

    // Register instances used by round r (r >= 1).
    static InstanceId propose_instance(std::size_t r) { return static_cast<InstanceId>(3 * r - 2); }
    static InstanceId commit_instance(std::size_t r) { return static_cast<InstanceId>(3 * r - 1); }
    static InstanceId coin_instance(std::size_t r) { return static_cast<InstanceId>(3 * r); }

private:
    enum class Stage : std::uint8_t { Propose, ProposeCollect, Commit, CommitCollect, Coin };

    ProgramStep next_round(Value preference);

    CoinThreshold c_;
    std::size_t n_;
    std::size_t round_ = 1;
    Value preference_;
    bool conflict_ = false;
    std::optional<Value> decided_;
    std::size_t coin_flips_ = 0;
    Stage stage_ = Stage::Propose;
    std::optional<CoinProgram> coin_;
};

/// A top-level write or collect: one step, then done.
struct SingleStepProgram {
    ProgramStep step;
};

using Program = std::variant<SingleStepProgram, SdcProgram, CoinProgram, ConsensusProgram>;

struct BatchConfig {
    NodeLayout layout;
    Value initial = 0;
    CoinThreshold c;
};

class BatchNode {
public:
    explicit BatchNode(BatchConfig config);

    Actions on_event(const Event& event);

    Actions invoke(const OpRequest& request);
    Actions handle_write_message(const Message& m);
    Actions handle_writeback_message(const Message& m);
    Actions handle_read_message(const Message& m);
    Actions handle_ack(const Message& m);
    Actions handle_read_done(const ReadDoneEvent& done);
    Actions handle_flip(int outcome);

    bool busy() const { return program_.has_value(); }
    SeqNum last_sqno(InstanceId instance, ProcessId source) const;
    const std::optional<Program>& program() const { return program_; }
    const BatchConfig& config() const { return config_; }

private:
    struct InstanceState {
        SeqNum w_sqno = 0;
        SeqNum r_sqno = 0;
        std::vector<SeqNum> last_sqno;
    };
    enum class Primitive : std::uint8_t { None, Write, CollectRead, CollectWriteBack, Flip };

    InstanceState& instance(InstanceId id);
    OpId next_op() { return make_op_id(config_.layout.self, op_counter_++); }
    void run(ProgramStep step, Actions& out);
    void primitive_done(const StepOutcome& outcome, Actions& out);
    Actions start_exchange(MsgType type, InstanceId inst, SeqNum seq, VersionedVector payload_vec, TaggedValue payload);
    // Slot-wise dedup: keeps entries newer than last_sqno[i], records them, and
    // emits one register write per writable memory.
    void write_slots(InstanceId inst, const std::vector<std::pair<std::size_t, TaggedValue>>& candidates, OpId op,
                     Actions& out);

    BatchConfig config_;
    std::map<InstanceId, InstanceState> instances_;
    std::uint64_t exchange_counter_ = 0;
    std::uint32_t op_counter_ = 0;

    std::optional<Program> program_;
    OpId top_op_ = 0;

    Primitive primitive_ = Primitive::None;
    OpId primitive_op_ = 0;
    std::optional<Exchange> exchange_;
    VersionedVector merged_;

    struct PendingReply {
        Message ack;
    };
    std::optional<PendingReply> pending_reply_;
};

}  // namespace mixsim
