#pragma once

// Atomic SWMR register over mixed memory and messages.
//
// Every process runs one RegisterNode. The designated writer broadcasts
// <W, seq, v>; each process stores <seq, v> into every register it can write
// and acks. A reader broadcasts <R>, and each process answers with the
// maximum <seq, v> among all registers it can read; the reader picks the
// maximum of n-f answers (or of n-f represented processes under the cluster
// rule), writes it back with <WB>, and returns it.

#include "mixsim/protocol.hpp"

#include <optional>

namespace mixsim {

struct RegisterConfig {
    NodeLayout layout;
    ProcessId writer = 0;
    Value initial = 0;
};

class RegisterNode {
public:
    explicit RegisterNode(RegisterConfig config);

    Actions on_event(const Event& event);

    // Individual transitions, exposed for tests.
    Actions invoke_write(Value v);
    Actions invoke_read();
    Actions handle_write_message(const Message& m);
    Actions handle_read_message(const Message& m);
    Actions handle_ack(const Message& m);
    Actions handle_read_done(const ReadDoneEvent& done);

    SeqNum w_sqno() const { return w_sqno_; }
    SeqNum r_sqno() const { return r_sqno_; }
    SeqNum last_sqno() const { return last_sqno_; }
    bool busy() const { return phase_ != Phase::Idle; }
    const std::optional<Exchange>& pending() const { return exchange_; }
    const RegisterConfig& config() const { return config_; }

private:
    enum class Phase : std::uint8_t { Idle, Writing, ReadCollect, ReadWriteBack };

    Actions start_exchange(MsgType type, SeqNum seq, TaggedValue payload);

    RegisterConfig config_;
    SeqNum w_sqno_ = 0;
    SeqNum r_sqno_ = 0;
    SeqNum last_sqno_ = 0;
    std::uint64_t exchange_counter_ = 0;
    std::uint32_t op_counter_ = 0;

    Phase phase_ = Phase::Idle;
    OpId current_op_ = 0;
    std::optional<Exchange> exchange_;
    TaggedValue chosen_;

    // Reply owed for an R message while the cell reads are in flight.
    std::optional<Message> pending_reply_;
};

}  // namespace mixsim
