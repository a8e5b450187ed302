#include "mixsim/register_node.hpp"

#include <algorithm>

namespace mixsim {

RegisterNode::RegisterNode(RegisterConfig config) : config_(std::move(config)) {
    if (config_.writer >= config_.layout.n) throw std::invalid_argument("writer id out of range");
}

Actions RegisterNode::on_event(const Event& event) {
    return std::visit(
        [&](const auto& e) -> Actions {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, InvokeEvent>) {
                if (const auto* w = std::get_if<request::Write>(&e.request)) return invoke_write(w->value);
                if (std::holds_alternative<request::Read>(e.request)) return invoke_read();
                throw ProtocolMisuse("register node only supports write and read");
            } else if constexpr (std::is_same_v<T, DeliverEvent>) {
                const auto& m = e.message;
                switch (m.type) {
                    case MsgType::W:
                    case MsgType::WB: return handle_write_message(m);
                    case MsgType::R: return handle_read_message(m);
                    default: return handle_ack(m);
                }
            } else if constexpr (std::is_same_v<T, ReadDoneEvent>) {
                return handle_read_done(e);
            } else {
                throw ProtocolMisuse("register node never flips coins");
            }
        },
        event);
}

Actions RegisterNode::start_exchange(MsgType type, SeqNum seq, TaggedValue payload) {
    const auto id = ++exchange_counter_;
    exchange_.emplace(type, 0, id, seq, config_.layout.quorum);
    Message m;
    m.type = type;
    m.exchange = id;
    m.seq = seq;
    m.value = payload;
    m.op = current_op_;
    Actions out;
    broadcast(out, config_.layout, m);
    return out;
}

Actions RegisterNode::invoke_write(Value v) {
    if (config_.layout.self != config_.writer) throw ProtocolMisuse("only the designated writer may write");
    if (busy()) throw ProtocolMisuse("operation invoked while another is pending");
    ++w_sqno_;
    phase_ = Phase::Writing;
    current_op_ = make_op_id(config_.layout.self, op_counter_++);
    Actions out{OpStartedAction{current_op_, OpKind::Write, 0, std::nullopt, v, w_sqno_}};
    auto sends = start_exchange(MsgType::W, w_sqno_, {w_sqno_, v});
    out.insert(out.end(), sends.begin(), sends.end());
    return out;
}

Actions RegisterNode::invoke_read() {
    if (busy()) throw ProtocolMisuse("operation invoked while another is pending");
    ++r_sqno_;
    phase_ = Phase::ReadCollect;
    current_op_ = make_op_id(config_.layout.self, op_counter_++);
    chosen_ = {};
    Actions out{OpStartedAction{current_op_, OpKind::Read, 0, std::nullopt, 0, 0}};
    auto sends = start_exchange(MsgType::R, r_sqno_, {});
    out.insert(out.end(), sends.begin(), sends.end());
    return out;
}

Actions RegisterNode::handle_write_message(const Message& m) {
    Actions out;
    if (m.seq > last_sqno_) {
        last_sqno_ = m.seq;
        for (auto mu : config_.layout.writable)
            out.emplace_back(MemWriteAction{{0, mu, config_.layout.self}, {{0, {m.seq, m.value.val}}}, m.op});
    }
    Message ack;
    ack.from = config_.layout.self;
    ack.to = m.from;
    ack.type = ack_of(m.type);
    ack.exchange = m.exchange;
    ack.seq = m.seq;
    ack.op = m.op;
    out.emplace_back(SendAction{ack});
    return out;
}

Actions RegisterNode::handle_read_message(const Message& m) {
    if (pending_reply_) throw ProtocolMisuse("read request handled while another is in progress");
    Message ack;
    ack.from = config_.layout.self;
    ack.to = m.from;
    ack.type = MsgType::AckR;
    ack.exchange = m.exchange;
    ack.seq = m.seq;
    ack.op = m.op;
    MemReadAction read{{}, m.op};
    for (auto [mu, owner] : config_.layout.readable) read.cells.push_back({0, mu, owner});
    if (read.cells.empty()) {
        ack.value = {0, config_.initial};
        return {SendAction{ack}};
    }
    pending_reply_ = ack;
    return {read};
}

Actions RegisterNode::handle_read_done(const ReadDoneEvent& done) {
    if (!pending_reply_) throw ProtocolMisuse("unexpected read completion");
    TaggedValue best{0, config_.initial};
    for (const auto& cell : done.contents)
        if (!cell.empty() && cell[0].seq > best.seq) best = cell[0];
    auto ack = *pending_reply_;
    pending_reply_.reset();
    ack.value = best;
    return {SendAction{ack}};
}

Actions RegisterNode::handle_ack(const Message& m) {
    if (!exchange_ || !exchange_->on_ack(m)) return {};
    const auto& ex = *exchange_;
    Actions out{ExchangeDoneAction{current_op_, ex.request(), ex.responses().size(), ex.represented().size()}};
    switch (phase_) {
        case Phase::Writing: {
            phase_ = Phase::Idle;
            exchange_.reset();
            out.emplace_back(OpFinishedAction{current_op_, {}});
            break;
        }
        case Phase::ReadCollect: {
            TaggedValue best{0, config_.initial};
            for (const auto& [from, ack] : ex.responses()) best = std::max(best, ack.value);
            chosen_ = best;
            phase_ = Phase::ReadWriteBack;
            auto sends = start_exchange(MsgType::WB, best.seq, best);
            out.insert(out.end(), sends.begin(), sends.end());
            break;
        }
        case Phase::ReadWriteBack: {
            phase_ = Phase::Idle;
            exchange_.reset();
            OpResult result;
            result.tagged = chosen_;
            out.emplace_back(OpFinishedAction{current_op_, result});
            break;
        }
        case Phase::Idle: break;
    }
    return out;
}

}  // namespace mixsim
