#include "mixsim/batch_node.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>

namespace mixsim {

// CoinThreshold -----------------------------------------------------------------------

bool CoinThreshold::reached_up(Value sum, std::size_t n) const {
    return sum * den >= num * static_cast<Value>(n);
}

bool CoinThreshold::reached_down(Value sum, std::size_t n) const {
    return sum * den <= -num * static_cast<Value>(n);
}

CoinThreshold parse_threshold(const std::string& text) {
    auto parse_int = [&](std::string_view s) {
        std::int64_t v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
            throw std::invalid_argument("cannot parse '" + text + "' as a rational");
        return v;
    };
    CoinThreshold c;
    const std::string_view sv(text);
    if (const auto slash = sv.find('/'); slash != std::string_view::npos) {
        c.num = parse_int(sv.substr(0, slash));
        c.den = parse_int(sv.substr(slash + 1));
    } else if (const auto dot = sv.find('.'); dot != std::string_view::npos) {
        const auto frac = sv.substr(dot + 1);
        if (frac.size() > 9) throw std::invalid_argument("too many decimal places in '" + text + "'");
        c.den = 1;
        for (std::size_t i = 0; i < frac.size(); ++i) c.den *= 10;
        const auto whole = parse_int(sv.substr(0, dot));
        const auto part = frac.empty() ? 0 : parse_int(frac);
        if (whole < 0) throw std::invalid_argument("negative threshold '" + text + "'");
        c.num = whole * c.den + part;
    } else {
        c.num = parse_int(sv);
        c.den = 1;
    }
    if (c.den <= 0) throw std::invalid_argument("denominator must be positive in '" + text + "'");
    const auto g = std::gcd(c.num, c.den);
    if (g > 1) {
        c.num /= g;
        c.den /= g;
    }
    return c;
}

// SdcProgram ---------------------------------------------------------------------------

ProgramStep SdcProgram::start() {
    previous_.reset();
    collects_ = 0;
    return step::Collect{instance_};
}

ProgramStep SdcProgram::resume(const StepOutcome& outcome) {
    const auto& v = std::get<VersionedVector>(outcome);
    ++collects_;
    if (previous_ && same_sequence_numbers(*previous_, v)) {
        OpResult r;
        r.vector = v;
        return step::Done{r};
    }
    previous_ = v;
    return step::Collect{instance_};
}

// CoinProgram ---------------------------------------------------------------------------

CoinProgram::CoinProgram(InstanceId instance, CoinThreshold c, std::size_t n)
    : instance_(instance), c_(c), n_(n), sdc_(instance) {
    if (!c_.valid()) throw std::invalid_argument("coin threshold must be a rational c > 1");
}

ProgramStep CoinProgram::start() {
    stage_ = Stage::Flipping;
    return step::Flip{};
}

ProgramStep CoinProgram::resume(const StepOutcome& outcome) {
    switch (stage_) {
        case Stage::Flipping:
            counter_ += std::get<int>(outcome);
            ++flips_;
            stage_ = Stage::Writing;
            return step::Write{instance_, counter_};
        case Stage::Writing:
            stage_ = Stage::Collecting;
            return sdc_.start();
        case Stage::Collecting: {
            auto next = sdc_.resume(outcome);
            const auto* done = std::get_if<step::Done>(&next);
            if (done == nullptr) return next;
            const auto sum = vector_sum(done->result.vector);
            OpResult r;
            r.vector = done->result.vector;
            if (c_.reached_up(sum, n_)) {
                r.value = 1;
                return step::Done{r};
            }
            if (c_.reached_down(sum, n_)) {
                r.value = -1;
                return step::Done{r};
            }
            stage_ = Stage::Flipping;
            return step::Flip{};
        }
    }
    throw ProtocolMisuse("coin in an impossible stage");
}

// ConsensusProgram -------------------------------------------------------------------------
//
// Round r:
//   1. write pref to the round's propose register, collect it; conflict if any
//      other value was written.
//   2. write (pref, conflict) to the commit register, collect it.
//      - every written entry is (pref, no conflict): decide pref
//      - some entry is (v, no conflict): adopt v (all such entries agree)
//      - otherwise: adopt the round's shared-coin outcome
//
// Commit-register payload: preference + 2 when conflict-free.

ConsensusProgram::ConsensusProgram(Value input, CoinThreshold c, std::size_t n)
    : c_(c), n_(n), preference_(input) {
    if (input != 0 && input != 1) throw std::invalid_argument("consensus input must be 0 or 1");
}

ProgramStep ConsensusProgram::start() {
    stage_ = Stage::Propose;
    return step::Write{propose_instance(round_), preference_};
}

ProgramStep ConsensusProgram::next_round(Value preference) {
    preference_ = preference;
    ++round_;
    coin_.reset();
    stage_ = Stage::Propose;
    return step::Write{propose_instance(round_), preference_};
}

ProgramStep ConsensusProgram::resume(const StepOutcome& outcome) {
    switch (stage_) {
        case Stage::Propose:
            stage_ = Stage::ProposeCollect;
            return step::Collect{propose_instance(round_)};
        case Stage::ProposeCollect: {
            conflict_ = false;
            for (const auto& e : std::get<VersionedVector>(outcome))
                if (e.seq > 0 && e.val != preference_) conflict_ = true;
            stage_ = Stage::Commit;
            return step::Write{commit_instance(round_), preference_ + (conflict_ ? 0 : 2)};
        }
        case Stage::Commit:
            stage_ = Stage::CommitCollect;
            return step::Collect{commit_instance(round_)};
        case Stage::CommitCollect: {
            bool all_clean_mine = true;
            std::optional<Value> clean;
            for (const auto& e : std::get<VersionedVector>(outcome)) {
                if (e.seq == 0) continue;
                if (e.val >= 2) clean = e.val - 2;
                if (e.val != preference_ + 2) all_clean_mine = false;
            }
            if (all_clean_mine) {
                decided_ = preference_;
                OpResult r;
                r.value = preference_;
                return step::Done{r};
            }
            if (clean) return next_round(*clean);
            stage_ = Stage::Coin;
            coin_.emplace(coin_instance(round_), c_, n_);
            return coin_->start();
        }
        case Stage::Coin: {
            auto next = coin_->resume(outcome);
            if (std::holds_alternative<step::Flip>(next)) ++coin_flips_;
            const auto* done = std::get_if<step::Done>(&next);
            if (done == nullptr) return next;
            return next_round(*done->result.value > 0 ? 1 : 0);
        }
    }
    throw ProtocolMisuse("consensus in an impossible stage");
}

// BatchNode -------------------------------------------------------------------------------

BatchNode::BatchNode(BatchConfig config) : config_(std::move(config)) {}

BatchNode::InstanceState& BatchNode::instance(InstanceId id) {
    auto [it, inserted] = instances_.try_emplace(id);
    if (inserted) it->second.last_sqno.assign(config_.layout.n, 0);
    return it->second;
}

SeqNum BatchNode::last_sqno(InstanceId inst, ProcessId source) const {
    auto it = instances_.find(inst);
    return it == instances_.end() ? 0 : it->second.last_sqno.at(source);
}

Actions BatchNode::on_event(const Event& event) {
    return std::visit(
        [&](const auto& e) -> Actions {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, InvokeEvent>) {
                return invoke(e.request);
            } else if constexpr (std::is_same_v<T, DeliverEvent>) {
                const auto& m = e.message;
                switch (m.type) {
                    case MsgType::W: return handle_write_message(m);
                    case MsgType::WB: return handle_writeback_message(m);
                    case MsgType::R: return handle_read_message(m);
                    default: return handle_ack(m);
                }
            } else if constexpr (std::is_same_v<T, ReadDoneEvent>) {
                return handle_read_done(e);
            } else {
                return handle_flip(e.outcome);
            }
        },
        event);
}

Actions BatchNode::invoke(const OpRequest& request) {
    if (busy()) throw ProtocolMisuse("operation invoked while another is pending");
    const auto n = config_.layout.n;
    top_op_ = next_op();
    Actions out;
    ProgramStep first;
    if (const auto* w = std::get_if<request::BatchWrite>(&request)) {
        program_ = SingleStepProgram{step::Write{0, w->value}};
        first = step::Write{0, w->value};
    } else if (std::holds_alternative<request::Collect>(request)) {
        program_ = SingleStepProgram{step::Collect{0}};
        first = step::Collect{0};
    } else if (std::holds_alternative<request::Sdc>(request)) {
        out.emplace_back(OpStartedAction{top_op_, OpKind::Sdc, 0, std::nullopt, 0, 0});
        SdcProgram sdc(0);
        first = sdc.start();
        program_ = sdc;
    } else if (std::holds_alternative<request::Coin>(request)) {
        out.emplace_back(OpStartedAction{top_op_, OpKind::Coin, 0, std::nullopt, 0, 0});
        CoinProgram coin(0, config_.c, n);
        first = coin.start();
        program_ = coin;
    } else if (const auto* p = std::get_if<request::Propose>(&request)) {
        out.emplace_back(OpStartedAction{top_op_, OpKind::Propose, 0, std::nullopt, p->input, 0});
        ConsensusProgram cons(p->input, config_.c, n);
        first = cons.start();
        program_ = cons;
    } else {
        throw ProtocolMisuse("batched node does not support single-register operations");
    }
    run(first, out);
    return out;
}

Actions BatchNode::start_exchange(MsgType type, InstanceId inst, SeqNum seq, VersionedVector payload_vec,
                                  TaggedValue payload) {
    const auto id = ++exchange_counter_;
    exchange_.emplace(type, inst, id, seq, config_.layout.quorum);
    Message m;
    m.type = type;
    m.instance = inst;
    m.exchange = id;
    m.seq = seq;
    m.value = payload;
    m.vector = std::move(payload_vec);
    m.op = primitive_op_;
    Actions out;
    broadcast(out, config_.layout, std::move(m));
    return out;
}

void BatchNode::run(ProgramStep next, Actions& out) {
    const bool single = std::holds_alternative<SingleStepProgram>(*program_);
    const std::optional<OpId> parent = single ? std::nullopt : std::optional<OpId>(top_op_);
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, step::Write>) {
                auto& st = instance(s.instance);
                ++st.w_sqno;
                primitive_ = Primitive::Write;
                primitive_op_ = single ? top_op_ : next_op();
                out.emplace_back(
                    OpStartedAction{primitive_op_, OpKind::BatchWrite, s.instance, parent, s.value, st.w_sqno});
                auto sends = start_exchange(MsgType::W, s.instance, st.w_sqno, {}, {st.w_sqno, s.value});
                out.insert(out.end(), sends.begin(), sends.end());
            } else if constexpr (std::is_same_v<T, step::Collect>) {
                auto& st = instance(s.instance);
                ++st.r_sqno;
                primitive_ = Primitive::CollectRead;
                primitive_op_ = single ? top_op_ : next_op();
                merged_.assign(config_.layout.n, TaggedValue{0, config_.initial});
                out.emplace_back(OpStartedAction{primitive_op_, OpKind::Collect, s.instance, parent, 0, 0});
                auto sends = start_exchange(MsgType::R, s.instance, st.r_sqno, {}, {});
                out.insert(out.end(), sends.begin(), sends.end());
            } else if constexpr (std::is_same_v<T, step::Flip>) {
                primitive_ = Primitive::Flip;
                out.emplace_back(FlipAction{top_op_});
            } else {
                if (!single) out.emplace_back(OpFinishedAction{top_op_, s.result});
                program_.reset();
                primitive_ = Primitive::None;
            }
        },
        next);
}

void BatchNode::primitive_done(const StepOutcome& outcome, Actions& out) {
    primitive_ = Primitive::None;
    auto next = std::visit(
        [&](auto& prog) -> ProgramStep {
            using T = std::decay_t<decltype(prog)>;
            if constexpr (std::is_same_v<T, SingleStepProgram>) {
                return step::Done{};
            } else {
                return prog.resume(outcome);
            }
        },
        *program_);
    run(next, out);
}

void BatchNode::write_slots(InstanceId inst, const std::vector<std::pair<std::size_t, TaggedValue>>& candidates,
                            OpId op, Actions& out) {
    auto& st = instance(inst);
    std::vector<std::pair<std::size_t, TaggedValue>> fresh;
    for (const auto& [i, tv] : candidates) {
        if (tv.seq > st.last_sqno.at(i)) {
            st.last_sqno[i] = tv.seq;
            fresh.emplace_back(i, tv);
        }
    }
    if (fresh.empty()) return;
    for (auto mu : config_.layout.writable) out.emplace_back(MemWriteAction{{inst, mu, config_.layout.self}, fresh, op});
}

namespace {

Message ack_for(const Message& m, ProcessId self) {
    Message ack;
    ack.from = self;
    ack.to = m.from;
    ack.type = ack_of(m.type);
    ack.instance = m.instance;
    ack.exchange = m.exchange;
    ack.seq = m.seq;
    ack.op = m.op;
    return ack;
}

}  // namespace

Actions BatchNode::handle_write_message(const Message& m) {
    Actions out;
    write_slots(m.instance, {{m.from, m.value}}, m.op, out);
    out.emplace_back(SendAction{ack_for(m, config_.layout.self)});
    return out;
}

Actions BatchNode::handle_writeback_message(const Message& m) {
    if (m.vector.size() != config_.layout.n) throw ProtocolMisuse("write-back vector has the wrong length");
    Actions out;
    std::vector<std::pair<std::size_t, TaggedValue>> candidates;
    for (std::size_t i = 0; i < m.vector.size(); ++i) candidates.emplace_back(i, m.vector[i]);
    write_slots(m.instance, candidates, m.op, out);
    out.emplace_back(SendAction{ack_for(m, config_.layout.self)});
    return out;
}

Actions BatchNode::handle_read_message(const Message& m) {
    if (pending_reply_) throw ProtocolMisuse("read request handled while another is in progress");
    auto ack = ack_for(m, config_.layout.self);
    ack.vector.assign(config_.layout.n, TaggedValue{0, config_.initial});
    MemReadAction read{{}, m.op};
    for (auto [mu, owner] : config_.layout.readable) read.cells.push_back({m.instance, mu, owner});
    if (read.cells.empty()) return {SendAction{ack}};
    pending_reply_ = PendingReply{ack};
    return {read};
}

Actions BatchNode::handle_read_done(const ReadDoneEvent& done) {
    if (!pending_reply_) throw ProtocolMisuse("unexpected read completion");
    auto ack = std::move(pending_reply_->ack);
    pending_reply_.reset();
    for (const auto& cell : done.contents)
        for (std::size_t i = 0; i < cell.size() && i < ack.vector.size(); ++i)
            if (cell[i].seq > ack.vector[i].seq) ack.vector[i] = cell[i];
    return {SendAction{ack}};
}

Actions BatchNode::handle_flip(int outcome) {
    if (primitive_ != Primitive::Flip) throw ProtocolMisuse("unexpected coin flip");
    Actions out;
    primitive_done(outcome, out);
    return out;
}

Actions BatchNode::handle_ack(const Message& m) {
    if (!exchange_ || !exchange_->on_ack(m)) return {};
    const auto& ex = *exchange_;
    Actions out{ExchangeDoneAction{primitive_op_, ex.request(), ex.responses().size(), ex.represented().size()}};
    switch (primitive_) {
        case Primitive::Write: {
            exchange_.reset();
            out.emplace_back(OpFinishedAction{primitive_op_, {}});
            primitive_done(WriteDone{}, out);
            break;
        }
        case Primitive::CollectRead: {
            for (const auto& [from, ack] : ex.responses()) merged_ = componentwise_max(merged_, ack.vector);
            primitive_ = Primitive::CollectWriteBack;
            auto& st = instance(ex.instance());
            auto sends = start_exchange(MsgType::WB, ex.instance(), st.r_sqno, merged_, {});
            out.insert(out.end(), sends.begin(), sends.end());
            break;
        }
        case Primitive::CollectWriteBack: {
            exchange_.reset();
            OpResult r;
            r.vector = merged_;
            out.emplace_back(OpFinishedAction{primitive_op_, r});
            primitive_done(merged_, out);
            break;
        }
        default: break;
    }
    return out;
}

}  // namespace mixsim
