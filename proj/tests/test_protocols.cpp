#include "doctest.h"

#include "mixsim/batch_node.hpp"
#include "mixsim/protocol.hpp"
#include "mixsim/register_node.hpp"

using namespace mixsim;

namespace {

// Process 0 writes two memories.
MixedTopology two_memories_for_0() {
    MixedTopology t;
    t.n = 3;
    t.memories.push_back({ProcessSet{0, 1, 2}, ProcessSet{0, 1}});
    t.memories.push_back({ProcessSet{0, 2}, ProcessSet{0, 2}});
    return normalize(t);
}

template <class T>
std::vector<T> only(const Actions& actions) {
    std::vector<T> out;
    for (const auto& a : actions)
        if (const auto* x = std::get_if<T>(&a)) out.push_back(*x);
    return out;
}

Message msg(MsgType type, ProcessId from, ProcessId to, std::uint64_t exchange, SeqNum seq, TaggedValue v = {}) {
    Message m;
    m.type = type;
    m.from = from;
    m.to = to;
    m.exchange = exchange;
    m.seq = seq;
    m.value = v;
    return m;
}

RegisterNode reg_node(const MixedTopology& t, ProcessId self, std::size_t f, ProcessId writer = 0) {
    return RegisterNode({make_layout(t, self, quorum_for(t, f, false)), writer, 0});
}

}  // namespace

TEST_CASE("tagged values order by seq then value") {
    CHECK(TaggedValue{1, 9} < TaggedValue{2, 0});
    CHECK(std::max(TaggedValue{1, 7}, TaggedValue{3, 9}) == TaggedValue{3, 9});
}

TEST_CASE("vector helpers") {
    VersionedVector a{{1, 5}, {0, 0}}, b{{1, 6}, {2, 3}};
    CHECK(precedes(a, b));
    CHECK_FALSE(precedes(b, a));
    CHECK(same_sequence_numbers(a, VersionedVector{{1, 99}, {0, 1}}));
    CHECK(componentwise_max(a, b) == b);
    CHECK(vector_sum(b) == 9);
    CHECK_THROWS_AS(precedes(a, VersionedVector{{1, 1}}), std::invalid_argument);
}

TEST_CASE("writer invocation") {
    const auto t = pure_mp(4);
    auto w = reg_node(t, 0, 1);
    auto out = w.invoke_write(7);
    auto sends = only<SendAction>(out);
    REQUIRE(sends.size() == 4);
    for (ProcessId q = 0; q < 4; ++q) {
        CHECK(sends[q].message.to == q);
        CHECK(sends[q].message.type == MsgType::W);
        CHECK(sends[q].message.seq == 1);
        CHECK(sends[q].message.value == TaggedValue{1, 7});
    }
    CHECK(w.w_sqno() == 1);
    CHECK_THROWS_AS(w.invoke_write(8), ProtocolMisuse);
    CHECK_THROWS_AS(w.invoke_read(), ProtocolMisuse);

    // Finish the first write with three acks, then write again.
    const auto ex = sends[0].message.exchange;
    CHECK(w.handle_ack(msg(MsgType::AckW, 1, 0, ex, 1)).empty());
    CHECK(w.handle_ack(msg(MsgType::AckW, 2, 0, ex, 1)).empty());
    auto done = w.handle_ack(msg(MsgType::AckW, 3, 0, ex, 1));
    CHECK(only<OpFinishedAction>(done).size() == 1);
    CHECK_FALSE(w.busy());
    auto second = only<SendAction>(w.invoke_write(9));
    CHECK(second[0].message.seq == 2);
    CHECK(second[0].message.value == TaggedValue{2, 9});

    auto other = reg_node(t, 1, 1);
    CHECK_THROWS_AS(other.invoke_write(1), ProtocolMisuse);
}

TEST_CASE("write message handling") {
    const auto t = two_memories_for_0();
    auto node = reg_node(t, 0, 1, 1);
    REQUIRE(node.config().layout.writable.size() == 2);

    auto out = node.handle_write_message(msg(MsgType::W, 1, 0, 4, 1, {1, 7}));
    auto writes = only<MemWriteAction>(out);
    REQUIRE(writes.size() == 2);
    for (const auto& w : writes) {
        CHECK(w.cell.owner == 0);
        CHECK(w.updates == std::vector<std::pair<std::size_t, TaggedValue>>{{0, {1, 7}}});
    }
    auto acks = only<SendAction>(out);
    REQUIRE(acks.size() == 1);
    CHECK(acks[0].message.type == MsgType::AckW);
    CHECK(acks[0].message.seq == 1);
    CHECK(acks[0].message.to == 1);

    SUBCASE("stale write is acked without memory writes") {
        node.handle_write_message(msg(MsgType::W, 1, 0, 5, 3, {3, 2}));
        auto stale = node.handle_write_message(msg(MsgType::W, 1, 0, 6, 1, {1, 7}));
        CHECK(only<MemWriteAction>(stale).empty());
        REQUIRE(only<SendAction>(stale).size() == 1);
        CHECK(only<SendAction>(stale)[0].message.type == MsgType::AckW);
        CHECK(node.last_sqno() == 3);
    }
    SUBCASE("write-back is handled like a write") {
        auto wb = node.handle_write_message(msg(MsgType::WB, 2, 0, 1, 2, {2, 9}));
        CHECK(only<MemWriteAction>(wb).size() == 2);
        CHECK(only<SendAction>(wb)[0].message.type == MsgType::AckWB);
    }
}

TEST_CASE("read message handling replies with the maximum cell") {
    const auto t = two_memories_for_0();
    auto node = reg_node(t, 2, 1, 0);
    auto out = node.handle_read_message(msg(MsgType::R, 1, 2, 3, 5));
    auto reads = only<MemReadAction>(out);
    REQUIRE(reads.size() == 1);
    CHECK(reads[0].cells.size() == node.config().layout.readable.size());
    CHECK_THROWS_AS(node.handle_read_message(msg(MsgType::R, 0, 2, 3, 5)), ProtocolMisuse);

    ReadDoneEvent done;
    done.contents = {{{1, 7}}, {{3, 9}}};
    done.contents.resize(reads[0].cells.size(), VersionedVector{{0, 0}});
    auto reply = only<SendAction>(node.handle_read_done(done));
    REQUIRE(reply.size() == 1);
    CHECK(reply[0].message.type == MsgType::AckR);
    CHECK(reply[0].message.seq == 5);
    CHECK(reply[0].message.value == TaggedValue{3, 9});

    node.handle_read_message(msg(MsgType::R, 1, 2, 4, 6));
    ReadDoneEvent blank;
    blank.contents.assign(reads[0].cells.size(), VersionedVector{{0, 0}});
    CHECK(only<SendAction>(node.handle_read_done(blank))[0].message.value == TaggedValue{0, 0});
    CHECK_THROWS_AS(node.handle_read_done(blank), ProtocolMisuse);
}

TEST_CASE("read picks the maximum reply and writes it back") {
    const auto t = pure_mp(3);
    auto r = reg_node(t, 1, 1);
    auto sends = only<SendAction>(r.invoke_read());
    REQUIRE(sends.size() == 3);
    const auto ex = sends[0].message.exchange;
    CHECK(r.handle_ack(msg(MsgType::AckR, 0, 1, ex, 1, {2, 8})).empty());
    auto wb = r.handle_ack(msg(MsgType::AckR, 2, 1, ex, 1, {1, 4}));
    auto wb_sends = only<SendAction>(wb);
    REQUIRE(wb_sends.size() == 3);
    CHECK(wb_sends[0].message.type == MsgType::WB);
    CHECK(wb_sends[0].message.value == TaggedValue{2, 8});
    CHECK(wb_sends[0].message.seq == 2);
    const auto ex2 = wb_sends[0].message.exchange;
    // A late AckR from the first exchange is ignored.
    CHECK(r.handle_ack(msg(MsgType::AckR, 1, 1, ex, 1, {5, 5})).empty());
    r.handle_ack(msg(MsgType::AckWB, 0, 1, ex2, 2));
    auto fin = only<OpFinishedAction>(r.handle_ack(msg(MsgType::AckWB, 1, 1, ex2, 2)));
    REQUIRE(fin.size() == 1);
    CHECK(fin[0].result.tagged == TaggedValue{2, 8});
}

TEST_CASE("exchange completion") {
    SUBCASE("n=5, f=2: three distinct acks") {
        Exchange ex(MsgType::W, 0, 1, 1, quorum_for(pure_mp(5), 2, false));
        CHECK_FALSE(ex.on_ack(msg(MsgType::AckW, 0, 0, 1, 1)));
        CHECK_FALSE(ex.on_ack(msg(MsgType::AckW, 0, 0, 1, 1)));  // duplicate
        CHECK(ex.responses().size() == 1);
        CHECK_FALSE(ex.on_ack(msg(MsgType::AckW, 3, 0, 1, 1)));
        CHECK_FALSE(ex.on_ack(msg(MsgType::AckW, 4, 0, 1, 2)));  // other seq
        CHECK_FALSE(ex.on_ack(msg(MsgType::AckR, 4, 0, 1, 1)));  // other tag
        CHECK_FALSE(ex.on_ack(msg(MsgType::AckW, 4, 0, 2, 1)));  // other exchange
        CHECK(ex.on_ack(msg(MsgType::AckW, 4, 0, 1, 1)));
        CHECK(ex.complete());
    }
    SUBCASE("cluster rule: one ack from a cluster of three") {
        const auto t = from_clusters({{ProcessSet{0, 1, 2}, ProcessSet{3, 4}}});
        Exchange ex(MsgType::R, 0, 1, 1, quorum_for(t, 2, true));
        CHECK(ex.on_ack(msg(MsgType::AckR, 0, 0, 1, 1)));
        CHECK(ex.represented() == ProcessSet{0, 1, 2});
    }
    SUBCASE("cluster rule: the smaller cluster alone is not enough") {
        const auto t = from_clusters({{ProcessSet{0, 1, 2}, ProcessSet{3, 4}}});
        Exchange ex(MsgType::R, 0, 1, 1, quorum_for(t, 2, true));
        CHECK_FALSE(ex.on_ack(msg(MsgType::AckR, 3, 0, 1, 1)));
        CHECK_FALSE(ex.on_ack(msg(MsgType::AckR, 4, 0, 1, 1)));
        CHECK(ex.on_ack(msg(MsgType::AckR, 1, 0, 1, 1)));
    }
    SUBCASE("singleton clusters behave like counting") {
        const auto t = from_clusters({{ProcessSet{0}, ProcessSet{1}, ProcessSet{2}, ProcessSet{3}}});
        Exchange a(MsgType::W, 0, 1, 1, quorum_for(t, 1, true));
        Exchange b(MsgType::W, 0, 1, 1, quorum_for(t, 1, false));
        for (ProcessId q = 0; q < 4; ++q) {
            auto ack = msg(MsgType::AckW, q, 0, 1, 1);
            CHECK(a.on_ack(ack) == b.on_ack(ack));
        }
    }
    CHECK_THROWS_AS(quorum_for(pure_mp(3), 1, true), std::invalid_argument);
    CHECK_THROWS_AS(quorum_for(pure_mp(3), 4, false), std::invalid_argument);
}

TEST_CASE("coin threshold") {
    CoinThreshold c;  // 2
    CHECK(c.reached_up(8, 4));
    CHECK(c.reached_down(-8, 4));
    CHECK_FALSE(c.reached_up(3, 4));
    CHECK_FALSE(c.reached_down(3, 4));
    CHECK_FALSE(c.reached_up(7, 4));

    auto half = parse_threshold("2.5");
    CHECK(half.num == 5);
    CHECK(half.den == 2);
    CHECK(half.reached_up(10, 4));
    CHECK_FALSE(half.reached_up(9, 4));
    auto q = parse_threshold("6/4");
    CHECK(q.num == 3);
    CHECK(q.den == 2);
    CHECK(parse_threshold("3").num == 3);
    CHECK_FALSE(parse_threshold("1").valid());
    CHECK_FALSE(parse_threshold("1/2").valid());
    CHECK_THROWS_AS(parse_threshold("x"), std::invalid_argument);
    CHECK_THROWS_AS(parse_threshold("3/0"), std::invalid_argument);
    CHECK_THROWS_AS(CoinProgram(0, parse_threshold("1"), 4), std::invalid_argument);
}

TEST_CASE("sdc program") {
    SdcProgram sdc(0);
    CHECK(std::holds_alternative<step::Collect>(sdc.start()));
    VersionedVector v{{1, 1}, {0, 0}};
    CHECK(std::holds_alternative<step::Collect>(sdc.resume(v)));
    auto done = sdc.resume(VersionedVector{{1, 1}, {0, 0}});
    REQUIRE(std::holds_alternative<step::Done>(done));
    CHECK(sdc.collects() == 2);

    SdcProgram busy(0);
    busy.start();
    busy.resume(v);
    CHECK(std::holds_alternative<step::Collect>(busy.resume(VersionedVector{{1, 1}, {1, 4}})));
    CHECK(std::holds_alternative<step::Done>(busy.resume(VersionedVector{{1, 1}, {1, 4}})));
    CHECK(busy.collects() == 3);
}

TEST_CASE("coin program loop") {
    CoinProgram coin(0, CoinThreshold{}, 4);
    CHECK(std::holds_alternative<step::Flip>(coin.start()));
    auto w = coin.resume(1);
    REQUIRE(std::holds_alternative<step::Write>(w));
    CHECK(std::get<step::Write>(w).value == 1);
    CHECK(std::holds_alternative<step::Collect>(coin.resume(WriteDone{})));
    VersionedVector three{{1, 3}, {0, 0}, {0, 0}, {0, 0}};
    coin.resume(three);
    CHECK(std::holds_alternative<step::Flip>(coin.resume(three)));  // sum 3: keep going
    coin.resume(-1);
    coin.resume(WriteDone{});
    VersionedVector eight{{2, 2}, {4, 2}, {4, 2}, {4, 2}};
    coin.resume(eight);
    auto done = coin.resume(eight);
    REQUIRE(std::holds_alternative<step::Done>(done));
    CHECK(std::get<step::Done>(done).result.value == 1);
    CHECK(coin.flips() == 2);
}

TEST_CASE("consensus program decides when everyone agrees") {
    ConsensusProgram cons(1, CoinThreshold{}, 3);
    auto s = cons.start();
    REQUIRE(std::holds_alternative<step::Write>(s));
    CHECK(std::get<step::Write>(s).instance == ConsensusProgram::propose_instance(1));
    CHECK(std::holds_alternative<step::Collect>(cons.resume(WriteDone{})));
    auto commit = cons.resume(VersionedVector{{1, 1}, {0, 0}, {1, 1}});
    REQUIRE(std::holds_alternative<step::Write>(commit));
    CHECK(std::get<step::Write>(commit).value == 3);
    CHECK(std::get<step::Write>(commit).instance == ConsensusProgram::commit_instance(1));
    cons.resume(WriteDone{});
    auto done = cons.resume(VersionedVector{{1, 3}, {0, 0}, {1, 3}});
    REQUIRE(std::holds_alternative<step::Done>(done));
    CHECK(std::get<step::Done>(done).result.value == 1);
    CHECK(cons.decided() == 1);
}

TEST_CASE("consensus program adopts a clean value, else flips") {
    SUBCASE("adopt") {
        ConsensusProgram cons(0, CoinThreshold{}, 3);
        cons.start();
        cons.resume(WriteDone{});
        auto commit = cons.resume(VersionedVector{{1, 0}, {1, 1}, {0, 0}});
        CHECK(std::get<step::Write>(commit).value == 0);  // conflict seen
        cons.resume(WriteDone{});
        auto next = cons.resume(VersionedVector{{1, 0}, {1, 3}, {0, 0}});
        REQUIRE(std::holds_alternative<step::Write>(next));
        CHECK(cons.round() == 2);
        CHECK(cons.preference() == 1);
        CHECK(std::get<step::Write>(next).instance == ConsensusProgram::propose_instance(2));
    }
    SUBCASE("coin") {
        ConsensusProgram cons(0, CoinThreshold{}, 2);
        cons.start();
        cons.resume(WriteDone{});
        cons.resume(VersionedVector{{1, 0}, {1, 1}});
        cons.resume(WriteDone{});
        auto flip = cons.resume(VersionedVector{{1, 0}, {1, 1}});
        CHECK(std::holds_alternative<step::Flip>(flip));
        auto w = cons.resume(1);
        REQUIRE(std::holds_alternative<step::Write>(w));
        CHECK(std::get<step::Write>(w).instance == ConsensusProgram::coin_instance(1));
    }
    CHECK_THROWS_AS(ConsensusProgram(2, CoinThreshold{}, 3), std::invalid_argument);
}

TEST_CASE("batched node write handler dedups per slot") {
    const auto t = pure_mp(3);
    BatchNode node({make_layout(t, 1, quorum_for(t, 1, false)), 0, {}});
    Message w = msg(MsgType::W, 2, 1, 1, 2, {2, 5});
    auto out = node.handle_write_message(w);
    auto writes = only<MemWriteAction>(out);
    REQUIRE(writes.size() == 1);
    CHECK(writes[0].updates == std::vector<std::pair<std::size_t, TaggedValue>>{{2, {2, 5}}});
    CHECK(node.last_sqno(0, 2) == 2);
    CHECK(only<MemWriteAction>(node.handle_write_message(msg(MsgType::W, 2, 1, 2, 1, {1, 4}))).empty());

    Message wb = msg(MsgType::WB, 0, 1, 3, 1);
    wb.vector = {{3, 1}, {0, 0}, {2, 5}};
    auto wb_out = node.handle_writeback_message(wb);
    auto wb_writes = only<MemWriteAction>(wb_out);
    REQUIRE(wb_writes.size() == 1);
    CHECK(wb_writes[0].updates == std::vector<std::pair<std::size_t, TaggedValue>>{{0, {3, 1}}});
    CHECK(only<SendAction>(wb_out)[0].message.type == MsgType::AckWB);

    wb.vector.pop_back();
    CHECK_THROWS_AS(node.handle_writeback_message(wb), ProtocolMisuse);
}

TEST_CASE("batched node collect merges replies and writes back") {
    const auto t = pure_mp(3);
    BatchNode node({make_layout(t, 0, quorum_for(t, 1, false)), 0, {}});
    auto sends = only<SendAction>(node.invoke(request::Collect{}));
    REQUIRE(sends.size() == 3);
    CHECK(sends[0].message.type == MsgType::R);
    CHECK_THROWS_AS(node.invoke(request::Collect{}), ProtocolMisuse);
    const auto ex = sends[0].message.exchange;
    auto a = msg(MsgType::AckR, 1, 0, ex, 1);
    a.vector = {{1, 4}, {0, 0}, {0, 0}};
    auto b = msg(MsgType::AckR, 2, 0, ex, 1);
    b.vector = {{0, 0}, {0, 0}, {2, 6}};
    CHECK(node.handle_ack(a).empty());
    auto wb = only<SendAction>(node.handle_ack(b));
    REQUIRE(wb.size() == 3);
    CHECK(wb[0].message.type == MsgType::WB);
    const VersionedVector merged{{1, 4}, {0, 0}, {2, 6}};
    CHECK(wb[0].message.vector == merged);
    const auto ex2 = wb[0].message.exchange;
    node.handle_ack(msg(MsgType::AckWB, 1, 0, ex2, 1));
    auto fin = only<OpFinishedAction>(node.handle_ack(msg(MsgType::AckWB, 0, 0, ex2, 1)));
    REQUIRE(fin.size() == 1);
    CHECK(fin[0].result.vector == merged);
    CHECK_FALSE(node.busy());
    CHECK_THROWS_AS(node.invoke(request::Read{}), ProtocolMisuse);
}
