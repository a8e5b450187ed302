#include "doctest.h"

#include "mixsim/checkers.hpp"

using namespace mixsim;

namespace {

struct Builder {
    History h;
    OpId next = 1;

    OpId write(Value v, Tick inv, std::optional<Tick> resp) {
        OpRecord op;
        op.id = next++;
        op.kind = OpKind::Write;
        op.invoke_tick = inv;
        op.response_tick = resp;
        op.arg = v;
        SeqNum seq = 1;
        for (const auto& o : h.ops) seq += o.kind == OpKind::Write;
        op.write_seq = seq;
        h.ops.push_back(op);
        return op.id;
    }
    OpId read(ProcessId p, Tick inv, std::optional<Tick> resp, TaggedValue got) {
        OpRecord op;
        op.id = next++;
        op.process = p;
        op.kind = OpKind::Read;
        op.invoke_tick = inv;
        op.response_tick = resp;
        if (resp) op.result = OpResult{got, {}, {}};
        h.ops.push_back(op);
        return op.id;
    }
    OpId bwrite(ProcessId p, SeqNum seq, Value v, Tick inv, Tick resp) {
        OpRecord op;
        op.id = next++;
        op.process = p;
        op.kind = OpKind::BatchWrite;
        op.invoke_tick = inv;
        op.response_tick = resp;
        op.arg = v;
        op.write_seq = seq;
        h.ops.push_back(op);
        return op.id;
    }
    OpId collect(ProcessId p, Tick inv, Tick resp, VersionedVector v) {
        OpRecord op;
        op.id = next++;
        op.process = p;
        op.kind = OpKind::Collect;
        op.invoke_tick = inv;
        op.response_tick = resp;
        op.result = OpResult{{}, std::move(v), {}};
        h.ops.push_back(op);
        return op.id;
    }
};

bool has(const Verdict& v, const std::string& predicate) {
    for (const auto& x : v.violations)
        if (x.predicate == predicate) return true;
    return false;
}

}  // namespace

TEST_CASE("atomicity: sequential write then read") {
    Builder b;
    b.write(5, 0, 10);
    b.read(1, 11, 20, {1, 5});
    CHECK(check_atomic_swmr(b.h).ok);
    CHECK(check_regular_swmr(b.h).ok);
}

TEST_CASE("atomicity: new-old inversion") {
    Builder b;
    b.write(5, 0, 100);
    b.read(1, 10, 20, {1, 5});
    b.read(2, 30, 40, {0, 0});
    auto v = check_atomic_swmr(b.h);
    CHECK_FALSE(v.ok);
    CHECK(has(v, "no_inversion"));
    // Both reads overlap the write, so the history is still regular.
    CHECK(check_regular_swmr(b.h).ok);
}

TEST_CASE("atomicity: stale read, future read, wrong value") {
    Builder b;
    b.write(5, 0, 10);
    b.read(1, 11, 20, {0, 0});
    CHECK(has(check_atomic_swmr(b.h), "no_stale_read"));
    CHECK(has(check_regular_swmr(b.h), "regular_read"));

    Builder c;
    c.read(1, 0, 5, {1, 5});
    c.write(5, 10, 20);
    CHECK(has(check_atomic_swmr(c.h), "reads_from_past"));
    CHECK(has(check_regular_swmr(c.h), "regular_read"));

    Builder d;
    d.write(5, 0, 10);
    d.read(1, 11, 20, {1, 6});
    CHECK(has(check_atomic_swmr(d.h), "value_matches_write"));

    Builder e;
    e.read(1, 0, 5, {0, 3});
    CHECK(has(check_atomic_swmr(e.h, 0), "value_matches_write"));
    CHECK(check_atomic_swmr(e.h, 3).ok);
}

TEST_CASE("atomicity: overlapping read may return either value") {
    for (SeqNum s : {0u, 1u}) {
        Builder b;
        b.write(5, 10, 30);
        b.read(1, 15, 25, {s, s == 0 ? 0 : 5});
        CHECK(check_atomic_swmr(b.h).ok);
        CHECK(check_regular_swmr(b.h).ok);
    }
}

TEST_CASE("atomicity: incomplete ops") {
    Builder b;
    b.write(5, 0, std::nullopt);
    b.read(1, 1, 9, {1, 5});
    b.read(2, 2, std::nullopt, {});
    CHECK(check_atomic_swmr(b.h).ok);
}

TEST_CASE("malformed register histories") {
    Builder b;
    b.write(5, 0, 10);
    b.h.ops.back().write_seq = 3;
    CHECK_THROWS_AS(check_atomic_swmr(b.h), MalformedHistory);

    Builder c;
    c.write(5, 0, 10);
    c.write(6, 11, 20);
    c.h.ops.back().process = 2;
    CHECK_THROWS_AS(check_regular_swmr(c.h), MalformedHistory);

    Builder d;
    d.collect(0, 0, 1, {});
    CHECK_THROWS_AS(check_atomic_swmr(d.h), MalformedHistory);
}

TEST_CASE("collect regularity") {
    SUBCASE("quiescent collects agree") {
        Builder b;
        b.bwrite(0, 1, 7, 0, 5);
        b.collect(1, 6, 10, {{1, 7}, {0, 0}});
        b.collect(0, 11, 15, {{1, 7}, {0, 0}});
        CHECK(check_collect_regularity(b.h).ok);
    }
    SUBCASE("write not visible") {
        Builder b;
        b.bwrite(0, 1, 7, 0, 5);
        b.collect(1, 6, 10, {{0, 0}, {0, 0}});
        CHECK(has(check_collect_regularity(b.h), "write_visible"));
    }
    SUBCASE("later collect goes backwards") {
        Builder b;
        b.bwrite(0, 1, 7, 0, 50);
        b.bwrite(1, 1, 8, 0, 50);
        b.collect(1, 6, 10, {{1, 7}, {0, 0}});
        b.collect(0, 11, 15, {{0, 0}, {1, 8}});
        CHECK(has(check_collect_regularity(b.h), "writeback_precedes"));
    }
    SUBCASE("entry from nowhere") {
        Builder b;
        b.collect(1, 6, 10, {{2, 7}, {0, 0}});
        CHECK(has(check_collect_regularity(b.h), "no_future_entry"));
    }
}

TEST_CASE("sdc chain") {
    CHECK(check_sdc_chain({{{1, 0}, {0, 0}}, {{1, 0}, {0, 0}}}).ok);
    CHECK(check_sdc_chain({{{1, 0}, {0, 0}}, {{1, 0}, {2, 0}}, {{3, 0}, {2, 0}}}).ok);
    auto v = check_sdc_chain({{{1, 0}, {0, 0}}, {{0, 0}, {1, 0}}});
    CHECK_FALSE(v.ok);
    CHECK(has(v, "sdc_chain"));
}

TEST_CASE("consensus verdicts") {
    CHECK(check_consensus({0, 0, 0}, {0, 0, 0}).ok);
    CHECK(has(check_consensus({0, 1}, {0, 1}), "agreement"));
    CHECK(has(check_consensus({0, 0}, {1, 1}), "validity"));
    CHECK(check_consensus({0, 1}, {}).ok);
}

TEST_CASE("coin statistics") {
    std::vector<CoinRun> runs(400, CoinRun{{-1, -1, -1, -1}, 10});
    auto s = coin_statistics(runs, CoinThreshold{});
    CHECK(s.unanimous_minus1 == 400);
    CHECK(s.unanimous_plus1 == 0);
    CHECK(s.mixed == 0);
    CHECK(s.agreement_parameter == doctest::Approx(0.25));
    CHECK_FALSE(s.bound_ok);
    CHECK(s.mean_flips == doctest::Approx(10));

    runs = {{{1, 1}, 2}, {{-1, -1}, 4}, {{1, -1}, 6}, {{1, 1}, 8}};
    s = coin_statistics(runs, CoinThreshold{3, 1});
    CHECK(s.unanimous_minus1 + s.unanimous_plus1 + s.mixed == s.runs);
    CHECK(s.mixed == 1);
    CHECK(s.agreement_parameter == doctest::Approx(1.0 / 3));
    CHECK(s.threshold == doctest::Approx(1.0 / 3 - 0.75));
    CHECK(s.bound_ok);
    CHECK_THROWS_AS(coin_statistics({}, CoinThreshold{}), std::invalid_argument);

    auto j = to_json(s);
    CHECK(j["runs"] == 4);
    CHECK(j["mixed"] == 1);
}

TEST_CASE("verdict json") {
    Verdict v;
    CHECK(to_json(v)["ok"] == true);
    v.add("regular_read", {3, 4}, "why");
    auto j = to_json(v);
    CHECK(j["ok"] == false);
    CHECK(j["violations"][0]["predicate"] == "regular_read");
    CHECK(j["violations"][0]["ops"].size() == 2);
}
