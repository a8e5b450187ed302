#include "mixsim/checkers.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace mixsim {

void Verdict::add(std::string predicate, std::vector<OpId> ops, std::string explanation) {
    ok = false;
    violations.push_back({std::move(predicate), std::move(ops), std::move(explanation)});
}

void Verdict::merge(const Verdict& other) {
    for (const auto& v : other.violations) add(v.predicate, v.ops, v.explanation);
}

nlohmann::ordered_json to_json(const Verdict& v) {
    nlohmann::ordered_json j;
    j["ok"] = v.ok;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& x : v.violations)
        arr.push_back({{"predicate", x.predicate}, {"ops", x.ops}, {"explanation", x.explanation}});
    j["violations"] = arr;
    return j;
}

namespace {

std::string show(const TaggedValue& t) {
    return "<" + std::to_string(t.seq) + "," + std::to_string(t.val) + ">";
}

struct RegisterView {
    std::vector<const OpRecord*> writes;  // index k-1 holds seq k
    std::vector<const OpRecord*> reads;   // completed reads only
};

RegisterView register_view(const History& history) {
    RegisterView view;
    std::optional<ProcessId> writer;
    for (const auto& op : history.ops) {
        if (op.parent) continue;
        if (op.kind == OpKind::Write) {
            if (writer && *writer != op.process) throw MalformedHistory("writes by more than one process");
            writer = op.process;
            if (op.write_seq != view.writes.size() + 1)
                throw MalformedHistory("write " + std::to_string(op.id) + " has seq " + std::to_string(op.write_seq) +
                                       ", expected " + std::to_string(view.writes.size() + 1));
            if (!view.writes.empty() && !view.writes.back()->complete())
                throw MalformedHistory("write invoked while the previous one is pending");
            view.writes.push_back(&op);
        } else if (op.kind == OpKind::Read) {
            if (!op.complete()) continue;
            if (!op.result || !op.result->tagged) throw MalformedHistory("read without a result");
            view.reads.push_back(&op);
        } else {
            throw MalformedHistory(std::string("unexpected ") + to_string(op.kind) + " op in a register history");
        }
    }
    return view;
}

// Largest seq among writes that responded strictly before tick t.
SeqNum last_completed_before(const RegisterView& view, Tick t) {
    SeqNum s = 0;
    for (const auto* w : view.writes)
        if (w->response_tick && *w->response_tick < t) s = std::max(s, w->write_seq);
    return s;
}

void check_value(Verdict& v, const RegisterView& view, const OpRecord& r, Value initial) {
    const auto t = *r.result->tagged;
    if (t.seq == 0) {
        if (t.val != initial)
            v.add("value_matches_write", {r.id}, "read returned " + show(t) + " but the initial value is " +
                                                     std::to_string(initial));
        return;
    }
    if (t.seq > view.writes.size()) {
        v.add("value_matches_write", {r.id}, "read returned " + show(t) + " but no write has that seq");
        return;
    }
    const auto* w = view.writes[t.seq - 1];
    if (w->arg != t.val)
        v.add("value_matches_write", {r.id, w->id},
              "read returned " + show(t) + " but write " + std::to_string(t.seq) + " wrote " + std::to_string(w->arg));
}

}  // namespace

Verdict check_atomic_swmr(const History& history, Value initial) {
    const auto view = register_view(history);
    Verdict v;
    for (const auto* r : view.reads) {
        const auto t = *r->result->tagged;
        check_value(v, view, *r, initial);
        if (t.seq > 0 && t.seq <= view.writes.size()) {
            const auto* w = view.writes[t.seq - 1];
            if (!(w->invoke_tick < *r->response_tick))
                v.add("reads_from_past", {r->id, w->id},
                      "read returned seq " + std::to_string(t.seq) + " whose write started after the read responded");
        }
        const auto floor = last_completed_before(view, r->invoke_tick);
        if (t.seq < floor)
            v.add("no_stale_read", {r->id, view.writes[floor - 1]->id},
                  "read returned seq " + std::to_string(t.seq) + " after write " + std::to_string(floor) +
                      " had responded");
    }
    for (const auto* r1 : view.reads)
        for (const auto* r2 : view.reads)
            if (*r1->response_tick < r2->invoke_tick && r1->result->tagged->seq > r2->result->tagged->seq)
                v.add("no_inversion", {r1->id, r2->id},
                      "read returned seq " + std::to_string(r1->result->tagged->seq) +
                          ", a later read returned seq " + std::to_string(r2->result->tagged->seq));
    return v;
}

Verdict check_regular_swmr(const History& history, Value initial) {
    const auto view = register_view(history);
    Verdict v;
    for (const auto* r : view.reads) {
        const auto t = *r->result->tagged;
        check_value(v, view, *r, initial);
        const auto floor = last_completed_before(view, r->invoke_tick);
        bool fine = t.seq == floor;
        if (!fine && t.seq > floor && t.seq <= view.writes.size()) {
            const auto* w = view.writes[t.seq - 1];
            fine = w->invoke_tick < *r->response_tick;  // overlaps the read
        }
        if (!fine) {
            std::vector<OpId> ops{r->id};
            if (floor > 0) ops.push_back(view.writes[floor - 1]->id);
            v.add("regular_read", ops,
                  "read returned " + show(t) + "; the last write done before it had seq " + std::to_string(floor) +
                      " and seq " + std::to_string(t.seq) + " does not overlap it");
        }
    }
    return v;
}

Verdict check_collect_regularity(const History& history, Value initial) {
    // Group by instance: writes per process (seq -> op) and completed collects.
    struct Inst {
        std::map<ProcessId, std::map<SeqNum, const OpRecord*>> writes;
        std::vector<const OpRecord*> collects;
    };
    std::map<InstanceId, Inst> insts;
    for (const auto& op : history.ops) {
        if (op.kind == OpKind::BatchWrite) {
            auto& w = insts[op.instance].writes[op.process];
            if (!w.emplace(op.write_seq, &op).second) throw MalformedHistory("duplicate write seq");
        } else if (op.kind == OpKind::Collect && op.complete()) {
            if (!op.result) throw MalformedHistory("collect without a result");
            insts[op.instance].collects.push_back(&op);
        }
    }
    Verdict v;
    for (const auto& [id, inst] : insts) {
        for (const auto* c : inst.collects) {
            const auto& vec = c->result->vector;
            for (const auto& [p, ws] : inst.writes) {
                if (p >= vec.size()) throw MalformedHistory("collect vector too short");
                for (const auto& [seq, w] : ws)
                    if (w->complete() && *w->response_tick < c->invoke_tick && vec[p].seq < seq)
                        v.add("write_visible", {c->id, w->id},
                              "entry " + std::to_string(p) + " has seq " + std::to_string(vec[p].seq) +
                                  " but write seq " + std::to_string(seq) + " responded before the collect");
            }
            for (std::size_t p = 0; p < vec.size(); ++p) {
                if (vec[p].seq == 0) {
                    if (vec[p].val != initial)
                        v.add("no_future_entry", {c->id}, "entry " + std::to_string(p) + " is " + show(vec[p]));
                    continue;
                }
                const OpRecord* w = nullptr;
                if (auto it = inst.writes.find(static_cast<ProcessId>(p)); it != inst.writes.end())
                    if (auto jt = it->second.find(vec[p].seq); jt != it->second.end()) w = jt->second;
                if (w == nullptr || w->arg != vec[p].val || !(w->invoke_tick < *c->response_tick))
                    v.add("no_future_entry", {c->id},
                          "entry " + std::to_string(p) + " is " + show(vec[p]) + ", not a write already invoked");
            }
            // A collect's write-back completes at its response, so write-back
            // precedence and collect-before-collect are the same check here.
            for (const auto* earlier : inst.collects)
                if (*earlier->response_tick < c->invoke_tick && !precedes(earlier->result->vector, vec))
                    v.add("writeback_precedes", {earlier->id, c->id},
                          "an earlier collect's vector does not precede a later one's");
        }
    }
    return v;
}

std::vector<VersionedVector> sdc_vectors(const History& history, InstanceId instance) {
    std::vector<VersionedVector> out;
    for (const auto& op : history.ops)
        if (op.kind == OpKind::Sdc && op.instance == instance && op.complete() && op.result)
            out.push_back(op.result->vector);
    return out;
}

Verdict check_sdc_chain(const std::vector<VersionedVector>& vectors) {
    Verdict v;
    for (std::size_t i = 0; i < vectors.size(); ++i)
        for (std::size_t j = i + 1; j < vectors.size(); ++j)
            if (!precedes(vectors[i], vectors[j]) && !precedes(vectors[j], vectors[i]))
                v.add("sdc_chain", {}, "vectors " + std::to_string(i) + " and " + std::to_string(j) + " are incomparable");
    return v;
}

Verdict check_consensus(const std::vector<Value>& inputs, const std::vector<Value>& decisions) {
    Verdict v;
    const std::set<Value> distinct(decisions.begin(), decisions.end());
    if (distinct.size() > 1) {
        std::ostringstream os;
        os << "processes decided";
        for (auto d : distinct) os << ' ' << d;
        v.add("agreement", {}, os.str());
    }
    for (auto d : distinct)
        if (std::find(inputs.begin(), inputs.end(), d) == inputs.end())
            v.add("validity", {}, "decision " + std::to_string(d) + " is nobody's input");
    return v;
}

CoinStats coin_statistics(const std::vector<CoinRun>& runs, CoinThreshold c) {
    if (runs.empty()) throw std::invalid_argument("coin statistics need at least one run");
    CoinStats s;
    s.runs = runs.size();
    double flips = 0;
    for (const auto& r : runs) {
        const bool all_minus = !r.outcomes.empty() &&
                               std::all_of(r.outcomes.begin(), r.outcomes.end(), [](Value x) { return x == -1; });
        const bool all_plus = !r.outcomes.empty() &&
                              std::all_of(r.outcomes.begin(), r.outcomes.end(), [](Value x) { return x == 1; });
        if (all_minus) ++s.unanimous_minus1;
        else if (all_plus) ++s.unanimous_plus1;
        else ++s.mixed;
        s.flips_per_run.push_back(r.flips);
        flips += static_cast<double>(r.flips);
    }
    const double cd = c.as_double();
    const double runs_d = static_cast<double>(s.runs);
    s.agreement_parameter = (cd - 1) / (2 * cd);
    s.threshold = s.agreement_parameter - 3 * std::sqrt(0.25 / runs_d);
    s.freq_minus1 = static_cast<double>(s.unanimous_minus1) / runs_d;
    s.freq_plus1 = static_cast<double>(s.unanimous_plus1) / runs_d;
    s.mean_flips = flips / runs_d;
    s.bound_ok = s.freq_minus1 >= s.threshold && s.freq_plus1 >= s.threshold;
    return s;
}

nlohmann::ordered_json to_json(const CoinStats& s) {
    nlohmann::ordered_json j;
    j["runs"] = s.runs;
    j["unanimous_minus1"] = s.unanimous_minus1;
    j["unanimous_plus1"] = s.unanimous_plus1;
    j["mixed"] = s.mixed;
    j["freq_minus1"] = s.freq_minus1;
    j["freq_plus1"] = s.freq_plus1;
    j["agreement_parameter"] = s.agreement_parameter;
    j["threshold"] = s.threshold;
    j["bound_ok"] = s.bound_ok;
    j["mean_flips"] = s.mean_flips;
    j["flips_per_run"] = s.flips_per_run;
    return j;
}

}  // namespace mixsim
