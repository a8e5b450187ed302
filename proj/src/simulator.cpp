#include "mixsim/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <deque>
#include <exception>
#include <mutex>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

namespace mixsim {

using nlohmann::ordered_json;

const char* to_string(RunStatus s) {
    switch (s) {
        case RunStatus::Completed: return "completed";
        case RunStatus::BudgetExhausted: return "budget_exhausted";
        case RunStatus::Stalled: return "stalled";
    }
    return "?";
}

const OpRecord* History::find(OpId id) const {
    for (const auto& op : ops)
        if (op.id == id) return &op;
    return nullptr;
}

bool SimResult::live_ops_complete() const {
    for (std::size_t i = 0; i < item_ops.size(); ++i) {
        const auto& item = item_ops[i];
        if (!item) {
            if (crashed.contains(item_process.at(i))) continue;
            return false;
        }
        const auto* op = history.find(*item);
        if (op == nullptr) return false;
        if (!op->complete() && !crashed.contains(op->process)) return false;
    }
    return true;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

ordered_json tagged_json(const TaggedValue& t) { return ordered_json::array({t.seq, t.val}); }

ordered_json vector_json(const VersionedVector& v) {
    auto out = ordered_json::array();
    for (const auto& e : v) out.push_back(tagged_json(e));
    return out;
}

ordered_json message_json(const Message& m) {
    ordered_json j;
    j["from"] = m.from;
    j["to"] = m.to;
    j["type"] = to_string(m.type);
    j["instance"] = m.instance;
    j["exchange"] = m.exchange;
    j["seq"] = m.seq;
    j["value"] = tagged_json(m.value);
    if (!m.vector.empty()) j["vector"] = vector_json(m.vector);
    j["op"] = m.op;
    return j;
}

ordered_json cell_json(const CellKey& c) {
    return ordered_json{{"instance", c.instance}, {"memory", c.memory}, {"owner", c.owner}};
}

ordered_json result_json(const OpResult& r) {
    ordered_json j = ordered_json::object();
    if (r.tagged) j["tagged"] = tagged_json(*r.tagged);
    if (!r.vector.empty()) j["vector"] = vector_json(r.vector);
    if (r.value) j["value"] = *r.value;
    return j;
}

ordered_json request_json(const OpRequest& req) {
    return std::visit(
        [](const auto& r) -> ordered_json {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, request::Write>) return {{"op", "write"}, {"value", r.value}};
            else if constexpr (std::is_same_v<T, request::Read>) return {{"op", "read"}};
            else if constexpr (std::is_same_v<T, request::BatchWrite>) return {{"op", "batch_write"}, {"value", r.value}};
            else if constexpr (std::is_same_v<T, request::Collect>) return {{"op", "collect"}};
            else if constexpr (std::is_same_v<T, request::Sdc>) return {{"op", "sdc"}};
            else if constexpr (std::is_same_v<T, request::Coin>) return {{"op", "coin"}};
            else return {{"op", "propose"}, {"input", r.input}};
        },
        req);
}

using Node = std::variant<RegisterNode, BatchNode>;

// A memory access or flip, plus the non-local actions that follow it.
struct Segment {
    Action local;
    std::vector<Action> trailing;
    std::size_t read_index = 0;
    std::vector<VersionedVector> read_buffer;
};

struct Proc {
    bool crashed = false;
    std::deque<Segment> local;
    std::vector<std::size_t> items;  // workload indices, in order
    std::size_t next_item = 0;
    std::optional<std::size_t> invoking;
    std::size_t rr_inner = 0;
    std::mt19937_64 flip_rng;
};

struct Choice {
    enum class Kind : std::uint8_t { Local, Invoke, Deliver } kind;
    ProcessId process;
    ProcessId from = 0;
};

class Simulation {
public:
    explicit Simulation(const SimConfig& config);
    SimResult execute();

private:
    void validate() const;
    bool op_done(std::size_t item) const;
    bool can_invoke(ProcessId p) const;
    std::vector<Choice> enabled() const;
    std::size_t choose(const std::vector<Choice>& options);
    void step(const Choice& c);
    void crash(ProcessId p);

    void handle(ProcessId p, Actions actions);
    void perform(ProcessId p, const Action& a);
    void local_step(ProcessId p);
    void ensure_instance(InstanceId inst);
    Actions feed(ProcessId p, const Event& e);
    void record(ProcessId p, const char* action, ordered_json detail);

    std::deque<Message>& channel(ProcessId from, ProcessId to) { return channels_[from * n_ + to]; }
    const std::deque<Message>& channel(ProcessId from, ProcessId to) const { return channels_[from * n_ + to]; }

    SimConfig cfg_;
    std::size_t n_;
    std::vector<Node> nodes_;
    std::vector<Proc> procs_;
    std::vector<std::deque<Message>> channels_;
    std::map<CellKey, VersionedVector> memory_;
    std::set<InstanceId> instances_;
    std::vector<std::pair<MemoryId, ProcessId>> all_cells_;
    std::vector<CrashPoint> crashes_;
    std::size_t next_crash_ = 0;
    std::map<OpId, std::size_t> op_index_;
    std::map<OpId, std::size_t> item_of_op_;
    std::mt19937_64 sched_rng_;
    std::size_t script_pos_ = 0;
    std::size_t rr_next_ = 0;
    Tick tick_ = 0;
    SimResult result_;
};

Simulation::Simulation(const SimConfig& config) : cfg_(config), n_(0) {
    cfg_.topology = normalize(cfg_.topology);
    validate();
    n_ = cfg_.topology.n;
    sched_rng_.seed(cfg_.seed);
    channels_.resize(n_ * n_);
    procs_.resize(n_);
    const auto quorum = quorum_for(cfg_.topology, cfg_.f, cfg_.cluster_quorum);
    for (ProcessId p = 0; p < n_; ++p) {
        auto layout = make_layout(cfg_.topology, p, quorum);
        if (cfg_.protocol == ProtocolKind::Register)
            nodes_.emplace_back(RegisterNode(RegisterConfig{layout, cfg_.writer, cfg_.initial}));
        else
            nodes_.emplace_back(BatchNode(BatchConfig{layout, cfg_.initial, cfg_.c}));
        procs_[p].flip_rng.seed(splitmix64(cfg_.seed ^ splitmix64(p + 1)));
    }
    for (std::size_t i = 0; i < cfg_.workload.size(); ++i) procs_[cfg_.workload[i].process].items.push_back(i);
    for (std::size_t m = 0; m < cfg_.topology.memories.size(); ++m)
        for (auto owner : cfg_.topology.memories[m].writers.to_vector())
            all_cells_.emplace_back(static_cast<MemoryId>(m), owner);
    crashes_ = cfg_.crash_plan;
    std::stable_sort(crashes_.begin(), crashes_.end(),
                     [](const CrashPoint& a, const CrashPoint& b) { return a.tick < b.tick; });
    result_.item_ops.assign(cfg_.workload.size(), std::nullopt);
    for (const auto& w : cfg_.workload) result_.item_process.push_back(w.process);
    result_.metrics.registers_allocated = all_cells_.size();
}

void Simulation::validate() const {
    const auto n = cfg_.topology.n;
    if (cfg_.f > n) throw ConfigError("f exceeds n");
    if (cfg_.step_budget == 0) throw ConfigError("step budget must be positive");
    if (cfg_.protocol == ProtocolKind::Register && cfg_.writer >= n) throw ConfigError("writer out of range");
    if (cfg_.protocol == ProtocolKind::Batched && !cfg_.c.valid()) throw ConfigError("coin threshold must exceed 1");
    for (const auto& c : cfg_.crash_plan)
        if (c.process >= n) throw ConfigError("crash plan names process " + std::to_string(c.process));
    for (std::size_t i = 0; i < cfg_.workload.size(); ++i) {
        const auto& w = cfg_.workload[i];
        const auto where = "workload item " + std::to_string(i) + ": ";
        if (w.process >= n) throw ConfigError(where + "process out of range");
        if (w.after && *w.after >= i) throw ConfigError(where + "may only wait for an earlier item");
        const bool single = std::holds_alternative<request::Write>(w.request) ||
                            std::holds_alternative<request::Read>(w.request);
        if (cfg_.protocol == ProtocolKind::Register) {
            if (!single) throw ConfigError(where + "register runs take only write and read");
            if (std::holds_alternative<request::Write>(w.request) && w.process != cfg_.writer)
                throw ConfigError(where + "only the writer may write");
        } else {
            if (single) throw ConfigError(where + "batched runs do not take single-register operations");
            if (const auto* p = std::get_if<request::Propose>(&w.request); p && p->input != 0 && p->input != 1)
                throw ConfigError(where + "consensus input must be 0 or 1");
        }
    }
}

bool Simulation::op_done(std::size_t item) const {
    const auto& op = result_.item_ops[item];
    if (!op) return false;
    return result_.history.ops[op_index_.at(*op)].complete();
}

bool Simulation::can_invoke(ProcessId p) const {
    const auto& pr = procs_[p];
    if (pr.next_item >= pr.items.size()) return false;
    const bool busy = std::visit([](const auto& node) { return node.busy(); }, nodes_[p]);
    if (busy) return false;
    const auto& item = cfg_.workload[pr.items[pr.next_item]];
    return !item.after || op_done(*item.after);
}

std::vector<Choice> Simulation::enabled() const {
    std::vector<Choice> out;
    for (ProcessId p = 0; p < n_; ++p) {
        const auto& pr = procs_[p];
        if (pr.crashed) continue;
        if (!pr.local.empty()) {
            out.push_back({Choice::Kind::Local, p});
            continue;
        }
        if (can_invoke(p)) out.push_back({Choice::Kind::Invoke, p});
        for (ProcessId q = 0; q < n_; ++q)
            if (!channel(q, p).empty()) out.push_back({Choice::Kind::Deliver, p, q});
    }
    return out;
}

std::size_t Simulation::choose(const std::vector<Choice>& options) {
    const auto k = options.size();
    if (cfg_.immediate_self_delivery)
        for (std::size_t i = 0; i < k; ++i)
            if (options[i].kind == Choice::Kind::Deliver && options[i].from == options[i].process) return i;

    auto uniform = [&](std::size_t count) { return static_cast<std::size_t>(sched_rng_() % count); };

    return std::visit(
        [&](const auto& adv) -> std::size_t {
            using T = std::decay_t<decltype(adv)>;
            if constexpr (std::is_same_v<T, adversary::Random>) {
                return uniform(k);
            } else if constexpr (std::is_same_v<T, adversary::RoundRobin>) {
                for (std::size_t off = 0; off < n_; ++off) {
                    const auto p = static_cast<ProcessId>((rr_next_ + off) % n_);
                    std::vector<std::size_t> mine;
                    for (std::size_t i = 0; i < k; ++i)
                        if (options[i].process == p) mine.push_back(i);
                    if (mine.empty()) continue;
                    rr_next_ = p + 1;
                    return mine[procs_[p].rr_inner++ % mine.size()];
                }
                return 0;
            } else if constexpr (std::is_same_v<T, adversary::Partition>) {
                std::vector<std::size_t> allowed;
                for (std::size_t i = 0; i < k; ++i) {
                    const auto& c = options[i];
                    const bool cross = c.kind == Choice::Kind::Deliver && tick_ < adv.release_tick &&
                                       ((adv.group_a.contains(c.from) && adv.group_b.contains(c.process)) ||
                                        (adv.group_b.contains(c.from) && adv.group_a.contains(c.process)));
                    if (!cross) allowed.push_back(i);
                }
                if (allowed.empty()) return uniform(k);
                return allowed[uniform(allowed.size())];
            } else {
                if (script_pos_ < adv.choices.size()) return adv.choices[script_pos_++] % k;
                return uniform(k);
            }
        },
        cfg_.adversary);
}

void Simulation::record(ProcessId p, const char* action, ordered_json detail) {
    if (!cfg_.record_trace) return;
    result_.trace.push_back({tick_, p, action, std::move(detail)});
}

Actions Simulation::feed(ProcessId p, const Event& e) {
    return std::visit([&](auto& node) { return node.on_event(e); }, nodes_[p]);
}

void Simulation::crash(ProcessId p) {
    auto& pr = procs_[p];
    if (pr.crashed) return;
    pr.crashed = true;
    pr.local.clear();
    for (ProcessId q = 0; q < n_; ++q) {
        channel(p, q).clear();
        channel(q, p).clear();
    }
    result_.crashed.insert(p);
    record(p, "crash", ordered_json::object());
}

void Simulation::ensure_instance(InstanceId inst) {
    if (!instances_.insert(inst).second) return;
    const auto width = cfg_.protocol == ProtocolKind::Register ? 1 : n_;
    for (auto [mu, owner] : all_cells_)
        memory_.emplace(CellKey{inst, mu, owner}, VersionedVector(width, TaggedValue{0, cfg_.initial}));
}

void Simulation::perform(ProcessId p, const Action& a) {
    auto& metrics = result_.metrics;
    std::visit(
        [&](const auto& act) {
            using T = std::decay_t<decltype(act)>;
            if constexpr (std::is_same_v<T, SendAction>) {
                const auto& m = act.message;
                auto& om = metrics.per_op[m.op];
                (is_request(m.type) ? om.requests_sent : om.acks_sent)++;
                ++metrics.messages_sent;
                record(p, "send", message_json(m));
                if (!procs_[m.to].crashed) channel(m.from, m.to).push_back(m);
            } else if constexpr (std::is_same_v<T, OpStartedAction>) {
                OpRecord rec;
                rec.id = act.op;
                rec.process = p;
                rec.kind = act.kind;
                rec.instance = act.instance;
                rec.parent = act.parent;
                rec.invoke_tick = tick_;
                rec.arg = act.arg;
                rec.write_seq = act.write_seq;
                op_index_[act.op] = result_.history.ops.size();
                result_.history.ops.push_back(rec);
                metrics.per_op[act.op];
                if (!act.parent && procs_[p].invoking) {
                    const auto item = *procs_[p].invoking;
                    procs_[p].invoking.reset();
                    result_.item_ops[item] = act.op;
                    item_of_op_[act.op] = item;
                }
                ordered_json d{{"op", act.op}, {"kind", to_string(act.kind)}, {"instance", act.instance}};
                d["parent"] = act.parent ? ordered_json(*act.parent) : ordered_json(nullptr);
                d["arg"] = act.arg;
                d["write_seq"] = act.write_seq;
                record(p, "op_start", std::move(d));
            } else if constexpr (std::is_same_v<T, OpFinishedAction>) {
                auto& rec = result_.history.ops.at(op_index_.at(act.op));
                rec.response_tick = tick_;
                rec.result = act.result;
                record(p, "op_end", {{"op", act.op}, {"result", result_json(act.result)}});
            } else if constexpr (std::is_same_v<T, ExchangeDoneAction>) {
                auto& om = metrics.per_op[act.op];
                ++om.round_trips;
                om.exchanges.push_back({act.request, act.responders, act.represented});
                record(p, "exchange_done",
                       {{"op", act.op},
                        {"request", to_string(act.request)},
                        {"responders", act.responders},
                        {"represented", act.represented}});
            } else {
                throw std::logic_error("local action performed as immediate");
            }
        },
        a);
}

void Simulation::handle(ProcessId p, Actions actions) {
    auto& pr = procs_[p];
    Segment* open = nullptr;
    for (auto& a : actions) {
        if (is_local_step(a)) {
            pr.local.push_back(Segment{std::move(a), {}, 0, {}});
            open = &pr.local.back();
        } else if (open != nullptr) {
            open->trailing.push_back(std::move(a));
        } else {
            perform(p, a);
        }
    }
}

void Simulation::local_step(ProcessId p) {
    auto& pr = procs_[p];
    auto& seg = pr.local.front();
    const auto& topo = cfg_.topology;
    auto& metrics = result_.metrics;
    std::optional<Event> follow_up;
    bool finished = true;

    if (const auto* w = std::get_if<MemWriteAction>(&seg.local)) {
        const auto& c = w->cell;
        if (c.memory >= topo.memories.size() || c.owner != p || !topo.memories[c.memory].writers.contains(p))
            throw AccessViolation("process " + std::to_string(p) + " may not write memory " +
                                  std::to_string(c.memory) + " cell " + std::to_string(c.owner));
        ensure_instance(c.instance);
        auto& cell = memory_.at(c);
        for (const auto& [slot, tv] : w->updates) {
            if (slot >= cell.size()) throw AccessViolation("slot out of range in memory " + std::to_string(c.memory));
            cell[slot] = tv;
        }
        ++metrics.per_op[w->op].sm_writes;
        ++metrics.sm_writes;
        auto upd = ordered_json::array();
        for (const auto& [slot, tv] : w->updates) upd.push_back({slot, tagged_json(tv)});
        record(p, "mem_write", {{"cell", cell_json(c)}, {"updates", upd}, {"op", w->op}});
    } else if (const auto* r = std::get_if<MemReadAction>(&seg.local)) {
        const auto& c = r->cells.at(seg.read_index);
        if (c.memory >= topo.memories.size() || !topo.memories[c.memory].readers.contains(p) ||
            !topo.memories[c.memory].writers.contains(c.owner))
            throw AccessViolation("process " + std::to_string(p) + " may not read memory " +
                                  std::to_string(c.memory) + " cell " + std::to_string(c.owner));
        ensure_instance(c.instance);
        const auto& cell = memory_.at(c);
        seg.read_buffer.push_back(cell);
        ++metrics.per_op[r->op].sm_reads;
        ++metrics.sm_reads;
        record(p, "mem_read", {{"cell", cell_json(c)}, {"content", vector_json(cell)}, {"op", r->op}});
        if (++seg.read_index < r->cells.size()) {
            finished = false;
        } else {
            follow_up = ReadDoneEvent{std::move(seg.read_buffer)};
        }
    } else {
        const auto& fl = std::get<FlipAction>(seg.local);
        const int outcome = (pr.flip_rng() & 1) ? 1 : -1;
        ++metrics.per_op[fl.op].flips;
        ++metrics.flips;
        record(p, "flip", {{"op", fl.op}, {"outcome", outcome}});
        follow_up = FlipDoneEvent{outcome};
    }
    if (!finished) return;

    auto trailing = std::move(seg.trailing);
    pr.local.pop_front();
    handle(p, std::move(trailing));
    if (follow_up) handle(p, feed(p, *follow_up));
}

void Simulation::step(const Choice& c) {
    const auto p = c.process;
    switch (c.kind) {
        case Choice::Kind::Local: local_step(p); break;
        case Choice::Kind::Invoke: {
            auto& pr = procs_[p];
            const auto item = pr.items[pr.next_item++];
            const auto& req = cfg_.workload[item].request;
            if (const auto* prop = std::get_if<request::Propose>(&req)) result_.history.inputs.push_back(prop->input);
            pr.invoking = item;
            auto detail = request_json(req);
            detail["item"] = item;
            record(p, "invoke", std::move(detail));
            handle(p, feed(p, InvokeEvent{req}));
            break;
        }
        case Choice::Kind::Deliver: {
            auto& ch = channel(c.from, p);
            auto m = std::move(ch.front());
            ch.pop_front();
            record(p, "deliver", message_json(m));
            handle(p, feed(p, DeliverEvent{std::move(m)}));
            break;
        }
    }
}

SimResult Simulation::execute() {
    ensure_instance(0);
    auto status = RunStatus::Completed;
    for (;;) {
        if (tick_ >= cfg_.step_budget) {
            status = RunStatus::BudgetExhausted;
            break;
        }
        if (next_crash_ < crashes_.size() && crashes_[next_crash_].tick <= tick_) {
            crash(crashes_[next_crash_++].process);
            ++tick_;
            continue;
        }
        const auto options = enabled();
        if (options.empty()) {
            break;
        }
        step(options[choose(options)]);
        ++tick_;
    }
    result_.ticks = tick_;
    result_.metrics.instances_used = instances_.size();
    result_.status = status;
    if (status == RunStatus::Completed && !result_.live_ops_complete()) result_.status = RunStatus::Stalled;
    return std::move(result_);
}

}  // namespace

SimResult run(const SimConfig& config) {
    Simulation sim(config);
    return sim.execute();
}

// Export --------------------------------------------------------------------------------------

void write_trace_jsonl(std::ostream& out, const Trace& trace) {
    for (const auto& r : trace) {
        ordered_json j;
        j["tick"] = r.tick;
        j["process"] = r.process;
        j["action"] = r.action;
        j["detail"] = r.detail;
        out << j.dump() << '\n';
    }
}

std::string trace_jsonl(const Trace& trace) {
    std::ostringstream os;
    write_trace_jsonl(os, trace);
    return os.str();
}

ordered_json op_to_json(const OpRecord& op) {
    ordered_json j;
    j["id"] = op.id;
    j["process"] = op.process;
    j["kind"] = to_string(op.kind);
    j["instance"] = op.instance;
    j["parent"] = op.parent ? ordered_json(*op.parent) : ordered_json(nullptr);
    j["invoke_tick"] = op.invoke_tick;
    j["response_tick"] = op.response_tick ? ordered_json(*op.response_tick) : ordered_json(nullptr);
    j["arg"] = op.arg;
    j["write_seq"] = op.write_seq;
    j["result"] = op.result ? result_json(*op.result) : ordered_json(nullptr);
    return j;
}

ordered_json metrics_to_json(const Metrics& metrics) {
    ordered_json j;
    j["registers_allocated"] = metrics.registers_allocated;
    j["instances_used"] = metrics.instances_used;
    j["messages_sent"] = metrics.messages_sent;
    j["sm_reads"] = metrics.sm_reads;
    j["sm_writes"] = metrics.sm_writes;
    j["flips"] = metrics.flips;
    auto ops = ordered_json::array();
    for (const auto& [id, m] : metrics.per_op) {
        ordered_json o;
        o["op"] = id;
        o["messages_sent"] = m.messages_sent();
        o["requests_sent"] = m.requests_sent;
        o["acks_sent"] = m.acks_sent;
        o["round_trips"] = m.round_trips;
        o["sm_reads"] = m.sm_reads;
        o["sm_writes"] = m.sm_writes;
        o["flips"] = m.flips;
        auto ex = ordered_json::array();
        for (const auto& e : m.exchanges)
            ex.push_back({{"request", to_string(e.request)}, {"responders", e.responders}, {"represented", e.represented}});
        o["exchanges"] = ex;
        ops.push_back(o);
    }
    j["per_op"] = ops;
    return j;
}

// Scenarios ---------------------------------------------------------------------------------------

PartitionScenario partition_scenario(const MixedTopology& topology, std::size_t f, std::uint64_t seed) {
    const auto topo = normalize(topology);
    validate(topo);
    if (f >= topo.n) throw ConfigError("f must be smaller than n");
    auto witness = is_f_partitionable(read_relation(topo), f);
    if (!witness) throw ConfigError("not partitionable at f = " + std::to_string(f));

    PartitionScenario s;
    s.witness = *witness;
    s.writer = witness->q.to_vector().front();
    s.reader = witness->p.to_vector().front();
    auto& cfg = s.config;
    cfg.topology = topo;
    cfg.f = f;
    cfg.seed = seed;
    cfg.writer = s.writer;
    cfg.protocol = ProtocolKind::Register;
    cfg.adversary = adversary::Partition{witness->q, witness->p, kNever};
    for (auto p : (ProcessSet::all(topo.n) - (witness->p | witness->q)).to_vector()) cfg.crash_plan.push_back({p, 0});
    cfg.workload.push_back({s.writer, request::Write{s.written}, std::nullopt});
    cfg.workload.push_back({s.reader, request::Read{}, 0});
    return s;
}

ComplexityReport measure_complexities(const History& history, const Metrics& metrics, const MixedTopology& topology) {
    ComplexityReport rep;
    const auto n = topology.n;
    const auto rs = compute_rho_sigma(normalize(topology));
    auto problem = [&](std::string text) {
        rep.ok = false;
        rep.problems.push_back(std::move(text));
    };
    if (metrics.registers_allocated != rs.rho)
        problem("registers allocated " + std::to_string(metrics.registers_allocated) + " != rho " +
                std::to_string(rs.rho));
    for (const auto& op : history.ops) {
        if (op.parent) continue;
        const auto name = std::string(to_string(op.kind)) + " op " + std::to_string(op.id);
        if (!op.complete()) {
            problem(name + " did not complete");
            continue;
        }
        auto it = metrics.per_op.find(op.id);
        if (it == metrics.per_op.end()) {
            problem(name + " has no metrics");
            continue;
        }
        const auto& m = it->second;
        std::size_t want_requests = 0, want_trips = 0;
        if (op.kind == OpKind::Write) {
            ++rep.writes;
            want_requests = n;
            want_trips = 1;
        } else if (op.kind == OpKind::Read) {
            ++rep.reads;
            want_requests = 2 * n;
            want_trips = 2;
        } else {
            problem(name + " is not a register operation");
            continue;
        }
        if (m.requests_sent != want_requests)
            problem(name + ": " + std::to_string(m.requests_sent) + " request messages, expected " +
                    std::to_string(want_requests));
        if (m.round_trips != want_trips)
            problem(name + ": " + std::to_string(m.round_trips) + " round trips, expected " +
                    std::to_string(want_trips));
        if (m.acks_sent > want_requests) problem(name + ": more acks than requests");
        if (m.sm_reads > rs.sigma)
            problem(name + ": " + std::to_string(m.sm_reads) + " shared reads exceed sigma " +
                    std::to_string(rs.sigma));
        if (m.sm_writes > rs.rho)
            problem(name + ": " + std::to_string(m.sm_writes) + " shared writes exceed rho " +
                    std::to_string(rs.rho));
    }
    return rep;
}

// Batch execution -------------------------------------------------------------------------------------

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn, unsigned threads) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const auto i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = count;
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace mixsim
