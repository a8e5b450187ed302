#include "mixsim/experiments.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace mixsim {

AdversaryKind parse_adversary(const std::string& name) {
    if (name == "random") return AdversaryKind::Random;
    if (name == "round-robin") return AdversaryKind::RoundRobin;
    if (name == "partition") return AdversaryKind::Partition;
    throw std::invalid_argument("unknown adversary '" + name + "'");
}

const char* to_string(AdversaryKind k) {
    switch (k) {
        case AdversaryKind::Random: return "random";
        case AdversaryKind::RoundRobin: return "round-robin";
        case AdversaryKind::Partition: return "partition";
    }
    return "?";
}

namespace {

// Crash a random number in [0, max_crashes] of distinct processes at random ticks.
std::vector<CrashPoint> random_crashes(std::mt19937_64& rng, std::size_t n, std::size_t max_crashes, Tick horizon) {
    std::vector<ProcessId> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    const auto k = static_cast<std::size_t>(rng() % (std::min(max_crashes, n) + 1));
    std::vector<CrashPoint> out;
    for (std::size_t i = 0; i < k; ++i) {
        const auto j = i + static_cast<std::size_t>(rng() % (n - i));
        std::swap(ids[i], ids[j]);
        out.push_back({ids[i], static_cast<Tick>(rng() % (horizon + 1))});
    }
    return out;
}

std::mt19937_64 run_rng(std::uint64_t seed) { return std::mt19937_64(seed * 0x9e3779b97f4a7c15ULL + 17); }

RunFailure failure(const SimConfig& cfg, const SimResult& res, Verdict v) {
    return {cfg.seed, to_string(res.status), std::move(v)};
}

nlohmann::ordered_json failures_json(const std::vector<RunFailure>& failures) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& f : failures)
        arr.push_back({{"seed", f.seed}, {"status", f.status}, {"verdict", to_json(f.verdict)}});
    return arr;
}

}  // namespace

// Register ---------------------------------------------------------------------------------

SimConfig register_run_config(const RegisterExperimentConfig& cfg, std::size_t i) {
    SimConfig sc;
    sc.topology = normalize(cfg.topology);
    const auto n = sc.topology.n;
    sc.f = cfg.f;
    sc.seed = cfg.seed + i;
    sc.cluster_quorum = cfg.cluster_quorum;
    sc.record_trace = false;
    auto rng = run_rng(sc.seed);
    sc.crash_plan = random_crashes(rng, n, std::min(cfg.max_crashes, cfg.f), 30 * n * cfg.ops);
    switch (cfg.adversary) {
        case AdversaryKind::Random: break;
        case AdversaryKind::RoundRobin: sc.adversary = adversary::RoundRobin{}; break;
        case AdversaryKind::Partition: {
            const auto half = ProcessSet::all(n / 2);
            sc.adversary = adversary::Partition{half, ProcessSet::all(n) - half, 20 * n * cfg.ops};
            break;
        }
    }
    for (std::size_t k = 0; k < cfg.ops; ++k) sc.workload.push_back({0, request::Write{static_cast<Value>(100 + k)}, {}});
    for (ProcessId p = 1; p < n; ++p)
        for (std::size_t k = 0; k < cfg.ops; ++k) sc.workload.push_back({p, request::Read{}, {}});
    return sc;
}

RegisterExperiment register_experiment(const RegisterExperimentConfig& cfg) {
    struct Slot {
        bool atomic = false, live = false, complexity_checked = false, complexity = false;
        std::vector<std::size_t> responders;
        std::optional<RunFailure> fail;
    };
    std::vector<Slot> slots(cfg.runs);
    parallel_for(
        cfg.runs,
        [&](std::size_t i) {
            const auto sc = register_run_config(cfg, i);
            const auto res = run(sc);
            auto& s = slots[i];
            auto verdict = check_atomic_swmr(res.history, sc.initial);
            s.atomic = verdict.ok;
            s.live = res.status == RunStatus::Completed && res.live_ops_complete();
            if (!s.live) verdict.add("liveness", {}, std::string("run ended ") + to_string(res.status));
            if (sc.crash_plan.empty()) {
                s.complexity_checked = true;
                const auto rep = measure_complexities(res.history, res.metrics, sc.topology);
                s.complexity = rep.ok;
                for (const auto& p : rep.problems) verdict.add("complexity", {}, p);
            }
            for (const auto& [op, m] : res.metrics.per_op)
                for (const auto& e : m.exchanges) s.responders.push_back(e.responders);
            if (!verdict.ok) s.fail = failure(sc, res, std::move(verdict));
        },
        cfg.threads);

    RegisterExperiment out;
    out.runs = cfg.runs;
    std::size_t total = 0, count = 0;
    out.min_responders = std::numeric_limits<std::size_t>::max();
    for (auto& s : slots) {
        out.atomic_ok += s.atomic;
        out.live_complete += s.live;
        out.complexity_checked += s.complexity_checked;
        out.complexity_ok += s.complexity;
        for (auto r : s.responders) {
            out.min_responders = std::min(out.min_responders, r);
            out.max_responders = std::max(out.max_responders, r);
            total += r;
            ++count;
        }
        if (s.fail) out.failures.push_back(std::move(*s.fail));
    }
    if (count == 0) out.min_responders = 0;
    out.mean_responders = count ? static_cast<double>(total) / static_cast<double>(count) : 0;
    return out;
}

nlohmann::ordered_json to_json(const RegisterExperiment& e) {
    nlohmann::ordered_json j;
    j["runs"] = e.runs;
    j["atomic_ok"] = e.atomic_ok;
    j["live_complete"] = e.live_complete;
    j["complexity_checked"] = e.complexity_checked;
    j["complexity_ok"] = e.complexity_ok;
    j["responders"] = {{"min", e.min_responders}, {"max", e.max_responders}, {"mean", e.mean_responders}};
    j["failures"] = failures_json(e.failures);
    return j;
}

// Collect / SDC -----------------------------------------------------------------------------

CollectExperiment collect_experiment(const CollectExperimentConfig& cfg) {
    std::vector<std::optional<RunFailure>> fails(cfg.runs);
    std::vector<int> collect_ok(cfg.runs), sdc_ok(cfg.runs);
    std::vector<std::size_t> sdc_returns(cfg.runs);
    parallel_for(
        cfg.runs,
        [&](std::size_t i) {
            SimConfig sc;
            sc.topology = normalize(cfg.topology);
            const auto n = sc.topology.n;
            sc.f = cfg.f;
            sc.seed = cfg.seed + i;
            sc.protocol = ProtocolKind::Batched;
            sc.record_trace = false;
            auto rng = run_rng(sc.seed);
            sc.crash_plan = random_crashes(rng, n, std::min(cfg.max_crashes, cfg.f), 60 * n * cfg.ops);
            Value v = 1;
            for (std::size_t k = 0; k < cfg.ops; ++k)
                for (ProcessId p = 0; p < n; ++p) {
                    switch (rng() % 3) {
                        case 0: sc.workload.push_back({p, request::BatchWrite{v++}, {}}); break;
                        case 1: sc.workload.push_back({p, request::Collect{}, {}}); break;
                        default: sc.workload.push_back({p, request::Sdc{}, {}}); break;
                    }
                }
            const auto res = run(sc);
            auto verdict = check_collect_regularity(res.history, sc.initial);
            collect_ok[i] = verdict.ok;
            const auto sdcs = sdc_vectors(res.history);
            sdc_returns[i] = sdcs.size();
            const auto chain = check_sdc_chain(sdcs);
            sdc_ok[i] = chain.ok;
            verdict.merge(chain);
            if (res.status != RunStatus::Completed || !res.live_ops_complete())
                verdict.add("liveness", {}, std::string("run ended ") + to_string(res.status));
            if (!verdict.ok) fails[i] = failure(sc, res, std::move(verdict));
        },
        cfg.threads);
    CollectExperiment out;
    out.runs = cfg.runs;
    for (std::size_t i = 0; i < cfg.runs; ++i) {
        out.collect_ok += collect_ok[i];
        out.sdc_ok += sdc_ok[i];
        out.sdc_returns += sdc_returns[i];
        if (fails[i]) out.failures.push_back(std::move(*fails[i]));
    }
    return out;
}

// Coin ----------------------------------------------------------------------------------------

SimConfig coin_run_config(const CoinExperimentConfig& cfg, std::size_t i) {
    SimConfig sc;
    sc.topology = normalize(cfg.topology ? *cfg.topology : pure_mp(cfg.n));
    const auto n = sc.topology.n;
    sc.f = cfg.f ? *cfg.f : compute_f_opt(read_relation(sc.topology));
    sc.seed = cfg.seed + i;
    sc.protocol = ProtocolKind::Batched;
    sc.c = cfg.c;
    sc.record_trace = false;
    for (ProcessId p = 0; p < n; ++p) sc.workload.push_back({p, request::Coin{}, {}});
    return sc;
}

CoinExperiment coin_experiment(const CoinExperimentConfig& cfg) {
    std::vector<CoinRun> runs(cfg.runs);
    std::vector<int> done(cfg.runs);
    parallel_for(
        cfg.runs,
        [&](std::size_t i) {
            const auto sc = coin_run_config(cfg, i);
            const auto res = run(sc);
            done[i] = res.status == RunStatus::Completed;
            for (const auto& item : res.item_ops) {
                if (!item) continue;
                const auto* op = res.history.find(*item);
                if (op && op->complete() && op->result && op->result->value) runs[i].outcomes.push_back(*op->result->value);
            }
            runs[i].flips = res.metrics.flips;
        },
        cfg.threads);
    CoinExperiment out;
    out.stats = coin_statistics(runs, cfg.c);
    out.terminated = static_cast<std::size_t>(std::count(done.begin(), done.end(), 1));
    return out;
}

// Consensus ------------------------------------------------------------------------------------

SimConfig consensus_run_config(const ConsensusExperimentConfig& cfg, std::size_t i) {
    SimConfig sc;
    sc.topology = normalize(cfg.topology);
    const auto n = sc.topology.n;
    sc.f = cfg.f;
    sc.seed = cfg.seed + i;
    sc.protocol = ProtocolKind::Batched;
    sc.c = cfg.c;
    sc.record_trace = false;
    auto rng = run_rng(sc.seed);
    sc.crash_plan = random_crashes(rng, n, std::min(cfg.max_crashes, cfg.f), 400 * n);
    // Mixed inputs: both values appear whenever n >= 2.
    std::vector<Value> inputs(n);
    for (auto& v : inputs) v = static_cast<Value>(rng() & 1);
    if (n >= 2) {
        const auto a = static_cast<std::size_t>(rng() % n);
        const auto b = (a + 1 + static_cast<std::size_t>(rng() % (n - 1))) % n;
        inputs[a] = 0;
        inputs[b] = 1;
    }
    for (ProcessId p = 0; p < n; ++p) sc.workload.push_back({p, request::Propose{inputs[p]}, {}});
    return sc;
}

ConsensusExperiment consensus_experiment(const ConsensusExperimentConfig& cfg) {
    struct Slot {
        bool terminated = false, agreement = false;
        std::optional<Value> decision;
        double rounds = 0;
        std::optional<RunFailure> fail;
    };
    std::vector<Slot> slots(cfg.runs);
    parallel_for(
        cfg.runs,
        [&](std::size_t i) {
            const auto sc = consensus_run_config(cfg, i);
            const auto res = run(sc);
            auto& s = slots[i];
            s.terminated = res.status == RunStatus::Completed && res.live_ops_complete();
            std::vector<Value> decisions;
            std::map<OpId, InstanceId> top_instance;
            for (const auto& item : res.item_ops) {
                if (!item) continue;
                const auto* op = res.history.find(*item);
                if (op && op->complete() && !res.crashed.contains(op->process)) decisions.push_back(*op->result->value);
                top_instance[*item] = 0;
            }
            for (const auto& op : res.history.ops)
                if (op.parent && top_instance.count(*op.parent))
                    top_instance[*op.parent] = std::max(top_instance[*op.parent], op.instance);
            InstanceId highest = 0;
            for (const auto& [op, inst] : top_instance) highest = std::max(highest, inst);
            s.rounds = (highest + 2) / 3;
            auto verdict = check_consensus(res.history.inputs, decisions);
            s.agreement = verdict.ok;
            if (!decisions.empty()) s.decision = decisions.front();
            if (!s.terminated) verdict.add("termination", {}, std::string("run ended ") + to_string(res.status));
            if (!verdict.ok) s.fail = failure(sc, res, std::move(verdict));
        },
        cfg.threads);
    ConsensusExperiment out;
    out.runs = cfg.runs;
    double rounds = 0;
    for (auto& s : slots) {
        out.terminated += s.terminated;
        out.agreement_ok += s.agreement;
        if (s.decision) (*s.decision == 0 ? out.decided_0 : out.decided_1)++;
        rounds += s.rounds;
        if (s.fail) out.failures.push_back(std::move(*s.fail));
    }
    out.mean_rounds = cfg.runs ? rounds / static_cast<double>(cfg.runs) : 0;
    return out;
}

nlohmann::ordered_json to_json(const ConsensusExperiment& e) {
    nlohmann::ordered_json j;
    j["runs"] = e.runs;
    j["terminated"] = e.terminated;
    j["agreement_validity_ok"] = e.agreement_ok;
    j["decided_0"] = e.decided_0;
    j["decided_1"] = e.decided_1;
    j["mean_rounds"] = e.mean_rounds;
    j["failures"] = failures_json(e.failures);
    return j;
}

}  // namespace mixsim
