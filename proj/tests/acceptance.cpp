// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "mixsim/experiments.hpp"
#include "mixsim/topology_io.hpp"
#include "oracles.hpp"

#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

using namespace mixsim;

namespace {

std::string fixture(const std::string& name) { return std::string(MIXSIM_FIXTURES) + "/" + name; }

std::size_t f_opt_of(const MixedTopology& t) { return compute_f_opt(read_relation(normalize(t))); }

struct Outcome {
    bool ok = true;
    std::ostringstream note;

    void expect(bool cond, const std::string& what) {
        if (!cond) {
            if (!ok) note << "; ";
            note << what;
            ok = false;
        }
    }
};

int failures = 0;

void criterion(int id, const char* title, const std::function<void(Outcome&)>& body) {
    Outcome o;
    try {
        body(o);
    } catch (const std::exception& e) {
        o.expect(false, std::string("exception: ") + e.what());
    }
    std::printf("%s %2d %s%s%s\n", o.ok ? "PASS" : "FAIL", id, title, o.ok ? "" : " :: ", o.note.str().c_str());
    std::fflush(stdout);
    failures += !o.ok;
}

// 1. f_opt against brute force over random topologies.
void c1(Outcome& o) {
    std::mt19937_64 rng(101);
    for (int i = 0; i < 200; ++i) {
        const std::size_t n = 2 + rng() % 7;
        const auto t = oracle::random_topology(rng, n);
        const auto got = compute_f_opt(read_relation(t));
        const auto want = oracle::f_opt(oracle::matrix_of(t));
        o.expect(got == want, "sample " + std::to_string(i) + ": " + std::to_string(got) + " != " + std::to_string(want));
    }
}

// 2. Closed forms.
void c2(Outcome& o) {
    for (std::size_t n = 2; n <= 10; ++n) {
        o.expect(f_opt_of(pure_mp(n)) == (n - 1) / 2, "pure mp n=" + std::to_string(n));
        MixedTopology shared;
        shared.n = n;
        MemorySpec m;
        for (ProcessId p = 0; p < n; ++p) {
            m.readers.insert(p);
            m.writers.insert(p);
        }
        shared.memories.push_back(m);
        o.expect(f_opt_of(shared) == n - 1, "single shared memory n=" + std::to_string(n));
    }
    const auto star = oracle::star(5);
    o.expect(compute_f_g(star) == 4, "star5 f_G");
    o.expect(f_opt_of(from_uniform_mm(star)) == 4, "star5 f_opt");
    const auto fx = load_topology(fixture("star5.json"));
    o.expect(analyze(fx).f_opt == 4, "star5 fixture");
}

// 3. Orderings between resilience parameters.
void c3(Outcome& o) {
    std::mt19937_64 rng(202);
    for (int i = 0; i < 200; ++i) {
        const auto t = oracle::random_topology(rng, 2 + rng() % 7);
        const auto rel = read_relation(t);
        const auto fo = compute_f_opt(rel), fm = compute_f_maj(rel);
        o.expect(fo <= fm, "f_opt > f_maj on sample " + std::to_string(i));
        o.expect(fm == oracle::f_maj(oracle::matrix_of(t)), "f_maj oracle mismatch on sample " + std::to_string(i));
    }
    for (int i = 0; i < 200; ++i) {
        const std::size_t n = 1 + rng() % 10;
        const auto c = oracle::random_clustering(rng, n);
        const auto rel = read_relation(from_clusters(c));
        const auto fo = compute_f_opt(rel);
        o.expect(fo == compute_f_maj(rel), "cluster f_opt != f_maj on sample " + std::to_string(i));
        o.expect(fo == compute_f_cluster(c, n), "f_cluster mismatch on sample " + std::to_string(i));
    }
    for (int i = 0; i < 200; ++i) {
        const auto g = oracle::random_graph(rng, 2 + rng() % 8);
        const auto fmm = compute_f_mm(g);
        o.expect(fmm == oracle::f_mm(g), "f_mm oracle mismatch on graph " + std::to_string(i));
        o.expect(fmm <= compute_f_g(g), "f_mm > f_G on graph " + std::to_string(i));
        o.expect(compute_f_g(g) == oracle::f_g(g), "f_G oracle mismatch on graph " + std::to_string(i));
    }
    const auto star = oracle::star(5);
    o.expect(compute_f_mm(star) < compute_f_g(star), "star5 not strict");
    const auto gap = oracle::counterexample_n9();
    const auto rel = read_relation(from_uniform_mm(gap));
    o.expect(compute_f_opt(rel) == 6 && compute_f_maj(rel) == 7, "n=9 gap graph");
    const auto fx = analyze(load_topology(fixture("n9_gap.json")));
    o.expect(fx.f_opt == 6 && fx.f_maj == 7, "n9_gap fixture");
}

// 4. SM-cut exists iff the uniform system is partitionable.
void c4(Outcome& o) {
    std::mt19937_64 rng(303);
    for (int i = 0; i < 200; ++i) {
        const std::size_t n = 2 + rng() % 8;
        const auto g = oracle::random_graph(rng, n);
        const auto rel = read_relation(from_uniform_mm(g));
        for (std::size_t f = 0; f <= n; ++f) {
            const auto cut = find_sm_cut(g, f);
            const bool part = is_f_partitionable(rel, f).has_value();
            o.expect(cut.has_value() == part, "graph " + std::to_string(i) + " f=" + std::to_string(f));
            if (cut) o.expect(verify_sm_cut(g, *cut), "unverified cut on graph " + std::to_string(i));
        }
    }
}

std::string failure_note(const std::vector<RunFailure>& fs) {
    if (fs.empty()) return {};
    return "first failing seed " + std::to_string(fs.front().seed) + " (" + fs.front().status + ")";
}

// 5. Register runs at f = f_opt with crashes.
void c5(Outcome& o) {
    std::mt19937_64 rng(404);
    std::size_t runs = 0;
    for (int k = 0; k < 50; ++k) {
        RegisterExperimentConfig cfg;
        cfg.topology = normalize(oracle::random_topology(rng, 5));
        cfg.f = f_opt_of(cfg.topology);
        cfg.runs = 20;
        cfg.seed = 1000 + 20 * k;
        cfg.max_crashes = cfg.f;
        const auto e = register_experiment(cfg);
        runs += e.runs;
        o.expect(e.atomic_ok == e.runs, "atomicity on topology " + std::to_string(k) + ": " + failure_note(e.failures));
        o.expect(e.live_complete == e.runs, "liveness on topology " + std::to_string(k) + ": " + failure_note(e.failures));
    }
    o.expect(runs == 1000, "run count");
}

// 6. Above f_opt the partition scenario breaks regularity every time.
void c6(Outcome& o) {
    std::vector<MixedTopology> ts;
    for (const char* name : {"pure_mp5.json", "clusters_3_2.json", "mixed5.json", "n9_gap.json"})
        ts.push_back(load_topology(fixture(name)));
    std::mt19937_64 rng(505);
    while (ts.size() < 10) {
        auto t = normalize(oracle::random_topology(rng, 4 + rng() % 4));
        if (f_opt_of(t) + 1 < t.n) ts.push_back(t);
    }
    for (std::size_t k = 0; k < ts.size(); ++k) {
        const auto f = f_opt_of(ts[k]) + 1;
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            const auto s = partition_scenario(ts[k], f, seed);
            const auto res = run(s.config);
            const auto* w = res.history.find(*res.item_ops[0]);
            const auto* r = res.history.find(*res.item_ops[1]);
            const bool exhibited = w->complete() && r->complete() && *w->response_tick < r->invoke_tick &&
                                   !check_regular_swmr(res.history).ok;
            o.expect(exhibited, "topology " + std::to_string(k) + " seed " + std::to_string(seed));
        }
    }
}

// 7. Message and memory-access counts on failure-free runs.
void c7(Outcome& o) {
    std::vector<MixedTopology> ts{load_topology(fixture("pure_mp5.json")), load_topology(fixture("clusters_3_2.json")),
                                  load_topology(fixture("mixed5.json")), load_topology(fixture("star5.json"))};
    std::mt19937_64 rng(606);
    for (int i = 0; i < 6; ++i) ts.push_back(normalize(oracle::random_topology(rng, 3 + rng() % 4)));
    for (std::size_t k = 0; k < ts.size(); ++k) {
        RegisterExperimentConfig cfg;
        cfg.topology = ts[k];
        cfg.f = f_opt_of(ts[k]);
        cfg.runs = 20;
        cfg.seed = 7000 + 100 * k;
        const auto e = register_experiment(cfg);
        o.expect(e.complexity_checked == e.runs && e.complexity_ok == e.runs,
                 "topology " + std::to_string(k) + ": " + failure_note(e.failures));
    }
}

// 8. Collect regularity and SDC chains.
void c8(Outcome& o) {
    std::mt19937_64 rng(707);
    std::size_t runs = 0, sdc_returns = 0;
    for (int k = 0; k < 25; ++k) {
        CollectExperimentConfig cfg;
        cfg.topology = normalize(oracle::random_topology(rng, 4 + rng() % 2));
        cfg.f = f_opt_of(cfg.topology);
        cfg.runs = 20;
        cfg.seed = 8000 + 20 * k;
        cfg.max_crashes = cfg.f;
        const auto e = collect_experiment(cfg);
        runs += e.runs;
        sdc_returns += e.sdc_returns;
        o.expect(e.ok(), "topology " + std::to_string(k) + ": " + failure_note(e.failures));
        o.expect(e.collect_ok == e.runs && e.sdc_ok == e.runs, "topology " + std::to_string(k) + " verdict counts");
    }
    o.expect(runs == 500, "run count");
    o.expect(sdc_returns > 0, "no SDC returned");
}

// Mean flips per run stay below K n^2. Calibrated at 5.02 n^2 over seeds 1..500.
constexpr double kFlipConstant = 6.0;

// 9. Common coin.
void c9(Outcome& o) {
    CoinExperimentConfig cfg;
    cfg.n = 4;
    cfg.c = CoinThreshold{2, 1};
    cfg.runs = 500;
    cfg.seed = 1;
    const auto e = coin_experiment(cfg);
    o.expect(e.terminated == 500, "terminated " + std::to_string(e.terminated));
    o.expect(e.stats.bound_ok, "unanimity frequencies " + std::to_string(e.stats.freq_minus1) + "/" +
                                   std::to_string(e.stats.freq_plus1) + " below " + std::to_string(e.stats.threshold));
    o.expect(e.stats.freq_minus1 >= 0.183 && e.stats.freq_plus1 >= 0.183, "frequency below 0.183");
    o.expect(e.stats.mean_flips <= kFlipConstant * 16, "mean flips " + std::to_string(e.stats.mean_flips));
}

// 10. Consensus under crashes with mixed inputs.
void c10(Outcome& o) {
    std::mt19937_64 rng(909);
    std::vector<MixedTopology> ts{pure_mp(4)};
    while (ts.size() < 5) ts.push_back(normalize(oracle::random_topology(rng, 4)));
    std::size_t runs = 0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
        ConsensusExperimentConfig cfg;
        cfg.topology = ts[k];
        cfg.f = f_opt_of(ts[k]);
        cfg.runs = 100;
        cfg.seed = 10000 + 100 * k;
        cfg.c = CoinThreshold{2, 1};
        cfg.max_crashes = cfg.f;
        const auto e = consensus_experiment(cfg);
        runs += e.runs;
        o.expect(e.ok(), "topology " + std::to_string(k) + ": " + failure_note(e.failures));
        o.expect(e.terminated == e.runs && e.agreement_ok == e.runs, "topology " + std::to_string(k) + " counts");
    }
    o.expect(runs == 500, "run count");
}

// 11. Represented-process quorums on a cluster system.
void c11(Outcome& o) {
    RegisterExperimentConfig cfg;
    cfg.topology = load_topology(fixture("clusters_3_2.json"));
    cfg.f = 2;
    cfg.runs = 100;
    cfg.seed = 11000;
    const auto counted = register_experiment(cfg);
    cfg.cluster_quorum = true;
    const auto represented = register_experiment(cfg);
    o.expect(counted.ok() && represented.ok(), "failure-free runs");
    o.expect(represented.min_responders < counted.min_responders,
             "responders " + std::to_string(represented.min_responders) + " vs " + std::to_string(counted.min_responders));
    o.expect(represented.mean_responders < counted.mean_responders, "mean responders");
    cfg.max_crashes = 2;
    cfg.seed = 11500;
    const auto crashed = register_experiment(cfg);
    o.expect(crashed.atomic_ok == crashed.runs && crashed.live_complete == crashed.runs,
             "with crashes: " + failure_note(crashed.failures));
}

// 12. Trace exports are byte-identical across repeated runs and thread counts.
void c12(Outcome& o) {
    std::vector<SimConfig> cfgs;
    std::mt19937_64 rng(1212);
    for (int i = 0; i < 4; ++i) {
        RegisterExperimentConfig r;
        r.topology = normalize(oracle::random_topology(rng, 5));
        r.f = f_opt_of(r.topology);
        r.max_crashes = r.f;
        r.seed = 12000 + i;
        cfgs.push_back(register_run_config(r, 0));
    }
    CoinExperimentConfig coin;
    coin.seed = 12100;
    cfgs.push_back(coin_run_config(coin, 0));
    ConsensusExperimentConfig cons;
    cons.topology = pure_mp(4);
    cons.f = 1;
    cons.max_crashes = 1;
    cons.seed = 12200;
    cfgs.push_back(consensus_run_config(cons, 0));
    cfgs.push_back(partition_scenario(pure_mp(5), 3, 12300).config);
    // Experiment configs skip tracing by default.
    for (auto& c : cfgs) c.record_trace = true;

    std::vector<std::string> first(cfgs.size()), second(cfgs.size()), third(cfgs.size());
    for (std::size_t i = 0; i < cfgs.size(); ++i) first[i] = trace_jsonl(run(cfgs[i]).trace);
    parallel_for(cfgs.size(), [&](std::size_t i) { second[i] = trace_jsonl(run(cfgs[i]).trace); }, 1);
    parallel_for(cfgs.size(), [&](std::size_t i) { third[i] = trace_jsonl(run(cfgs[i]).trace); }, 4);
    for (std::size_t i = 0; i < cfgs.size(); ++i) {
        o.expect(!first[i].empty(), "empty trace " + std::to_string(i));
        o.expect(first[i] == second[i] && first[i] == third[i], "config " + std::to_string(i) + " differs");
    }

    RegisterExperimentConfig r;
    r.topology = load_topology(fixture("mixed5.json"));
    r.f = 2;
    r.runs = 40;
    r.max_crashes = 2;
    r.threads = 1;
    const auto a = to_json(register_experiment(r)).dump();
    r.threads = 4;
    o.expect(a == to_json(register_experiment(r)).dump(), "experiment report depends on threads");
}

}  // namespace

int main() {
    criterion(1, "f_opt matches brute force on 200 random topologies", c1);
    criterion(2, "closed forms: pure MP, one shared memory, star", c2);
    criterion(3, "resilience parameter orderings and the n=9 gap", c3);
    criterion(4, "SM-cut exists iff partitionable", c4);
    criterion(5, "1000 register runs at f_opt are atomic and live", c5);
    criterion(6, "partition scenario violates regularity at f_opt+1", c6);
    criterion(7, "message and memory access counts", c7);
    criterion(8, "500 collect and SDC runs", c8);
    criterion(9, "common coin unanimity and flip count", c9);
    criterion(10, "500 consensus runs with crashes", c10);
    criterion(11, "represented-process quorums on clusters", c11);
    criterion(12, "deterministic trace export", c12);
    std::printf("%d of 12 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
