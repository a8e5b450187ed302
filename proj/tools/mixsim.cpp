// mixsim: resilience analysis and protocol experiments for systems mixing
// message passing with shared memory.
//
// Exit codes: 0 ok, 1 a violation was found, 2 bad input.

#include "mixsim/checkers.hpp"
#include "mixsim/experiments.hpp"
#include "mixsim/simulator.hpp"
#include "mixsim/topology.hpp"
#include "mixsim/topology_io.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

using namespace mixsim;
using nlohmann::ordered_json;

namespace {

constexpr int kOk = 0;
constexpr int kViolation = 1;
constexpr int kInputError = 2;

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string topology;
    std::optional<std::size_t> f;
    std::optional<std::uint64_t> seed;
    std::size_t runs = 1;
    std::string c = "2";
    std::string adversary = "random";
    std::size_t ops = 3;
    std::size_t crashes = 0;
    std::size_t n = 4;
    std::string json_path;
    std::string trace_path;
    bool allow_unsafe = false;
    unsigned threads = 0;
};

std::uint64_t seed_of(const Common& o) {
    if (o.seed) return *o.seed;
    if (std::getenv("CI") != nullptr) throw InputError("--seed is required when CI is set");
    return 1;
}

MixedTopology topology_of(const Common& o) {
    if (o.topology.empty()) throw InputError("--topology is required");
    return load_topology(o.topology);
}

CoinThreshold threshold_of(const Common& o) {
    CoinThreshold c;
    try {
        c = parse_threshold(o.c);
    } catch (const std::invalid_argument& e) {
        throw InputError(std::string("--c: ") + e.what());
    }
    if (!c.valid()) throw InputError("--c must be greater than 1");
    return c;
}

// Renders the JSON report as indented "key: value" lines.
void render(std::ostream& out, const ordered_json& j, int depth = 0) {
    const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
    for (auto it = j.begin(); it != j.end(); ++it) {
        const auto& v = it.value();
        const std::string key = j.is_object() ? it.key() : "-";
        const bool flat_array = v.is_array() && std::all_of(v.begin(), v.end(), [](const auto& x) {
            return x.is_primitive() || (x.is_array() && x.size() <= 2);
        });
        if (v.is_primitive() || flat_array || v.empty()) {
            out << pad << key << ": " << v.dump() << '\n';
        } else {
            out << pad << key << ":\n";
            render(out, v, depth + 1);
        }
    }
}

int emit(const Common& o, const ordered_json& report, int code) {
    render(std::cout, report);
    if (!o.json_path.empty()) {
        std::ofstream f(o.json_path);
        if (!f) throw InputError("cannot write " + o.json_path);
        f << report.dump(2) << '\n';
    }
    return code;
}

void write_trace(const Common& o, const Trace& trace) {
    if (o.trace_path.empty()) return;
    std::ofstream f(o.trace_path);
    if (!f) throw InputError("cannot write " + o.trace_path);
    write_trace_jsonl(f, trace);
}

// Commands --------------------------------------------------------------------------------

int cmd_analyze(const Common& o) {
    const auto t = topology_of(o);
    const auto rep = analyze(t);
    ordered_json j;
    j["command"] = "analyze";
    j["model"] = model_name(t.origin);
    const auto body = to_json(rep);
    for (const auto& [k, v] : body.items()) j[k] = v;
    return emit(o, j, kOk);
}

int cmd_sim_register(const Common& o) {
    const auto t = topology_of(o);
    const auto f_opt = compute_f_opt(read_relation(t));
    const auto f = o.f.value_or(f_opt);
    if (f > t.n) throw InputError("--f exceeds n");
    if (f > f_opt && !o.allow_unsafe)
        throw InputError("f = " + std::to_string(f) + " exceeds f_opt = " + std::to_string(f_opt) +
                         " (pass --allow-unsafe to run anyway)");
    RegisterExperimentConfig cfg;
    cfg.topology = t;
    cfg.f = f;
    cfg.runs = o.runs;
    cfg.seed = seed_of(o);
    cfg.ops = o.ops;
    cfg.max_crashes = o.crashes;
    cfg.adversary = parse_adversary(o.adversary);
    cfg.threads = o.threads;
    if (!o.trace_path.empty()) {
        auto first = register_run_config(cfg, 0);
        first.record_trace = true;
        write_trace(o, run(first).trace);
    }
    const auto e = register_experiment(cfg);
    ordered_json j;
    j["command"] = "sim-register";
    j["n"] = t.n;
    j["f"] = f;
    j["f_opt"] = f_opt;
    j["seed"] = cfg.seed;
    j["adversary"] = to_string(cfg.adversary);
    const auto body = to_json(e);
    for (const auto& [k, v] : body.items()) j[k] = v;
    j["ok"] = e.ok();
    return emit(o, j, e.ok() ? kOk : kViolation);
}

int cmd_partition_demo(const Common& o) {
    const auto t = topology_of(o);
    const auto f_opt = compute_f_opt(read_relation(t));
    if (!o.f) throw InputError("--f is required");
    const auto f = *o.f;
    if (f <= f_opt)
        throw InputError("not partitionable: f = " + std::to_string(f) + " <= f_opt = " + std::to_string(f_opt));
    PartitionScenario s;
    try {
        s = partition_scenario(t, f, seed_of(o));
    } catch (const ConfigError& e) {
        throw InputError(e.what());
    }
    s.config.record_trace = !o.trace_path.empty();
    const auto res = run(s.config);
    write_trace(o, res.trace);
    const auto verdict = check_regular_swmr(res.history, s.config.initial);
    ordered_json j;
    j["command"] = "partition-demo";
    j["n"] = t.n;
    j["f"] = f;
    j["f_opt"] = f_opt;
    j["witness"] = {{"P", to_json(s.witness.p)}, {"Q", to_json(s.witness.q)}};
    j["writer"] = s.writer;
    j["reader"] = s.reader;
    j["written"] = s.written;
    j["run_status"] = to_string(res.status);
    for (const auto& item : res.item_ops)
        if (item)
            if (const auto* op = res.history.find(*item); op && op->kind == OpKind::Read) j["offending_read"] = op_to_json(*op);
    j["verdict"] = to_json(verdict);
    j["violation_exhibited"] = !verdict.ok;
    return emit(o, j, verdict.ok ? kViolation : kOk);
}

int cmd_coin(const Common& o) {
    if (o.n < 2) throw InputError("--n must be at least 2");
    if (o.runs < 1) throw InputError("--runs must be at least 1");
    CoinExperimentConfig cfg;
    cfg.n = o.n;
    cfg.c = threshold_of(o);
    cfg.runs = o.runs;
    cfg.seed = seed_of(o);
    cfg.threads = o.threads;
    if (!o.topology.empty()) {
        cfg.topology = topology_of(o);
        cfg.n = cfg.topology->n;
    }
    cfg.f = o.f;
    const auto e = coin_experiment(cfg);
    ordered_json j;
    j["command"] = "coin";
    j["n"] = cfg.n;
    j["c"] = std::to_string(cfg.c.num) + "/" + std::to_string(cfg.c.den);
    j["seed"] = cfg.seed;
    j["terminated"] = e.terminated;
    auto stats = to_json(e.stats);
    stats.erase("flips_per_run");
    for (const auto& [k, v] : stats.items()) j[k] = v;
    j["mean_flips_over_n2"] = e.stats.mean_flips / static_cast<double>(cfg.n * cfg.n);
    const bool ok = e.stats.bound_ok && e.terminated == cfg.runs;
    j["ok"] = ok;
    return emit(o, j, ok ? kOk : kViolation);
}

int cmd_consensus(const Common& o) {
    ConsensusExperimentConfig cfg;
    cfg.topology = o.topology.empty() ? pure_mp(o.n) : topology_of(o);
    if (cfg.topology.n < 2) throw InputError("consensus needs n >= 2");
    const auto f_opt = compute_f_opt(read_relation(normalize(cfg.topology)));
    cfg.f = o.f.value_or(f_opt);
    if (cfg.f > f_opt && !o.allow_unsafe)
        throw InputError("f = " + std::to_string(cfg.f) + " exceeds f_opt = " + std::to_string(f_opt));
    cfg.c = threshold_of(o);
    cfg.runs = o.runs;
    cfg.seed = seed_of(o);
    cfg.max_crashes = o.crashes;
    cfg.threads = o.threads;
    const auto e = consensus_experiment(cfg);
    ordered_json j;
    j["command"] = "consensus";
    j["n"] = cfg.topology.n;
    j["f"] = cfg.f;
    j["seed"] = cfg.seed;
    const auto body = to_json(e);
    for (const auto& [k, v] : body.items()) j[k] = v;
    j["ok"] = e.ok();
    return emit(o, j, e.ok() ? kOk : kViolation);
}

int cmd_cluster_compare(const Common& o) {
    const auto t = topology_of(o);
    if (!std::holds_alternative<origin::Cluster>(t.origin)) throw InputError("cluster-compare needs a cluster topology");
    const auto f_opt = compute_f_opt(read_relation(t));
    const auto f = o.f.value_or(f_opt);
    if (f > f_opt && !o.allow_unsafe)
        throw InputError("f = " + std::to_string(f) + " exceeds f_opt = " + std::to_string(f_opt));
    RegisterExperimentConfig cfg;
    cfg.topology = t;
    cfg.f = f;
    cfg.runs = o.runs;
    cfg.seed = seed_of(o);
    cfg.ops = o.ops;
    cfg.max_crashes = o.crashes;
    cfg.adversary = parse_adversary(o.adversary);
    cfg.threads = o.threads;
    const auto counted = register_experiment(cfg);
    cfg.cluster_quorum = true;
    const auto represented = register_experiment(cfg);
    ordered_json j;
    j["command"] = "cluster-compare";
    j["n"] = t.n;
    j["f"] = f;
    j["seed"] = cfg.seed;
    j["count_at_least"] = to_json(counted);
    j["represented_at_least"] = to_json(represented);
    j["fewer_responders"] = represented.min_responders < counted.min_responders;
    const bool ok = counted.ok() && represented.ok();
    j["ok"] = ok;
    return emit(o, j, ok ? kOk : kViolation);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Resilience analysis and protocol experiments for mixed message-passing / shared-memory systems"};
    app.require_subcommand(1);
    Common o;

    auto topology = [&](CLI::App* sub, bool required) {
        auto* opt = sub->add_option("--topology", o.topology, "Topology JSON file");
        if (required) opt->required();
    };
    auto seed = [&](CLI::App* sub) { sub->add_option("--seed", o.seed, "Run seed (required when CI is set)"); };
    auto json = [&](CLI::App* sub) { sub->add_option("--json", o.json_path, "Write the JSON report here"); };
    auto threads = [&](CLI::App* sub) { sub->add_option("--threads", o.threads, "Worker threads (0: all cores)"); };

    auto* analyze_cmd = app.add_subcommand("analyze", "Resilience parameters of a topology");
    topology(analyze_cmd, true);
    json(analyze_cmd);

    auto* sim = app.add_subcommand("sim-register", "Run the atomic register and check every history");
    topology(sim, true);
    sim->add_option("--f", o.f, "Tolerated crashes (default f_opt)");
    sim->add_option("--ops", o.ops, "Writes by the writer and reads per reader")->check(CLI::PositiveNumber);
    sim->add_option("--runs", o.runs, "Number of seeded runs")->check(CLI::PositiveNumber);
    sim->add_option("--adversary", o.adversary)->check(CLI::IsMember({"random", "round-robin", "partition"}));
    sim->add_option("--crashes", o.crashes, "Crash up to this many processes per run (capped at f)");
    sim->add_option("--trace", o.trace_path, "Write the first run's trace as JSON lines");
    sim->add_flag("--allow-unsafe", o.allow_unsafe, "Allow f > f_opt");
    seed(sim);
    json(sim);
    threads(sim);

    auto* demo = app.add_subcommand("partition-demo", "Exhibit the register violation at f > f_opt");
    topology(demo, true);
    demo->add_option("--f", o.f, "Crash bound beyond f_opt")->required();
    demo->add_option("--trace", o.trace_path, "Write the trace as JSON lines");
    seed(demo);
    json(demo);

    auto* coin = app.add_subcommand("coin", "Weak shared coin statistics");
    coin->add_option("--n", o.n, "Processes (pure message passing unless --topology)");
    topology(coin, false);
    coin->add_option("--f", o.f, "Tolerated crashes (default f_opt)");
    coin->add_option("--c", o.c, "Threshold c > 1 as p/q or decimal");
    coin->add_option("--runs", o.runs)->check(CLI::PositiveNumber);
    seed(coin);
    json(coin);
    threads(coin);

    auto* cons = app.add_subcommand("consensus", "Randomized binary consensus runs");
    cons->add_option("--n", o.n, "Processes (pure message passing unless --topology)");
    topology(cons, false);
    cons->add_option("--f", o.f, "Tolerated crashes (default f_opt)");
    cons->add_option("--c", o.c, "Coin threshold c > 1");
    cons->add_option("--runs", o.runs)->check(CLI::PositiveNumber);
    cons->add_option("--crashes", o.crashes, "Crash up to this many processes per run (capped at f)");
    cons->add_flag("--allow-unsafe", o.allow_unsafe, "Allow f > f_opt");
    seed(cons);
    json(cons);
    threads(cons);

    auto* cmp = app.add_subcommand("cluster-compare", "Counting vs represented-process quorums");
    topology(cmp, true);
    cmp->add_option("--f", o.f, "Tolerated crashes (default f_opt)");
    cmp->add_option("--ops", o.ops)->check(CLI::PositiveNumber);
    cmp->add_option("--runs", o.runs)->check(CLI::PositiveNumber);
    cmp->add_option("--adversary", o.adversary)->check(CLI::IsMember({"random", "round-robin", "partition"}));
    cmp->add_option("--crashes", o.crashes);
    cmp->add_flag("--allow-unsafe", o.allow_unsafe, "Allow f > f_opt");
    seed(cmp);
    json(cmp);
    threads(cmp);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInputError;
    }

    try {
        if (*analyze_cmd) return cmd_analyze(o);
        if (*sim) return cmd_sim_register(o);
        if (*demo) return cmd_partition_demo(o);
        if (*coin) return cmd_coin(o);
        if (*cons) return cmd_consensus(o);
        if (*cmp) return cmd_cluster_compare(o);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const TopologyError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const EnumerationLimitError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInputError;
    }
    return kInputError;
}
