#pragma once

// Multi-run experiments over independent seeds. Run i uses seed + i, and runs
// are spread over worker threads; results do not depend on the thread count.

#include "mixsim/checkers.hpp"
#include "mixsim/simulator.hpp"

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace mixsim {

enum class AdversaryKind : std::uint8_t { Random, RoundRobin, Partition };
AdversaryKind parse_adversary(const std::string& name);
const char* to_string(AdversaryKind k);

struct RunFailure {
    std::uint64_t seed = 0;
    std::string status;
    Verdict verdict;
};

struct RegisterExperimentConfig {
    MixedTopology topology;
    std::size_t f = 0;
    std::size_t runs = 1;
    std::uint64_t seed = 1;
    std::size_t ops = 3;          // writes by the writer, reads by every other process
    std::size_t max_crashes = 0;  // a random number in [0, max_crashes] of processes crash per run
    AdversaryKind adversary = AdversaryKind::Random;
    bool cluster_quorum = false;
    unsigned threads = 0;
};

struct RegisterExperiment {
    std::size_t runs = 0;
    std::size_t atomic_ok = 0;
    std::size_t live_complete = 0;  // every op of a non-crashed process responded
    std::size_t complexity_checked = 0;
    std::size_t complexity_ok = 0;  // failure-free runs only
    std::size_t min_responders = 0;
    std::size_t max_responders = 0;
    double mean_responders = 0;
    std::vector<RunFailure> failures;

    bool ok() const { return failures.empty(); }
};

/// Builds run i of a register experiment.
SimConfig register_run_config(const RegisterExperimentConfig& cfg, std::size_t i);
RegisterExperiment register_experiment(const RegisterExperimentConfig& cfg);
nlohmann::ordered_json to_json(const RegisterExperiment& e);

struct CollectExperimentConfig {
    MixedTopology topology;
    std::size_t f = 0;
    std::size_t runs = 1;
    std::uint64_t seed = 1;
    std::size_t ops = 3;  // per process: a mix of writes, collects and SDCs
    std::size_t max_crashes = 0;
    unsigned threads = 0;
};

struct CollectExperiment {
    std::size_t runs = 0;
    std::size_t collect_ok = 0;
    std::size_t sdc_ok = 0;
    std::size_t sdc_returns = 0;
    std::vector<RunFailure> failures;

    bool ok() const { return failures.empty(); }
};

CollectExperiment collect_experiment(const CollectExperimentConfig& cfg);

struct CoinExperimentConfig {
    std::size_t n = 4;
    /// Defaults to pure message passing on n processes with f = f_opt.
    std::optional<MixedTopology> topology;
    std::optional<std::size_t> f;
    CoinThreshold c;
    std::size_t runs = 1;
    std::uint64_t seed = 1;
    unsigned threads = 0;
};

struct CoinExperiment {
    CoinStats stats;
    std::size_t terminated = 0;
};

SimConfig coin_run_config(const CoinExperimentConfig& cfg, std::size_t i);
CoinExperiment coin_experiment(const CoinExperimentConfig& cfg);

struct ConsensusExperimentConfig {
    MixedTopology topology;
    std::size_t f = 0;
    std::size_t runs = 1;
    std::uint64_t seed = 1;
    CoinThreshold c;
    std::size_t max_crashes = 0;
    unsigned threads = 0;
};

struct ConsensusExperiment {
    std::size_t runs = 0;
    std::size_t terminated = 0;
    std::size_t agreement_ok = 0;
    std::size_t decided_0 = 0;
    std::size_t decided_1 = 0;
    double mean_rounds = 0;
    std::vector<RunFailure> failures;

    bool ok() const { return failures.empty(); }
};

SimConfig consensus_run_config(const ConsensusExperimentConfig& cfg, std::size_t i);
ConsensusExperiment consensus_experiment(const ConsensusExperimentConfig& cfg);
nlohmann::ordered_json to_json(const ConsensusExperiment& e);

}  // namespace mixsim
