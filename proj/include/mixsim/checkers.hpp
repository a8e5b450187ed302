#pragma once

// Offline verdicts over simulator histories. Every checker is a pure function.

#include "mixsim/batch_node.hpp"
#include "mixsim/simulator.hpp"

#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace mixsim {

class MalformedHistory : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct Violation {
    std::string predicate;
    std::vector<OpId> ops;
    std::string explanation;
};

struct Verdict {
    bool ok = true;
    std::vector<Violation> violations;

    void add(std::string predicate, std::vector<OpId> ops, std::string explanation);
    void merge(const Verdict& other);
};

nlohmann::ordered_json to_json(const Verdict& v);

/// Single-writer register histories (top-level write and read ops). Reads that
/// never responded are not checked.
///   reads_from_past       a read returns a write invoked before the read responded
///   no_stale_read         a read invoked after write k responded returns seq >= k
///   no_inversion          reads ordered in real time return non-decreasing seqs
///   value_matches_write   the value is the one written with that seq (or the initial value)
Verdict check_atomic_swmr(const History& history, Value initial = 0);

/// A read returns the last write that responded before it started, or a write
/// overlapping it.
///   regular_read          as above
///   value_matches_write   as for atomicity
Verdict check_regular_swmr(const History& history, Value initial = 0);

/// Batched write / collect histories, per register instance.
///   write_visible         a collect invoked after p_i's write responded has entry i with seq >= that write's
///   writeback_precedes    a collect invoked after another collect responded (its write-back done) returns a
///                         vector the earlier one precedes
///   no_future_entry       every entry matches a write by that process invoked before the collect responded
Verdict check_collect_regularity(const History& history, Value initial = 0);

/// Returned vectors of completed SDC ops in the history, in history order.
std::vector<VersionedVector> sdc_vectors(const History& history, InstanceId instance = 0);

///   sdc_chain             every pair of vectors is ordered by precedes
Verdict check_sdc_chain(const std::vector<VersionedVector>& vectors);

///   agreement, validity
Verdict check_consensus(const std::vector<Value>& inputs, const std::vector<Value>& decisions);

struct CoinRun {
    std::vector<Value> outcomes;  // one per process that returned
    std::size_t flips = 0;        // total over all processes
};

struct CoinStats {
    std::size_t runs = 0;
    std::size_t unanimous_minus1 = 0;
    std::size_t unanimous_plus1 = 0;
    std::size_t mixed = 0;
    std::vector<std::size_t> flips_per_run;

    double agreement_parameter = 0;  // (c-1)/2c
    double threshold = 0;            // agreement_parameter - 3*sqrt(0.25/runs)
    double freq_minus1 = 0;
    double freq_plus1 = 0;
    double mean_flips = 0;
    bool bound_ok = false;
};

CoinStats coin_statistics(const std::vector<CoinRun>& runs, CoinThreshold c);
nlohmann::ordered_json to_json(const CoinStats& s);

}  // namespace mixsim
