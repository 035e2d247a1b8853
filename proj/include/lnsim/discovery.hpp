#pragma once

#include <map>
#include <optional>

#include "lnsim/probe.hpp"
#include "lnsim/traffic.hpp"

namespace lnsim {

// balance movement between two snapshots. deltas[ch] is the change of the
// a->b balance in sats; the b->a side is its negation by construction.
// channels unknown in either snapshot are listed as gaps instead
struct DiffGraph {
    int64_t t1_ms = 0;
    int64_t t2_ms = 0;
    std::map<int, Sat> deltas; // channel index -> nonzero ab delta
    std::vector<int> failed_channels;    // probing failed, endpoints suspect
    std::vector<int> uncovered_channels; // out of the attacker's reach
};

DiffGraph diff_snapshots(const BalanceSnapshot& s1, const BalanceSnapshot& s2,
                         const NetworkGraph& g);

struct InferredPayment {
    int sender = -1;
    int recipient = -1;
    Sat amount_sat = 0; // as delivered on the last hop
    std::vector<int> path;
};

struct DecomposeOptions {
    Sat fee_slack_sat = 1;             // integer fee rounding headroom
    Sat pair_filter_threshold_sat = 2; // drop pairs of lookalike amounts
    bool failed_gap_endpoint_filter = true;
};

// greedily merges fee-consistent adjacent flows into payment paths, biggest
// flow first. fragments abutting a failed-probe channel are untrustworthy
// (their real path continues into the blind spot) and get dropped when the
// endpoint filter is on; mere coverage gaps do not trigger it
std::vector<InferredPayment> decompose_payments(const DiffGraph& diff, const NetworkGraph& g,
                                                const DecomposeOptions& opt = {});

struct TruePayment {
    int sender = -1;
    int recipient = -1;
    Sat amount_sat = 0;
};

struct Evaluation {
    int64_t correct = 0;
    int64_t detected = 0;
    int64_t actual = 0;
    std::optional<double> precision; // empty when nothing was detected
    double recall = 1.0;             // vacuously perfect on an empty window
};

// one-to-one matching on (sender, recipient, amount within tolerance)
Evaluation evaluate(const std::vector<InferredPayment>& inferred,
                    const std::vector<TruePayment>& truth, Sat amount_tolerance_sat = 1);

// channel outage that holds for a whole observation run, keyed by seed so
// tau and budget grids see the same sick set
bool channel_sick(uint64_t noise_seed, int channel, double prob);

struct IntervalAttackParams {
    int64_t tau_ms = 32'000;
    double channel_failure_prob = 0.0;
    Coverage coverage = Coverage::OracleAided;
    std::vector<int> attacker_connected; // empty = attacker reaches everyone
    uint64_t noise_seed = 1;
    DecomposeOptions decompose;
};

struct IntervalAttackResult {
    int64_t intervals = 0; // intervals that contained any settled payment
    int64_t actual = 0;
    int64_t detected = 0;
    int64_t correct = 0;
    std::optional<double> precision;
    double recall = 1.0;
};

// replays the log in snapshot intervals of tau and scores discovery on each,
// pooling counts across the run. initial must hold the pre-simulation balances
IntervalAttackResult run_interval_attack(const NetworkGraph& initial, const EventLog& log,
                                         const IntervalAttackParams& params);

struct SweepParams {
    SimConfig sim; // per-run seeds derived from base_seed
    std::vector<int64_t> tau_ms;
    int runs = 5;
    uint64_t base_seed = 1;
    double channel_failure_prob = 0.05;
    Coverage coverage = Coverage::OracleAided;
    std::vector<int> attacker_connected;
    DecomposeOptions decompose;
    int threads = 0; // 0 = one per run, capped by hardware
};

struct SweepPoint {
    int64_t tau_ms = 0;
    MeanCi recall;
    MeanCi precision; // over runs that detected anything
};

// same traffic replayed at every tau; runs differ by seed and sick set
std::vector<SweepPoint> tau_sweep(const NetworkGraph& initial, const SweepParams& params);

struct BudgetParams {
    SimConfig sim;
    int64_t tau_ms = 30'000;
    std::vector<int> budgets; // attacker connects to the top n nodes
    int runs = 5;
    uint64_t base_seed = 1;
    double channel_failure_prob = 0.05;
    Coverage coverage = Coverage::Generic;
    DecomposeOptions decompose;
    int threads = 0;
};

struct BudgetPoint {
    int n = 0;
    MeanCi recall;
};

std::vector<BudgetPoint> recall_vs_budget(const NetworkGraph& initial, const BudgetParams& params);

void write_inferred_csv(const std::vector<InferredPayment>& payments, const NetworkGraph& g,
                        int64_t interval_start_ms, const std::string& path);
void write_tau_sweep_csv(const std::vector<SweepPoint>& points, const std::string& path);
void write_budget_csv(const std::vector<BudgetPoint>& generic,
                      const std::vector<BudgetPoint>& oracle_aided, const std::string& path);

} // namespace lnsim
