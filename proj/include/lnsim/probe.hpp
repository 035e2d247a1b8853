#pragma once

#include <optional>

#include "lnsim/graph.hpp"

namespace lnsim {

// stands in for a route A -> B -> target -> D carrying an unpayable hash.
// a "delivered" answer proves the amount fit the target's balance; a failure
// may be the real thing or probe noise, so failures are the untrusted side
struct ProbeOracle {
    Sat true_balance_sat = 0;
    double spurious_fail_prob = 0.0;
    bool available = true;
    Rng* rng = nullptr;

    bool probe(Sat amount_sat);
};

struct ProbeResult {
    Sat estimate_sat = 0;
    int probes_used = 0;
};

// binary search for the largest deliverable amount. a failed probe is retried
// up to retries_per_probe extra times before the step is believed. nullopt
// when the target never answers at all
std::optional<ProbeResult> probe_balance(ProbeOracle& oracle, Sat capacity_sat,
                                         int retries_per_probe = 0);

enum class Coverage { Generic, OracleAided };
Coverage coverage_from_name(const std::string& name);

enum class ChannelKnowledge { Known, Failed, Uncovered, Private };

struct SnapshotEntry {
    ChannelKnowledge state = ChannelKnowledge::Uncovered;
    Sat ab_sat = -1; // valid when state == Known; ba is capacity minus ab
    Sat ba_sat = -1;
};

struct BalanceSnapshot {
    int64_t time_ms = 0;
    int64_t duration_ms = 0; // probing effort at per_channel_seconds pacing
    std::vector<SnapshotEntry> entries; // one per channel, graph order
};

struct SnapshotParams {
    Coverage coverage = Coverage::Generic;
    double failure_probability = 0.0;
    double per_channel_seconds = 30.0;
};

// generic coverage probes a channel only when the attacker reaches both ends
// (a loop in and out is needed); oracle-aided settles for either end
BalanceSnapshot snapshot_network(const NetworkGraph& g, const std::vector<int>& attacker_connected,
                                 const SnapshotParams& params, Rng& rng, int64_t time_ms = 0);

std::vector<int> top_n_by_channel_count(const NetworkGraph& g, int n);

struct LiquidityPrice {
    double cost_btc = 0.0;
    double capacity_btc = 0.0; // 0 = no liquidity product on offer
};

struct CostReport {
    int channels = 0;
    double open_close_fee_btc = 0.0; // per channel per transaction
    double liquidity_purchase_btc = 0.0;
    int liquidity_batches = 0;
    double reserve_btc = 0.0; // part of the on-hold total, not on top of it
    double total_spent_btc = 0.0;
    double total_on_hold_btc = 0.0;
};

// funds burned vs funds parked for probing this graph with fresh channels.
// inbound liquidity has to cover the largest public channel to probe it
CostReport attack_cost(const NetworkGraph& g, int channels_to_open, double open_close_fee_btc,
                       double per_channel_capacity_btc, const LiquidityPrice& liquidity,
                       double reserve_rate = 0.01);

void write_snapshot_csv(const BalanceSnapshot& snap, const NetworkGraph& g,
                        const std::string& path);

} // namespace lnsim
