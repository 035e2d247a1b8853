#include "lnsim/probe.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace lnsim {

bool ProbeOracle::probe(Sat amount_sat) {
    if (!available) return false;
    if (amount_sat > true_balance_sat) return false;
    if (spurious_fail_prob > 0.0) {
        if (!rng) throw ConfigError("noisy probe oracle needs an rng");
        if (rng->chance(spurious_fail_prob)) return false;
    }
    return true;
}

std::optional<ProbeResult> probe_balance(ProbeOracle& oracle, Sat capacity_sat,
                                         int retries_per_probe) {
    if (capacity_sat < 1) throw ConfigError("probe_balance: capacity must be positive");
    if (retries_per_probe < 0) throw ConfigError("probe_balance: retries must be >= 0");
    if (oracle.spurious_fail_prob > 0.0 && !oracle.rng)
        throw ConfigError("noisy probe oracle needs an rng");
    if (!oracle.available) return std::nullopt;

    ProbeResult res;
    auto trusted = [&](Sat amt) {
        for (int attempt = 0; attempt <= retries_per_probe; ++attempt) {
            ++res.probes_used;
            if (oracle.probe(amt)) return true;
        }
        return false;
    };

    // opening probe at full capacity settles saturated channels in one shot
    if (trusted(capacity_sat)) {
        res.estimate_sat = capacity_sat;
        return res;
    }
    Sat lo = 0, hi = capacity_sat - 1; // delivered at lo (vacuously), refused above hi
    while (lo < hi) {
        Sat mid = lo + (hi - lo + 1) / 2;
        if (trusted(mid))
            lo = mid;
        else
            hi = mid - 1;
    }
    res.estimate_sat = lo;
    return res;
}

Coverage coverage_from_name(const std::string& name) {
    if (name == "generic") return Coverage::Generic;
    if (name == "oracle_aided") return Coverage::OracleAided;
    throw ConfigError("unknown coverage: " + name);
}

BalanceSnapshot snapshot_network(const NetworkGraph& g, const std::vector<int>& attacker_connected,
                                 const SnapshotParams& params, Rng& rng, int64_t time_ms) {
    if (params.failure_probability < 0.0 || params.failure_probability > 1.0)
        throw ConfigError("failure probability out of [0,1]");
    std::vector<char> reached(g.node_count(), 0);
    for (int node : attacker_connected) {
        if (node < 0 || node >= g.node_count())
            throw ConfigError("attacker node out of range");
        reached[node] = 1;
    }

    BalanceSnapshot snap;
    snap.time_ms = time_ms;
    snap.entries.resize(g.channels.size());
    int64_t probed = 0;
    for (size_t i = 0; i < g.channels.size(); ++i) {
        const Channel& c = g.channels[i];
        // one failure draw per channel keeps the randomness aligned across
        // coverage modes, so wider coverage can only learn more
        bool failed = rng.chance(params.failure_probability);
        SnapshotEntry& e = snap.entries[i];
        if (!c.is_public) {
            e.state = ChannelKnowledge::Private;
            continue;
        }
        bool at_a = reached[c.node_a], at_b = reached[c.node_b];
        bool probeable =
            params.coverage == Coverage::Generic ? (at_a && at_b) : (at_a || at_b);
        if (!probeable) {
            e.state = ChannelKnowledge::Uncovered;
            continue;
        }
        ++probed;
        if (failed) {
            e.state = ChannelKnowledge::Failed;
            continue;
        }
        e.state = ChannelKnowledge::Known;
        // probing resolves whole sats; the reverse side is implied by capacity
        e.ab_sat = c.balance_ab_msat / kMsatPerSat;
        e.ba_sat = c.capacity_msat / kMsatPerSat - e.ab_sat;
    }
    snap.duration_ms = static_cast<int64_t>(probed * params.per_channel_seconds * 1000.0);
    return snap;
}

std::vector<int> top_n_by_channel_count(const NetworkGraph& g, int n) {
    if (n < 0) throw ConfigError("top_n_by_channel_count: n must be >= 0");
    std::vector<int> nodes;
    for (int v = 0; v < g.node_count(); ++v)
        if (!g.out_of(v).empty()) nodes.push_back(v);
    std::stable_sort(nodes.begin(), nodes.end(), [&](int a, int b) {
        return g.out_of(a).size() > g.out_of(b).size();
    });
    if (static_cast<int>(nodes.size()) > n) nodes.resize(n);
    return nodes;
}

CostReport attack_cost(const NetworkGraph& g, int channels_to_open, double open_close_fee_btc,
                       double per_channel_capacity_btc, const LiquidityPrice& liquidity,
                       double reserve_rate) {
    if (channels_to_open < 0 || open_close_fee_btc < 0.0 || per_channel_capacity_btc < 0.0 ||
        liquidity.cost_btc < 0.0 || liquidity.capacity_btc < 0.0 || reserve_rate < 0.0)
        throw ConfigError("attack_cost: negative input");

    CostReport r;
    r.channels = channels_to_open;
    r.open_close_fee_btc = open_close_fee_btc;
    if (channels_to_open == 0) return r;

    if (liquidity.capacity_btc > 0.0) {
        Msat biggest = 0;
        for (const Channel& c : g.channels)
            if (c.is_public) biggest = std::max(biggest, c.capacity_msat);
        double needed_btc = static_cast<double>(biggest) / (1000.0 * 100'000'000.0);
        r.liquidity_batches = static_cast<int>(std::ceil(needed_btc / liquidity.capacity_btc));
        r.liquidity_purchase_btc = r.liquidity_batches * liquidity.cost_btc;
    }
    // every probing channel is opened once and closed once
    r.total_spent_btc = channels_to_open * 2.0 * open_close_fee_btc + r.liquidity_purchase_btc;
    r.total_on_hold_btc = channels_to_open * per_channel_capacity_btc;
    r.reserve_btc = r.total_on_hold_btc * reserve_rate;
    return r;
}

void write_snapshot_csv(const BalanceSnapshot& snap, const NetworkGraph& g,
                        const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write snapshot csv: " + path);
    out << "time_ms,cid,direction,balance_sat\n";
    for (size_t i = 0; i < snap.entries.size(); ++i) {
        const SnapshotEntry& e = snap.entries[i];
        const std::string& cid = g.channels[i].cid;
        if (e.state == ChannelKnowledge::Known) {
            out << snap.time_ms << ',' << cid << ",ab," << e.ab_sat << "\n";
            out << snap.time_ms << ',' << cid << ",ba," << e.ba_sat << "\n";
        } else {
            out << snap.time_ms << ',' << cid << ",ab,unknown\n";
            out << snap.time_ms << ',' << cid << ",ba,unknown\n";
        }
    }
}

} // namespace lnsim
