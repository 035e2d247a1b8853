#pragma once

// independent reference implementations used only by tests. algorithms here
// are deliberately naive (exhaustive enumeration, straight replay) so they
// cannot share bugs with the library's search machinery. fee/weight formulas
// are transcribed separately but keep the same operation order: weight sums
// accumulate right to left, which is what makes tie comparisons bit-exact.

#include <algorithm>
#include <optional>
#include <vector>

#include "lnsim/graph.hpp"
#include "lnsim/pathfind.hpp"
#include "lnsim/traffic.hpp"

namespace oracle {

inline lnsim::Msat fee_of(const lnsim::FeePolicy& p, lnsim::Msat amt) {
    __int128 prop = static_cast<__int128>(amt) * p.fee_rate_ppm / 1000000;
    return p.base_fee_msat + static_cast<lnsim::Msat>(prop);
}

inline double weight_of(lnsim::Client client, const lnsim::FeePolicy& p, lnsim::Msat cap,
                        lnsim::Msat maxcap, lnsim::Msat amt, const lnsim::WeightParams& wp) {
    double fee = double(fee_of(p, amt));
    switch (client) {
    case lnsim::Client::Lnd:
        return fee + double(amt) * double(p.cltv_delta) * wp.lnd_risk_factor;
    case lnsim::Client::CLightning:
        return fee + double(amt) * double(p.cltv_delta) * wp.cl_risk_factor / (52596.0 * 100.0) +
               wp.cl_bias_msat;
    case lnsim::Client::Eclair:
        return fee * (1.0 + wp.eclair_cltv_factor * double(p.cltv_delta) +
                      wp.eclair_capacity_factor *
                          (1.0 - (maxcap > 0 ? double(cap) / double(maxcap) : 1.0)));
    }
    return fee;
}

struct RefPath {
    std::vector<lnsim::EdgeRef> hops;
    std::vector<lnsim::Msat> per_hop;
    double weight = 0.0;
};

// right-to-left evaluation; nullopt when a capacity or visibility rule fails
inline std::optional<RefPath> evaluate(const lnsim::NetworkGraph& g, lnsim::Client client,
                                       const lnsim::WeightParams& wp, int sender, int recipient,
                                       lnsim::Msat amt, const std::vector<lnsim::EdgeRef>& hops) {
    RefPath r;
    r.hops = hops;
    r.per_hop.resize(hops.size());
    lnsim::Msat need = amt;
    double w = 0.0;
    for (size_t k = hops.size(); k-- > 0;) {
        const lnsim::Channel& c = g.channels[hops[k].channel];
        if (!c.is_public && c.node_a != sender && c.node_b != sender && c.node_a != recipient &&
            c.node_b != recipient)
            return std::nullopt;
        if (c.capacity_msat < need) return std::nullopt;
        r.per_hop[k] = need;
        const lnsim::FeePolicy& pol = hops[k].rev ? c.policy_ba : c.policy_ab;
        w += weight_of(client, pol, c.capacity_msat, g.max_capacity_msat(), need, wp);
        if (k > 0) need += fee_of(pol, need);
    }
    r.weight = w;
    return r;
}

inline bool ref_less(const lnsim::NetworkGraph& g, const RefPath& a, const RefPath& b) {
    if (a.weight != b.weight) return a.weight < b.weight;
    if (a.hops.size() != b.hops.size()) return a.hops.size() < b.hops.size();
    for (size_t i = 0; i < a.hops.size(); ++i) {
        const std::string& ca = g.channels[a.hops[i].channel].cid;
        const std::string& cb = g.channels[b.hops[i].channel].cid;
        if (ca != cb) return ca < cb;
    }
    return false;
}

// every admissible simple path from sender to recipient, best first
inline std::vector<RefPath> all_paths(const lnsim::NetworkGraph& g, int sender, int recipient,
                                      lnsim::Msat amt, lnsim::Client client,
                                      const lnsim::WeightParams& wp) {
    std::vector<RefPath> found;
    std::vector<char> visited(g.node_count(), 0);
    std::vector<lnsim::EdgeRef> stack;
    visited[sender] = 1;

    auto dfs = [&](auto&& self, int at) -> void {
        if (at == recipient) {
            if (auto r = evaluate(g, client, wp, sender, recipient, amt, stack))
                found.push_back(std::move(*r));
            return;
        }
        if (static_cast<int>(stack.size()) >= lnsim::kMaxPathNodes - 1) return;
        for (lnsim::EdgeRef e : g.out_of(at)) {
            int v = g.head(e);
            if (visited[v]) continue;
            visited[v] = 1;
            stack.push_back(e);
            self(self, v);
            stack.pop_back();
            visited[v] = 0;
        }
    };
    dfs(dfs, sender);
    std::sort(found.begin(), found.end(),
              [&](const RefPath& a, const RefPath& b) { return ref_less(g, a, b); });
    return found;
}

// applies the successful payments of a log to a copy of the starting graph
// with raw field arithmetic, bypassing the library's balance bookkeeping
inline lnsim::NetworkGraph replay_log(lnsim::NetworkGraph start, const lnsim::EventLog& log) {
    for (const auto& ev : log.events) {
        if (ev.outcome != lnsim::Outcome::Success) continue;
        const lnsim::Path* p = ev.final_path();
        for (size_t i = 0; i < p->hops.size(); ++i) {
            lnsim::Channel& c = start.channels[p->hops[i].channel];
            lnsim::Msat amt = p->per_hop_amount[i];
            if (p->hops[i].rev) {
                c.balance_ba_msat -= amt;
                c.balance_ab_msat += amt;
            } else {
                c.balance_ab_msat -= amt;
                c.balance_ba_msat += amt;
            }
        }
    }
    return start;
}

// random multigraphs for oracle comparison runs. half the graphs draw
// policies from a tiny palette so equal-weight paths show up and the
// tie-break order actually gets exercised.
inline lnsim::NetworkGraph random_graph(lnsim::Rng& rng, int max_nodes = 8) {
    int n = static_cast<int>(rng.range(2, max_nodes));
    int m = static_cast<int>(rng.range(n - 1, 12));
    lnsim::NetworkGraph g;
    for (int i = 0; i < n; ++i) g.add_node("n" + std::to_string(i));
    bool plain = rng.chance(0.5);
    for (int e = 0; e < m; ++e) {
        int a = static_cast<int>(rng.below(n));
        int b;
        do {
            b = static_cast<int>(rng.below(n));
        } while (b == a);
        auto policy = [&]() {
            lnsim::FeePolicy p;
            if (plain) {
                p.base_fee_msat = rng.chance(0.5) ? 0 : 1000;
                p.fee_rate_ppm = rng.chance(0.5) ? 0 : 100;
                p.cltv_delta = 40;
            } else {
                p.base_fee_msat = rng.range(0, 2000);
                p.fee_rate_ppm = rng.range(0, 5000);
                p.cltv_delta = static_cast<int>(rng.range(0, 144));
            }
            return p;
        };
        char cid[16];
        std::snprintf(cid, sizeof cid, "c%03d", e);
        g.add_channel(cid, "n" + std::to_string(a), "n" + std::to_string(b),
                      rng.range(1, 2000) * lnsim::kMsatPerSat, policy(), policy(),
                      plain || !rng.chance(0.15));
    }
    g.rebuild_adjacency();
    return g;
}

} // namespace oracle
