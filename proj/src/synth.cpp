#include "lnsim/synth.hpp"

#include <algorithm>
#include <set>

namespace lnsim {

namespace {

FeePolicy random_policy(Rng& rng) {
    static const Msat bases[] = {0, 100, 1000, 1000, 2000};
    static const int64_t rates[] = {1, 10, 50, 100, 300};
    static const int cltvs[] = {14, 40, 40, 144};
    FeePolicy p;
    p.base_fee_msat = bases[rng.below(5)];
    p.fee_rate_ppm = rates[rng.below(5)];
    p.cltv_delta = cltvs[rng.below(4)];
    return p;
}

Msat jitter(Msat base, Rng& rng) {
    return base - base / 2 + static_cast<Msat>(rng.below(static_cast<uint64_t>(base) + 1));
}

} // namespace

NetworkGraph make_tiered_graph(const TieredGraphParams& p, uint64_t seed) {
    if (p.tiers.empty()) throw ConfigError("tiered graph needs at least one tier");
    if (p.leaf_channels_min < 1 || p.leaf_channels_max < p.leaf_channels_min)
        throw ConfigError("bad leaf channel range");
    if (p.leaf_cap_msat < 10 * kMsatPerSat) throw ConfigError("leaf capacity too small");

    Rng rng(seed);
    NetworkGraph g;

    struct Hub {
        int node;
        int quota;
        Msat cap;
    };
    std::vector<Hub> hubs;
    for (size_t t = 0; t < p.tiers.size(); ++t) {
        const HubTier& tier = p.tiers[t];
        if (tier.count < 1 || tier.spokes < 1 || tier.mesh_cap_msat < 10 * kMsatPerSat)
            throw ConfigError("bad hub tier");
        for (int i = 0; i < tier.count; ++i) {
            std::string id = "h" + std::to_string(t) + "_" + std::to_string(i);
            hubs.push_back({g.add_node(id), tier.spokes, tier.mesh_cap_msat});
        }
    }

    int mesh_seq = 0;
    auto mesh_link = [&](const Hub& a, const Hub& b) {
        Msat cap = jitter(std::max(a.cap, b.cap), rng);
        g.add_channel("m" + std::to_string(mesh_seq++), g.node_ids[a.node], g.node_ids[b.node],
                      cap, random_policy(rng), random_policy(rng));
    };
    for (size_t i = 0; i + 1 < hubs.size(); ++i) mesh_link(hubs[i], hubs[i + 1]);
    if (hubs.size() > 2) mesh_link(hubs.back(), hubs.front());
    for (size_t i = 0; i < hubs.size(); ++i)
        for (int k = 0; k < p.hub_mesh_links; ++k) {
            size_t j = rng.below(hubs.size());
            if (j != i) mesh_link(hubs[i], hubs[j]);
        }

    int64_t total = 0;
    for (const Hub& h : hubs) total += h.quota;
    int leaf_seq = 0, spoke_seq = 0;
    while (total > 0) {
        int want = rng.range(p.leaf_channels_min, p.leaf_channels_max);
        int leaf = g.add_node("n" + std::to_string(leaf_seq++));
        std::set<size_t> chosen;
        for (int w = 0; w < want && total > 0; ++w) {
            size_t pick = hubs.size();
            for (int attempt = 0; attempt < 10; ++attempt) {
                int64_t r = static_cast<int64_t>(rng.below(static_cast<uint64_t>(total)));
                size_t idx = 0;
                while (r >= hubs[idx].quota) r -= hubs[idx++].quota;
                if (!chosen.count(idx)) {
                    pick = idx;
                    break;
                }
            }
            if (pick == hubs.size()) break;
            chosen.insert(pick);
            g.add_channel("s" + std::to_string(spoke_seq++), g.node_ids[leaf],
                          g.node_ids[hubs[pick].node], jitter(p.leaf_cap_msat, rng),
                          random_policy(rng), random_policy(rng));
            --hubs[pick].quota;
            --total;
        }
    }

    g.rebuild_adjacency();
    return g;
}

NetworkGraph make_clique(int n, Msat capacity_msat, bool drop_matching) {
    if (n < 2) throw ConfigError("clique needs at least 2 nodes");
    if (capacity_msat < 10 * kMsatPerSat) throw ConfigError("clique capacity too small");
    NetworkGraph g;
    FeePolicy flat;
    flat.base_fee_msat = 1000;
    flat.fee_rate_ppm = 1;
    for (int i = 0; i < n; ++i) g.add_node("c" + std::to_string(i));
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            if (drop_matching && i % 2 == 0 && j == i + 1) continue;
            g.add_channel("k" + std::to_string(i) + "_" + std::to_string(j),
                          "c" + std::to_string(i), "c" + std::to_string(j), capacity_msat, flat,
                          flat);
        }
    g.rebuild_adjacency();
    return g;
}

namespace {

struct CorpusBuilder {
    Rng rng;
    std::vector<TransactionRecord>& txs;
    int counter = 0;

    std::string fresh_txid() { return "t" + std::to_string(counter++); }
    std::string fresh_ext() { return "ext" + std::to_string(counter++); }

    TxInput funding_input() {
        TxInput in;
        in.prev_txid = fresh_ext();
        in.prev_index = 0;
        in.script_class = rng.chance(0.8) ? InputScript::P2wpkh : InputScript::P2sh;
        in.value_sat = static_cast<Sat>(rng.range(100'000, 50'000'000));
        in.sequence = 0xfffffffe;
        return in;
    }

    int open_shape(int64_t height) {
        TransactionRecord t;
        t.txid = fresh_txid();
        t.block_height = height;
        t.inputs.push_back(funding_input());
        TxOutput chan;
        chan.index = 0;
        chan.script_class = OutputScript::P2wsh;
        chan.value_sat = static_cast<Sat>(rng.range(20'000, 16'000'000));
        t.outputs.push_back(chan);
        TxOutput change;
        change.index = 1;
        change.script_class = OutputScript::Other;
        change.value_sat = static_cast<Sat>(rng.range(50'000, 20'000'000));
        t.outputs.push_back(change);
        txs.push_back(std::move(t));
        return static_cast<int>(txs.size()) - 1;
    }

    // spends txs[open_idx]'s channel output
    int close_shape(int open_idx, int64_t height) {
        TransactionRecord t;
        t.txid = fresh_txid();
        t.block_height = height;
        TxInput in;
        in.prev_txid = txs[open_idx].txid;
        in.prev_index = 0;
        in.script_class = InputScript::P2wshMultisig2of2;
        in.value_sat = txs[open_idx].outputs[0].value_sat;
        in.sequence = 0xfffffffd;
        t.inputs.push_back(in);
        Sat total = in.value_sat;
        Sat a = total / 2 + static_cast<Sat>(rng.below(static_cast<uint64_t>(total / 4) + 1));
        TxOutput o0;
        o0.index = 0;
        o0.script_class = OutputScript::Other;
        o0.value_sat = a;
        TxOutput o1;
        o1.index = 1;
        o1.script_class = OutputScript::Other;
        o1.value_sat = total - a;
        t.outputs.push_back(o0);
        t.outputs.push_back(o1);
        txs.push_back(std::move(t));
        int idx = static_cast<int>(txs.size()) - 1;
        txs[open_idx].outputs[0].spent_by = SpendRef{txs[idx].txid, 0};
        return idx;
    }

    // rewires input `iidx` of txs[to] to spend output `oidx` of txs[from]
    void spend(int from, int oidx, int to, int iidx) {
        TxInput& in = txs[to].inputs[iidx];
        in.prev_txid = txs[from].txid;
        in.prev_index = oidx;
        in.value_sat = txs[from].outputs[oidx].value_sat;
        txs[from].outputs[oidx].spent_by = SpendRef{txs[to].txid, iidx};
    }
};

} // namespace

ChainCorpus make_chain_corpus(int total_txs, int private_channels, int public_channels,
                              int decoy_count, int chain_count, uint64_t seed) {
    if (total_txs < 1 || private_channels < 0 || public_channels < 0 || decoy_count < 0 ||
        chain_count < 0)
        throw ConfigError("corpus sizes must be nonnegative");
    if (public_channels < 2 * chain_count)
        throw ConfigError("each chain needs two public channels");
    if (private_channels < 3 * chain_count)
        throw ConfigError("each chain needs three private channels");

    ChainCorpus c;
    c.window = BlockWindow{100'000, 160'000};
    Rng rng(seed);
    CorpusBuilder b{Rng(derive_seed(seed, 1)), c.txs};

    int priv_left = private_channels;
    int carry = -1; // close tx index donating its refund to the next chain

    for (int ci = 0; ci < chain_count; ++ci) {
        std::string owner = "own" + std::to_string(ci);
        int reserve = 3 * (chain_count - ci - 1);
        int max_priv = std::min(12, priv_left - reserve);
        int n_priv = rng.range(3, std::max(3, max_priv));
        priv_left -= n_priv;

        std::vector<int> kinds(2, 0); // two public members
        kinds.insert(kinds.end(), n_priv, 1);
        for (size_t i = kinds.size(); i > 1; --i)
            std::swap(kinds[i - 1], kinds[rng.below(i)]);

        std::vector<std::string> members;
        int64_t h = c.window.first + static_cast<int64_t>(rng.below(4000));
        int prev_open = -1;        // change donor
        int own_refund_close = -1; // refund output waiting for reuse
        int incoming = carry;      // refund handed over by the previous chain
        carry = -1;

        for (size_t j = 0; j < kinds.size(); ++j) {
            h += 1 + static_cast<int64_t>(rng.below(30));
            int open = b.open_shape(h);
            if (prev_open >= 0) {
                b.txs[open].inputs[0].script_class = InputScript::P2wpkh;
                b.spend(prev_open, 1, open, 0);
            }
            if (j == 0 && incoming >= 0) {
                b.txs[open].inputs.push_back(b.funding_input());
                b.txs[open].inputs[1].script_class = InputScript::P2wpkh;
                b.spend(incoming, 1, open, 1);
                members.push_back(b.txs[incoming].txid);
                incoming = -1;
            } else if (own_refund_close >= 0 && rng.chance(0.4)) {
                b.txs[open].inputs.push_back(b.funding_input());
                b.txs[open].inputs.back().script_class = InputScript::P2wpkh;
                b.spend(own_refund_close, 0, open,
                        static_cast<int>(b.txs[open].inputs.size()) - 1);
                members.push_back(b.txs[own_refund_close].txid);
                own_refund_close = -1;
            }
            members.push_back(b.txs[open].txid);
            prev_open = open;

            bool is_public = kinds[j] == 0;
            if (is_public) {
                c.public_opens.push_back(b.txs[open].txid);
                c.seeds.push_back(b.txs[open].txid);
                c.public_endpoints[b.txs[open].txid] = {
                    owner, "peer" + std::to_string(rng.below(400)) + "_" + std::to_string(j)};
            } else {
                c.private_opens.push_back(b.txs[open].txid);
            }

            if (rng.chance(0.55)) {
                int64_t ch = std::min<int64_t>(c.window.last, h + 5 + rng.below(2500));
                int close = b.close_shape(open, ch);
                if (is_public) {
                    c.public_closes.push_back(b.txs[close].txid);
                    c.seeds.push_back(b.txs[close].txid);
                } else {
                    c.private_closes.push_back(b.txs[close].txid);
                }
                // a private refund either feeds the next chain (handing its
                // close to that owner's cluster) or waits for reuse here
                if (!is_public && ci + 1 < chain_count && carry < 0 && rng.chance(0.35))
                    carry = close;
                else
                    own_refund_close = close;
            }
        }
        std::sort(members.begin(), members.end());
        c.planted_chains.push_back(std::move(members));
    }

    for (int i = 0; i < priv_left; ++i) {
        int64_t h = c.window.first + static_cast<int64_t>(rng.below(60'000));
        int open = b.open_shape(h);
        c.private_opens.push_back(b.txs[open].txid);
        if (rng.chance(0.5)) {
            int close = b.close_shape(open, std::min<int64_t>(c.window.last, h + 5 + rng.below(2500)));
            c.private_closes.push_back(b.txs[close].txid);
        }
    }

    int pub_left = public_channels - 2 * chain_count;
    for (int i = 0; i < pub_left; ++i) {
        int64_t h = c.window.first + static_cast<int64_t>(rng.below(60'000));
        int open = b.open_shape(h);
        c.public_opens.push_back(b.txs[open].txid);
        c.seeds.push_back(b.txs[open].txid);
        std::string pa = "peer" + std::to_string(rng.below(400));
        std::string pb = "peer" + std::to_string(400 + rng.below(400));
        c.public_endpoints[b.txs[open].txid] = {pa, pb};
        if (rng.chance(0.5)) {
            int close = b.close_shape(open, std::min<int64_t>(c.window.last, h + 5 + rng.below(2500)));
            c.public_closes.push_back(b.txs[close].txid);
            c.seeds.push_back(b.txs[close].txid);
        }
    }

    for (int i = 0; i < decoy_count; ++i) {
        int64_t h = c.window.first + static_cast<int64_t>(rng.below(60'000));
        int cls = i % 7;
        if (cls <= 3) {
            int open = b.open_shape(h);
            TransactionRecord& t = b.txs[open];
            switch (cls) {
            case 0: { // a third output
                TxOutput extra;
                extra.index = 2;
                extra.script_class = OutputScript::Other;
                extra.value_sat = 12'345;
                t.outputs.push_back(extra);
                break;
            }
            case 1: // two channel-shaped outputs
                t.outputs[1].script_class = OutputScript::P2wsh;
                break;
            case 2: // too valuable
                t.outputs[0].value_sat =
                    16'777'216 + static_cast<Sat>(rng.below(10'000'000));
                break;
            default: // funded from the wrong kind of script
                t.inputs[0].script_class = InputScript::Other;
                break;
            }
            c.decoys.push_back(t.txid);
        } else {
            TransactionRecord t;
            t.txid = b.fresh_txid();
            t.block_height = h;
            TxInput in;
            in.prev_txid = b.fresh_ext();
            in.prev_index = 0;
            in.script_class = InputScript::P2wshMultisig2of2;
            in.value_sat = 500'000;
            in.sequence = cls == 4 ? 0 : 0xfffffffd; // rule: non-zero sequence
            t.inputs.push_back(in);
            if (cls == 5) { // rule: a single input
                TxInput in2 = in;
                in2.prev_txid = b.fresh_ext();
                in2.sequence = 0xfffffffd;
                t.inputs.push_back(in2);
            }
            int n_outs = cls == 6 ? 3 : 2; // rule: at most two outputs
            for (int k = 0; k < n_outs; ++k) {
                TxOutput o;
                o.index = k;
                o.script_class = OutputScript::Other;
                o.value_sat = 100'000;
                t.outputs.push_back(o);
            }
            c.decoys.push_back(t.txid);
            b.txs.push_back(std::move(t));
        }
    }

    int filler = total_txs - static_cast<int>(c.txs.size());
    if (filler < 0)
        throw ConfigError("total_txs too small for the requested corpus (need at least " +
                          std::to_string(c.txs.size()) + ")");
    for (int i = 0; i < filler; ++i) {
        TransactionRecord t;
        t.txid = b.fresh_txid();
        if (rng.chance(0.88))
            t.block_height = c.window.first + static_cast<int64_t>(rng.below(60'000));
        else
            t.block_height = rng.chance(0.5)
                                 ? static_cast<int64_t>(rng.below(c.window.first))
                                 : c.window.last + 1 + static_cast<int64_t>(rng.below(40'000));
        int n_in = rng.range(1, 3);
        for (int k = 0; k < n_in; ++k) {
            TxInput in = b.funding_input();
            if (rng.chance(0.2)) in.script_class = InputScript::Other;
            t.inputs.push_back(in);
        }
        int n_out = rng.range(1, 3);
        for (int k = 0; k < n_out; ++k) {
            TxOutput o;
            o.index = k;
            o.script_class = OutputScript::Other;
            o.value_sat = static_cast<Sat>(rng.range(1'000, 90'000'000));
            t.outputs.push_back(o);
        }
        b.txs.push_back(std::move(t));
    }

    for (size_t i = c.txs.size(); i > 1; --i)
        std::swap(c.txs[i - 1], c.txs[rng.below(i)]);

    TxDataset check;
    check.txs = c.txs;
    check.index_and_validate();
    return c;
}

} // namespace lnsim
