#include "lnsim/chain.hpp"

#include <algorithm>
#include <deque>
#include <fstream>

#include "json.hpp"

namespace lnsim {

using nlohmann::json;

InputScript input_script_from_name(const std::string& name) {
    if (name == "p2wpkh") return InputScript::P2wpkh;
    if (name == "p2sh") return InputScript::P2sh;
    if (name == "p2wsh-multisig-2of2") return InputScript::P2wshMultisig2of2;
    if (name == "other") return InputScript::Other;
    throw ParseError("unknown input script class '" + name + "'");
}

OutputScript output_script_from_name(const std::string& name) {
    if (name == "p2wsh") return OutputScript::P2wsh;
    if (name == "other") return OutputScript::Other;
    throw ParseError("unknown output script class '" + name + "'");
}

const char* to_name(InputScript s) {
    switch (s) {
    case InputScript::P2wpkh: return "p2wpkh";
    case InputScript::P2sh: return "p2sh";
    case InputScript::P2wshMultisig2of2: return "p2wsh-multisig-2of2";
    default: return "other";
    }
}

const char* to_name(OutputScript s) {
    return s == OutputScript::P2wsh ? "p2wsh" : "other";
}

const TransactionRecord* TxDataset::find(const std::string& txid) const {
    auto it = by_txid.find(txid);
    return it == by_txid.end() ? nullptr : &txs[it->second];
}

void TxDataset::index_and_validate() {
    by_txid.clear();
    for (size_t i = 0; i < txs.size(); ++i) {
        const TransactionRecord& t = txs[i];
        if (t.txid.empty()) throw ParseError("transaction with empty txid");
        if (!by_txid.emplace(t.txid, static_cast<int>(i)).second)
            throw ParseError("duplicate txid " + t.txid);
        if (t.block_height < 0) throw ParseError(t.txid + ": negative block height");
        for (size_t k = 0; k < t.outputs.size(); ++k) {
            if (t.outputs[k].index != static_cast<int>(k))
                throw ParseError(t.txid + ": output indices must be 0,1,... in order");
            if (t.outputs[k].value_sat < 0) throw ParseError(t.txid + ": negative output value");
        }
        for (const TxInput& in : t.inputs)
            if (in.value_sat < 0) throw ParseError(t.txid + ": negative input value");
    }

    // spend links may dangle off the dataset edge (funding or spends outside
    // the collection window), but whenever both transactions are present the
    // two ends have to agree
    for (const TransactionRecord& t : txs) {
        for (const TxOutput& o : t.outputs) {
            if (!o.spent_by) continue;
            const TransactionRecord* s = find(o.spent_by->txid);
            if (!s) continue;
            int ii = o.spent_by->input_index;
            if (ii < 0 || ii >= static_cast<int>(s->inputs.size()) ||
                s->inputs[ii].prev_txid != t.txid || s->inputs[ii].prev_index != o.index)
                throw ParseError(t.txid + " output " + std::to_string(o.index) +
                                 ": spend link to " + o.spent_by->txid + " does not match back");
        }
        for (size_t i = 0; i < t.inputs.size(); ++i) {
            const TransactionRecord* p = find(t.inputs[i].prev_txid);
            if (!p) continue;
            int oi = t.inputs[i].prev_index;
            if (oi < 0 || oi >= static_cast<int>(p->outputs.size()))
                throw ParseError(t.txid + " input " + std::to_string(i) +
                                 ": previous output out of range");
            const TxOutput& o = p->outputs[oi];
            if (!o.spent_by || o.spent_by->txid != t.txid ||
                o.spent_by->input_index != static_cast<int>(i))
                throw ParseError(t.txid + " input " + std::to_string(i) + ": " +
                                 p->txid + " does not record this spend");
        }
    }
}

static TransactionRecord record_from_json(const json& j) {
    TransactionRecord t;
    t.txid = j.at("txid").get<std::string>();
    t.block_height = j.at("block_height").get<int64_t>();
    for (const json& ji : j.at("inputs")) {
        TxInput in;
        in.prev_txid = ji.at("prev_txid").get<std::string>();
        in.prev_index = ji.at("prev_index").get<int>();
        in.script_class = input_script_from_name(ji.at("script_class").get<std::string>());
        in.value_sat = ji.at("value_sat").get<Sat>();
        in.sequence = ji.at("sequence").get<uint32_t>();
        t.inputs.push_back(std::move(in));
    }
    for (const json& jo : j.at("outputs")) {
        TxOutput out;
        out.index = jo.at("index").get<int>();
        out.script_class = output_script_from_name(jo.at("script_class").get<std::string>());
        out.value_sat = jo.at("value_sat").get<Sat>();
        if (jo.contains("spent_by") && !jo.at("spent_by").is_null()) {
            SpendRef ref;
            ref.txid = jo.at("spent_by").at("txid").get<std::string>();
            ref.input_index = jo.at("spent_by").at("input_index").get<int>();
            out.spent_by = std::move(ref);
        }
        t.outputs.push_back(std::move(out));
    }
    return t;
}

TxDataset load_transactions(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    TxDataset ds;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            ds.txs.push_back(record_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw ParseError(path + " line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    try {
        ds.index_and_validate();
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
    return ds;
}

void save_transactions(const std::vector<TransactionRecord>& txs, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    for (const TransactionRecord& t : txs) {
        json ins = json::array();
        for (const TxInput& in : t.inputs)
            ins.push_back({{"prev_txid", in.prev_txid},
                           {"prev_index", in.prev_index},
                           {"script_class", to_name(in.script_class)},
                           {"value_sat", in.value_sat},
                           {"sequence", in.sequence}});
        json outs = json::array();
        for (const TxOutput& o : t.outputs) {
            json jo = {{"index", o.index},
                       {"script_class", to_name(o.script_class)},
                       {"value_sat", o.value_sat}};
            if (o.spent_by)
                jo["spent_by"] = {{"txid", o.spent_by->txid},
                                  {"input_index", o.spent_by->input_index}};
            outs.push_back(std::move(jo));
        }
        out << json{{"txid", t.txid},
                    {"block_height", t.block_height},
                    {"inputs", std::move(ins)},
                    {"outputs", std::move(outs)}}
                   .dump()
            << '\n';
    }
}

std::optional<int> channel_output(const TransactionRecord& tx) {
    for (const TxOutput& o : tx.outputs)
        if (o.script_class == OutputScript::P2wsh) return o.index;
    return std::nullopt;
}

std::optional<int> change_output(const TransactionRecord& tx) {
    if (tx.outputs.size() != 2) return std::nullopt;
    bool w0 = tx.outputs[0].script_class == OutputScript::P2wsh;
    bool w1 = tx.outputs[1].script_class == OutputScript::P2wsh;
    if (w0 == w1) return std::nullopt;
    return w0 ? 1 : 0;
}

bool classify_opening(const TransactionRecord& tx, const BlockWindow& window,
                      const HeuristicRules& rules) {
    if (!window.contains(tx.block_height)) return false;
    std::optional<int> chan = channel_output(tx);
    if (!chan) return false;
    if (rules.max_two_outputs && tx.outputs.size() > 2) return false;
    if (rules.single_p2wsh_output) {
        int p2wsh = 0;
        for (const TxOutput& o : tx.outputs)
            if (o.script_class == OutputScript::P2wsh) ++p2wsh;
        if (p2wsh != 1) return false;
    }
    if (rules.value_cap && tx.outputs[*chan].value_sat > rules.value_cap_sat) return false;
    // single_spend: an output here can record at most one spender, so the
    // one-time-use feature cannot fail on this data shape
    if (rules.funding_script_classes)
        for (const TxInput& in : tx.inputs)
            if (in.script_class != InputScript::P2wpkh && in.script_class != InputScript::P2sh)
                return false;
    return true;
}

bool classify_closing(const TransactionRecord& tx) {
    return tx.inputs.size() == 1 &&
           tx.inputs[0].script_class == InputScript::P2wshMultisig2of2 &&
           tx.inputs[0].sequence != 0 && tx.outputs.size() <= 2;
}

std::vector<ChannelLink> match_open_close(const TxDataset& ds, const BlockWindow& window,
                                          const std::set<std::string>& public_txids,
                                          const HeuristicRules& rules) {
    std::vector<ChannelLink> out;
    for (const TransactionRecord& t : ds.txs) {
        if (public_txids.count(t.txid)) continue;
        if (!classify_opening(t, window, rules)) continue;
        const TxOutput& chan = t.outputs[*channel_output(t)];
        ChannelLink link;
        link.open_txid = t.txid;
        if (chan.spent_by) {
            if (public_txids.count(chan.spent_by->txid)) continue;
            const TransactionRecord* close = ds.find(chan.spent_by->txid);
            // a spent channel output must have been spent the way channels
            // close; anything else disqualifies the open
            if (!close || !classify_closing(*close)) continue;
            link.close_txid = close->txid;
        }
        out.push_back(std::move(link));
    }
    return out;
}

namespace {

struct Dsu {
    std::vector<int> parent;
    explicit Dsu(size_t n) : parent(n) {
        for (size_t i = 0; i < n; ++i) parent[i] = static_cast<int>(i);
    }
    int find(int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

} // namespace

PeelingChains trace_peeling_chains(const TxDataset& ds, const std::vector<std::string>& seeds,
                                   const BlockWindow& window, const HeuristicRules& rules) {
    for (const std::string& s : seeds)
        if (!ds.find(s)) throw ConfigError("seed transaction " + s + " not in dataset");

    auto admits = [&](const TransactionRecord& t) {
        return classify_opening(t, window, rules) || classify_closing(t);
    };

    Dsu dsu(ds.txs.size());
    std::vector<char> admitted(ds.txs.size(), 0);
    std::vector<int> order; // admission sequence, keeps output deterministic
    std::deque<int> queue;

    std::set<std::string> seed_set(seeds.begin(), seeds.end());
    for (const std::string& s : seeds) {
        int idx = ds.by_txid.at(s);
        if (!admitted[idx]) {
            admitted[idx] = 1;
            order.push_back(idx);
            queue.push_back(idx);
        }
    }

    auto link = [&](int from, const std::string& to_txid) {
        auto it = ds.by_txid.find(to_txid);
        if (it == ds.by_txid.end()) return;
        int to = it->second;
        if (!admitted[to]) {
            if (!admits(ds.txs[to])) return;
            admitted[to] = 1;
            order.push_back(to);
            queue.push_back(to);
        }
        dsu.unite(from, to);
    };

    while (!queue.empty()) {
        int cur = queue.front();
        queue.pop_front();
        const TransactionRecord& t = ds.txs[cur];
        if (classify_closing(t)) {
            // refund outputs often fund the owners' next channels. The input
            // is the channel point itself: walking it backward would weld the
            // two participants' histories together, so it stays untouched.
            for (const TxOutput& o : t.outputs)
                if (o.spent_by) link(cur, o.spent_by->txid);
        } else {
            for (const TxInput& in : t.inputs) link(cur, in.prev_txid);
            std::optional<int> change = change_output(t);
            if (change && t.outputs[*change].spent_by)
                link(cur, t.outputs[*change].spent_by->txid);
        }
    }

    // components with at least two members are chains; lone seeds are not
    std::unordered_map<int, int> chain_index;
    std::vector<int> comp_size(ds.txs.size(), 0);
    for (int idx : order) ++comp_size[dsu.find(idx)];

    PeelingChains out;
    for (int idx : order) {
        int root = dsu.find(idx);
        if (comp_size[root] < 2) continue;
        auto it = chain_index.find(root);
        if (it == chain_index.end()) {
            it = chain_index.emplace(root, static_cast<int>(out.chains.size())).first;
            out.chains.emplace_back();
        }
        out.chains[it->second].push_back(ds.txs[idx].txid);
        out.chain_of[ds.txs[idx].txid] = it->second;
        if (!seed_set.count(ds.txs[idx].txid) && classify_opening(ds.txs[idx], window, rules))
            out.new_opens.push_back(ds.txs[idx].txid);
    }
    return out;
}

std::vector<ChannelLink> cluster_and_identify(
    const TxDataset& ds, const PeelingChains& chains, std::vector<ChannelLink> links,
    const std::map<std::string, std::pair<std::string, std::string>>& public_endpoints) {
    // a cluster's opener is the one node every public channel in it touches
    std::vector<std::optional<std::string>> opener(chains.chains.size());
    for (size_t i = 0; i < chains.chains.size(); ++i) {
        std::set<std::string> common;
        bool first = true;
        for (const std::string& txid : chains.chains[i]) {
            auto it = public_endpoints.find(txid);
            if (it == public_endpoints.end()) continue;
            std::set<std::string> pair = {it->second.first, it->second.second};
            if (first) {
                common = std::move(pair);
                first = false;
            } else {
                std::set<std::string> keep;
                for (const std::string& n : common)
                    if (pair.count(n)) keep.insert(n);
                common = std::move(keep);
            }
        }
        if (!first && common.size() == 1) opener[i] = *common.begin();
    }

    for (ChannelLink& link : links) {
        auto it = chains.chain_of.find(link.open_txid);
        if (it != chains.chain_of.end()) {
            link.cluster_id = it->second;
            if (opener[it->second]) link.participants.push_back(*opener[it->second]);
        }
        if (!link.close_txid) continue;
        const TransactionRecord* close = ds.find(*link.close_txid);
        if (!close) continue;
        // whoever reopened from a refund output was sitting on the channel;
        // a different cluster's opener over there is our second participant
        for (const TxOutput& o : close->outputs) {
            if (!o.spent_by) continue;
            auto jt = chains.chain_of.find(o.spent_by->txid);
            if (jt == chains.chain_of.end()) continue;
            if (link.cluster_id && jt->second == *link.cluster_id) continue;
            if (!opener[jt->second]) continue;
            if (!link.participants.empty() && link.participants[0] == *opener[jt->second])
                continue;
            link.participants.push_back(*opener[jt->second]);
            break;
        }
    }
    return links;
}

AttributionCounts count_attributions(const std::vector<ChannelLink>& links) {
    AttributionCounts c;
    for (const ChannelLink& l : links) {
        if (l.participants.size() >= 2)
            ++c.both;
        else if (l.participants.size() == 1)
            ++c.one;
        else
            ++c.none;
    }
    return c;
}

void write_chain_links_csv(const std::vector<ChannelLink>& links, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    out << "open_txid,close_txid,cluster_id,participant1,participant2\n";
    for (const ChannelLink& l : links) {
        out << l.open_txid << ',' << (l.close_txid ? *l.close_txid : "") << ',';
        if (l.cluster_id) out << *l.cluster_id;
        out << ',' << (l.participants.size() > 0 ? l.participants[0] : "") << ','
            << (l.participants.size() > 1 ? l.participants[1] : "") << '\n';
    }
}

} // namespace lnsim
