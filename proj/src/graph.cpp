#include "lnsim/graph.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace lnsim {

using nlohmann::json;

const char* client_name(Client c) {
    switch (c) {
    case Client::Lnd: return "lnd";
    case Client::CLightning: return "c-lightning";
    case Client::Eclair: return "eclair";
    }
    return "?";
}

std::optional<Client> client_from_name(const std::string& name) {
    if (name == "lnd") return Client::Lnd;
    if (name == "c-lightning" || name == "clightning") return Client::CLightning;
    if (name == "eclair") return Client::Eclair;
    return std::nullopt;
}

int64_t LatencyModel::between(const NodeAttributes& a, const NodeAttributes& b) const {
    if (a.address_class == AddressClass::Onion || b.address_class == AddressClass::Onion)
        return onion_ms;
    auto key = std::minmax(a.location, b.location);
    auto it = pair_ms.find({key.first, key.second});
    if (it != pair_ms.end()) return it->second;
    return a.location == b.location ? intra_ms : cross_ms;
}

void LatencyModel::load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open latency file: " + path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto parts = split(line, ',');
        if (parts.size() != 3) throw ParseError("bad latency row: " + line);
        auto key = std::minmax(parts[0], parts[1]);
        pair_ms[{key.first, key.second}] = std::stoll(parts[2]);
    }
}

int NetworkGraph::add_node(const std::string& id) { return add_node(id, NodeAttributes{}); }

int NetworkGraph::add_node(const std::string& id, const NodeAttributes& attrs) {
    auto it = node_index_.find(id);
    if (it != node_index_.end()) return it->second;
    int idx = static_cast<int>(node_ids.size());
    node_ids.push_back(id);
    node_attrs.push_back(attrs);
    node_index_[id] = idx;
    return idx;
}

int NetworkGraph::add_channel(const std::string& cid, const std::string& node1,
                              const std::string& node2, Msat capacity_msat, const FeePolicy& p_ab,
                              const FeePolicy& p_ba, bool is_public) {
    if (capacity_msat <= 0) throw ConfigError("channel " + cid + ": capacity must be positive");
    if (node1 == node2) throw ConfigError("channel " + cid + ": self loop");
    if (channel_index_.count(cid)) throw ConfigError("duplicate channel id " + cid);
    Channel c;
    c.cid = cid;
    c.node_a = add_node(node1);
    c.node_b = add_node(node2);
    c.capacity_msat = capacity_msat;
    c.policy_ab = p_ab;
    c.policy_ba = p_ba;
    c.is_public = is_public;
    int idx = static_cast<int>(channels.size());
    channels.push_back(c);
    channel_index_[cid] = idx;
    max_capacity_msat_ = std::max(max_capacity_msat_, capacity_msat);
    return idx;
}

void NetworkGraph::rebuild_adjacency() {
    out_edges_.assign(node_ids.size(), {});
    in_edges_.assign(node_ids.size(), {});
    for (int i = 0; i < static_cast<int>(channels.size()); ++i) {
        const Channel& c = channels[i];
        if (c.balance_ab_msat >= 0 && c.balance_ba_msat >= 0 &&
            c.balance_ab_msat + c.balance_ba_msat != c.capacity_msat)
            throw ConfigError("channel " + c.cid + ": balances do not sum to capacity");
        out_edges_[c.node_a].push_back({i, false});
        in_edges_[c.node_b].push_back({i, false});
        out_edges_[c.node_b].push_back({i, true});
        in_edges_[c.node_a].push_back({i, true});
    }
}

int NetworkGraph::find_node(const std::string& id) const {
    auto it = node_index_.find(id);
    return it == node_index_.end() ? -1 : it->second;
}

int NetworkGraph::find_channel(const std::string& cid) const {
    auto it = channel_index_.find(cid);
    return it == channel_index_.end() ? -1 : it->second;
}

int NetworkGraph::tail(EdgeRef e) const {
    const Channel& c = channels[e.channel];
    return e.rev ? c.node_b : c.node_a;
}

int NetworkGraph::head(EdgeRef e) const {
    const Channel& c = channels[e.channel];
    return e.rev ? c.node_a : c.node_b;
}

const FeePolicy& NetworkGraph::policy(EdgeRef e) const {
    const Channel& c = channels[e.channel];
    return e.rev ? c.policy_ba : c.policy_ab;
}

Msat NetworkGraph::balance(EdgeRef e) const {
    const Channel& c = channels[e.channel];
    return e.rev ? c.balance_ba_msat : c.balance_ab_msat;
}

void NetworkGraph::set_balance(EdgeRef e, Msat value) {
    Channel& c = channels[e.channel];
    if (value < 0 || value > c.capacity_msat)
        throw ConfigError("channel " + c.cid + ": balance out of range");
    if (e.rev) {
        c.balance_ba_msat = value;
        c.balance_ab_msat = c.capacity_msat - value;
    } else {
        c.balance_ab_msat = value;
        c.balance_ba_msat = c.capacity_msat - value;
    }
}

int64_t NetworkGraph::latency_ms(int u, int v) const {
    return latency.between(node_attrs[u], node_attrs[v]);
}

static FeePolicy policy_from_json(const json& j) {
    FeePolicy p;
    p.base_fee_msat = j.at("base_fee_msat").get<Msat>();
    p.fee_rate_ppm = j.at("fee_rate_ppm").get<int64_t>();
    p.cltv_delta = j.at("cltv_delta").get<int>();
    return p;
}

static json policy_to_json(const FeePolicy& p) {
    return json{{"base_fee_msat", p.base_fee_msat},
                {"fee_rate_ppm", p.fee_rate_ppm},
                {"cltv_delta", p.cltv_delta}};
}

static NodeAttributes attrs_from_json(const json& j) {
    NodeAttributes a;
    if (j.contains("client")) {
        auto c = client_from_name(j.at("client").get<std::string>());
        if (!c) throw ParseError("unknown client: " + j.at("client").get<std::string>());
        a.client = c;
    }
    if (j.contains("addresses")) {
        for (const auto& addr : j.at("addresses")) {
            std::string s = addr.get<std::string>();
            auto pos = s.find("://");
            if (pos == std::string::npos) throw ParseError("bad address: " + s);
            std::string scheme = s.substr(0, pos);
            std::string rest = s.substr(pos + 3);
            if (scheme == "onion") {
                a.address_class = AddressClass::Onion;
                a.location.clear();
                break; // onion wins: no usable clearnet location
            }
            a.address_class = scheme == "ipv6" ? AddressClass::Ipv6 : AddressClass::Ipv4;
            a.location = rest;
        }
    }
    return a;
}

NetworkGraph load_snapshot(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open snapshot: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ParseError(std::string("snapshot json: ") + e.what());
    }
    NetworkGraph g;
    for (const auto& jn : doc.at("nodes"))
        g.add_node(jn.at("id").get<std::string>(), attrs_from_json(jn));
    for (const auto& jc : doc.at("channels")) {
        Sat cap_sat = jc.at("capacity_sat").get<Sat>();
        std::string cid = jc.at("cid").get<std::string>();
        for (const char* key : {"node1", "node2"}) {
            if (g.find_node(jc.at(key).get<std::string>()) < 0)
                throw ParseError("channel " + cid + ": unknown node " +
                                 jc.at(key).get<std::string>());
        }
        int idx = g.add_channel(cid, jc.at("node1").get<std::string>(),
                                jc.at("node2").get<std::string>(), cap_sat * kMsatPerSat,
                                policy_from_json(jc.at("policy1")),
                                policy_from_json(jc.at("policy2")),
                                jc.value("public", true));
        if (jc.contains("balance1_sat")) {
            Sat b = jc.at("balance1_sat").get<Sat>();
            if (b < 0 || b > cap_sat)
                throw ParseError("channel " + g.channels[idx].cid + ": balance1_sat out of range");
            g.channels[idx].balance_ab_msat = b * kMsatPerSat;
            g.channels[idx].balance_ba_msat = (cap_sat - b) * kMsatPerSat;
        }
    }
    g.rebuild_adjacency();
    return g;
}

void write_snapshot(const NetworkGraph& g, const std::string& path) {
    json nodes = json::array();
    for (int i = 0; i < g.node_count(); ++i) {
        const NodeAttributes& a = g.node_attrs[i];
        json jn{{"id", g.node_ids[i]}};
        if (a.client) jn["client"] = client_name(*a.client);
        std::string addr;
        switch (a.address_class) {
        case AddressClass::Ipv4: addr = "ipv4://" + a.location; break;
        case AddressClass::Ipv6: addr = "ipv6://" + a.location; break;
        case AddressClass::Onion: addr = "onion://" + g.node_ids[i] + ".onion"; break;
        }
        jn["addresses"] = json::array({addr});
        nodes.push_back(std::move(jn));
    }
    json chans = json::array();
    for (const Channel& c : g.channels) {
        json jc{{"cid", c.cid},
                {"node1", g.node_ids[c.node_a]},
                {"node2", g.node_ids[c.node_b]},
                {"capacity_sat", c.capacity_msat / kMsatPerSat},
                {"policy1", policy_to_json(c.policy_ab)},
                {"policy2", policy_to_json(c.policy_ba)},
                {"public", c.is_public}};
        if (c.balance_ab_msat >= 0) jc["balance1_sat"] = c.balance_ab_msat / kMsatPerSat;
        chans.push_back(std::move(jc));
    }
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write snapshot: " + path);
    out << json{{"nodes", std::move(nodes)}, {"channels", std::move(chans)}}.dump(1) << "\n";
}

BalanceMode BalanceMode::parse(const std::string& text) {
    BalanceMode m;
    if (text == "uniform") {
        m.kind = Uniform;
    } else if (text == "one_sided") {
        m.kind = OneSided;
    } else if (text.rfind("skewed", 0) == 0) {
        m.kind = Skewed;
        auto open = text.find('(');
        if (open != std::string::npos) {
            auto close = text.find(')', open);
            if (close == std::string::npos) throw ConfigError("bad balance mode: " + text);
            m.skew = std::stod(text.substr(open + 1, close - open - 1));
            if (m.skew <= 0.5 || m.skew > 1.0)
                throw ConfigError("skew fraction must be in (0.5, 1]");
        }
    } else {
        throw ConfigError("unknown balance mode: " + text);
    }
    return m;
}

void assign_balances(NetworkGraph& g, const BalanceMode& mode, Rng& rng) {
    for (Channel& c : g.channels) {
        if (c.balance_ab_msat >= 0) continue;
        Sat cap = c.capacity_msat / kMsatPerSat;
        Sat ab = 0;
        switch (mode.kind) {
        case BalanceMode::Uniform:
            ab = rng.range(0, cap);
            break;
        case BalanceMode::OneSided:
            ab = cap; // opener funds the whole channel, node_a by convention
            break;
        case BalanceMode::Skewed: {
            double frac;
            if (rng.chance(mode.skew_prob))
                frac = mode.skew + rng.real() * (1.0 - mode.skew);
            else
                frac = (1.0 - mode.skew) + rng.real() * (2.0 * mode.skew - 1.0);
            if (rng.chance(0.5)) frac = 1.0 - frac;
            ab = std::min<Sat>(cap, static_cast<Sat>(frac * static_cast<double>(cap + 1)));
            break;
        }
        }
        c.balance_ab_msat = ab * kMsatPerSat;
        c.balance_ba_msat = c.capacity_msat - c.balance_ab_msat;
    }
}

void assign_attributes(NetworkGraph& g, const ClientDistribution& dist, double onion_share,
                       const std::vector<std::string>& locations, Rng& rng) {
    int64_t total = dist.lnd + dist.clightning + dist.eclair;
    if (total <= 0) throw ConfigError("client distribution is empty");
    for (int i = 0; i < g.node_count(); ++i) {
        NodeAttributes& a = g.node_attrs[i];
        if (!a.client) {
            int64_t r = rng.range(0, total - 1);
            if (r < dist.lnd)
                a.client = Client::Lnd;
            else if (r < dist.lnd + dist.clightning)
                a.client = Client::CLightning;
            else
                a.client = Client::Eclair;
        }
        if (a.location.empty() && a.address_class != AddressClass::Onion) {
            if (rng.chance(onion_share)) {
                a.address_class = AddressClass::Onion;
            } else if (!locations.empty()) {
                a.location = locations[rng.below(locations.size())];
            }
        }
    }
}

} // namespace lnsim
