#include "lnsim/pathfind.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <set>
#include <tuple>

namespace lnsim {

Msat hop_fee(const FeePolicy& policy, Msat amt) {
    if (amt < 0) throw std::invalid_argument("hop_fee: negative amount");
    // split so amt * rate stays inside 64 bits even for silly rates
    Msat q = amt / 1'000'000;
    Msat s = amt % 1'000'000;
    return policy.base_fee_msat + q * policy.fee_rate_ppm + s * policy.fee_rate_ppm / 1'000'000;
}

double edge_weight(Client client, const FeePolicy& policy, Msat capacity_msat,
                   Msat max_capacity_msat, Msat amt, const WeightParams& wp) {
    double fee = static_cast<double>(hop_fee(policy, amt));
    double a = static_cast<double>(amt);
    double cltv = static_cast<double>(policy.cltv_delta);
    switch (client) {
    case Client::Lnd:
        return fee + a * cltv * wp.lnd_risk_factor;
    case Client::CLightning:
        return fee + a * cltv * wp.cl_risk_factor / (52596.0 * 100.0) + wp.cl_bias_msat;
    case Client::Eclair: {
        double ratio = max_capacity_msat > 0 ? static_cast<double>(capacity_msat) /
                                                   static_cast<double>(max_capacity_msat)
                                             : 1.0;
        return fee *
               (1.0 + wp.eclair_cltv_factor * cltv + wp.eclair_capacity_factor * (1.0 - ratio));
    }
    }
    return fee;
}

std::vector<int> Path::node_sequence(const NetworkGraph& g) const {
    std::vector<int> seq;
    seq.push_back(sender);
    for (EdgeRef e : hops) seq.push_back(g.head(e));
    return seq;
}

static bool private_blocked(const Channel& c, int sender, int recipient) {
    return !c.is_public && c.node_a != sender && c.node_b != sender && c.node_a != recipient &&
           c.node_b != recipient;
}

std::optional<Path> make_path(const NetworkGraph& g, Client client, const WeightParams& wp,
                              int sender, int recipient, Msat amt,
                              const std::vector<EdgeRef>& hops) {
    if (hops.empty() || static_cast<int>(hops.size()) > kMaxPathNodes - 1) return std::nullopt;
    if (g.tail(hops.front()) != sender || g.head(hops.back()) != recipient) return std::nullopt;
    for (size_t i = 0; i + 1 < hops.size(); ++i)
        if (g.head(hops[i]) != g.tail(hops[i + 1])) return std::nullopt;
    Path p;
    p.sender = sender;
    p.recipient = recipient;
    p.amount_msat = amt;
    p.hops = hops;
    p.per_hop_amount.resize(hops.size());
    Msat need = amt;
    double w = 0.0;
    Msat maxcap = g.max_capacity_msat();
    // right-to-left so fee accumulation and weight sum order are the same everywhere
    for (size_t k = hops.size(); k-- > 0;) {
        EdgeRef e = hops[k];
        const Channel& c = g.channels[e.channel];
        if (private_blocked(c, sender, recipient)) return std::nullopt;
        if (c.capacity_msat < need) return std::nullopt;
        p.per_hop_amount[k] = need;
        w += edge_weight(client, g.policy(e), c.capacity_msat, maxcap, need, wp);
        if (k > 0) need += hop_fee(g.policy(e), need);
    }
    p.total_weight = w;
    return p;
}

bool path_order_less(const NetworkGraph& g, const Path& a, const Path& b) {
    if (a.total_weight != b.total_weight) return a.total_weight < b.total_weight;
    if (a.hops.size() != b.hops.size()) return a.hops.size() < b.hops.size();
    for (size_t i = 0; i < a.hops.size(); ++i) {
        const std::string& ca = g.channels[a.hops[i].channel].cid;
        const std::string& cb = g.channels[b.hops[i].channel].cid;
        if (ca != cb) return ca < cb;
    }
    return false;
}

namespace {

// backward label over the suffix toward the recipient:
// w = suffix weight, need = msat the labeled node must receive
struct Label {
    int node = -1;
    double w = 0.0;
    Msat need = 0;
    int hops = 0;
    int parent = -1; // -1 only at the recipient root
    EdgeRef via;     // edge node -> parent's node
    bool dead = false;
};

struct SearchContext {
    const NetworkGraph& g;
    std::vector<Label> arena;
    std::vector<std::vector<int>> frontier;

    explicit SearchContext(const NetworkGraph& graph) : g(graph) {
        frontier.resize(graph.node_count());
    }

    // cid order of the two suffix chains, walking toward the recipient.
    // chains share nodes while cids agree, so cid comparison alone is enough.
    int compare_chain(int ai, int bi) const {
        while (true) {
            bool ra = arena[ai].parent == -1;
            bool rb = arena[bi].parent == -1;
            if (ra && rb) return 0;
            if (ra) return -1;
            if (rb) return 1;
            const std::string& ca = g.channels[arena[ai].via.channel].cid;
            const std::string& cb = g.channels[arena[bi].via.channel].cid;
            if (ca != cb) return ca < cb ? -1 : 1;
            ai = arena[ai].parent;
            bi = arena[bi].parent;
        }
    }

    // a makes b redundant: no completion through b can beat a's completion,
    // including the hop-count and cid tie-breaks. The cid condition matters:
    // weight ties survive extension when added weights are amount-flat.
    bool wins(int a, int b) const {
        const Label& la = arena[a];
        const Label& lb = arena[b];
        if (la.w > lb.w || la.need > lb.need || la.hops > lb.hops) return false;
        if (la.hops < lb.hops) return true;
        return compare_chain(a, b) <= 0;
    }

    // false = dominated on arrival, keep out of the heap
    bool insert(int id) {
        auto& fr = frontier[arena[id].node];
        for (int ex : fr) {
            if (!arena[ex].dead && wins(ex, id)) {
                arena[id].dead = true;
                return false;
            }
        }
        bool killed = false;
        for (int ex : fr) {
            if (!arena[ex].dead && wins(id, ex)) {
                arena[ex].dead = true;
                killed = true;
            }
        }
        if (killed) std::erase_if(fr, [&](int x) { return arena[x].dead; });
        fr.push_back(id);
        return true;
    }
};

struct SearchRequest {
    int sender = -1;
    int recipient = -1;
    Msat amount = 0;
    Client client = Client::Lnd;
    WeightParams wp;
    int max_edges = kMaxPathNodes - 1;
    const std::vector<char>* banned_node = nullptr;
    const std::vector<std::pair<int, bool>>* banned_first = nullptr;
    bool stop_at_best = false; // single-path mode; spur searches want the whole frontier
};

std::vector<int> run_search(SearchContext& ctx, const SearchRequest& rq) {
    using Entry = std::tuple<double, Msat, int, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;

    ctx.arena.push_back({rq.recipient, 0.0, rq.amount, 0, -1, {}, false});
    ctx.frontier[rq.recipient].push_back(0);
    heap.push({0.0, rq.amount, 0, 0});

    auto first_edge_banned = [&](EdgeRef e) {
        if (!rq.banned_first) return false;
        for (const auto& [ch, rev] : *rq.banned_first)
            if (ch == e.channel && rev == e.rev) return true;
        return false;
    };

    double best_w = std::numeric_limits<double>::infinity();
    bool have_best = false;
    std::vector<int> out;
    Msat maxcap = ctx.g.max_capacity_msat();

    while (!heap.empty()) {
        auto [w, need, hops, id] = heap.top();
        heap.pop();
        if (ctx.arena[id].dead) continue;
        if (rq.stop_at_best && have_best && w > best_w) break; // pops are weight-ordered
        int node = ctx.arena[id].node;
        if (node == rq.sender) {
            if (!have_best || w < best_w) {
                best_w = w;
                have_best = true;
            }
            out.push_back(id);
            continue;
        }
        if (hops >= rq.max_edges) continue;
        for (EdgeRef in : ctx.g.into(node)) {
            const Channel& c = ctx.g.channels[in.channel];
            int u = ctx.g.tail(in);
            if (u == rq.recipient) continue;
            if (rq.banned_node && (*rq.banned_node)[u]) continue;
            if (private_blocked(c, rq.sender, rq.recipient)) continue;
            if (c.capacity_msat < need) continue;
            if (u == rq.sender && first_edge_banned(in)) continue;
            const FeePolicy& pol = ctx.g.policy(in);
            double nw = w + edge_weight(rq.client, pol, c.capacity_msat, maxcap, need, rq.wp);
            if (rq.stop_at_best && have_best && nw > best_w) continue;
            Msat nneed = need + hop_fee(pol, need);
            int nid = static_cast<int>(ctx.arena.size());
            ctx.arena.push_back({u, nw, nneed, hops + 1, id, in, false});
            if (ctx.insert(nid)) heap.push({nw, nneed, hops + 1, nid});
        }
    }
    std::erase_if(out, [&](int x) { return ctx.arena[x].dead; });
    return out;
}

std::vector<EdgeRef> chain_hops(const SearchContext& ctx, int label) {
    std::vector<EdgeRef> hops;
    for (int cur = label; ctx.arena[cur].parent != -1; cur = ctx.arena[cur].parent)
        hops.push_back(ctx.arena[cur].via);
    return hops; // already sender-to-recipient order
}

void validate_query(const NetworkGraph& g, int sender, int recipient, Msat amt) {
    if (sender < 0 || sender >= g.node_count() || recipient < 0 || recipient >= g.node_count())
        throw std::invalid_argument("path query: node out of range");
    if (sender == recipient) throw std::invalid_argument("path query: sender equals recipient");
    if (amt <= 0) throw std::invalid_argument("path query: amount must be positive");
}

} // namespace

std::optional<Path> find_path(const NetworkGraph& g, int sender, int recipient, Msat amt,
                              Client client, const WeightParams& wp) {
    validate_query(g, sender, recipient, amt);
    SearchContext ctx(g);
    SearchRequest rq;
    rq.sender = sender;
    rq.recipient = recipient;
    rq.amount = amt;
    rq.client = client;
    rq.wp = wp;
    rq.stop_at_best = true;
    auto found = run_search(ctx, rq);
    if (found.empty()) return std::nullopt;
    int best = found[0];
    for (size_t i = 1; i < found.size(); ++i) {
        const Label& a = ctx.arena[found[i]];
        const Label& b = ctx.arena[best];
        if (a.w < b.w || (a.w == b.w && (a.hops < b.hops ||
                                         (a.hops == b.hops &&
                                          ctx.compare_chain(found[i], best) < 0))))
            best = found[i];
    }
    return make_path(g, client, wp, sender, recipient, amt, chain_hops(ctx, best));
}

std::vector<Path> k_shortest_paths(const NetworkGraph& g, int sender, int recipient, Msat amt,
                                   int k, Client client, const WeightParams& wp) {
    if (k < 1) throw std::invalid_argument("k_shortest_paths: k must be >= 1");
    std::vector<Path> accepted;
    auto first = find_path(g, sender, recipient, amt, client, wp);
    if (!first) return accepted;
    accepted.push_back(std::move(*first));

    using Sig = std::vector<std::pair<int, bool>>;
    auto signature = [](const Path& p) {
        Sig s;
        s.reserve(p.hops.size());
        for (EdgeRef e : p.hops) s.emplace_back(e.channel, e.rev);
        return s;
    };
    std::set<Sig> seen;
    seen.insert(signature(accepted[0]));
    std::vector<Path> pool;

    while (static_cast<int>(accepted.size()) < k) {
        const Path prev = accepted.back();
        std::vector<int> prev_nodes = prev.node_sequence(g);
        for (int i = 0; i < static_cast<int>(prev.hops.size()); ++i) {
            int spur = prev_nodes[i];
            std::vector<char> banned_node(g.node_count(), 0);
            for (int j = 0; j < i; ++j) banned_node[prev_nodes[j]] = 1;
            std::vector<std::pair<int, bool>> banned_first;
            for (const Path& p : accepted) {
                if (static_cast<int>(p.hops.size()) <= i) continue;
                bool same_root = true;
                for (int j = 0; j < i && same_root; ++j)
                    same_root = p.hops[j].channel == prev.hops[j].channel &&
                                p.hops[j].rev == prev.hops[j].rev;
                if (same_root) banned_first.emplace_back(p.hops[i].channel, p.hops[i].rev);
            }
            SearchContext ctx(g);
            SearchRequest rq;
            rq.sender = spur;
            rq.recipient = recipient;
            rq.amount = amt;
            rq.client = client;
            rq.wp = wp;
            rq.max_edges = kMaxPathNodes - 1 - i;
            rq.banned_node = &banned_node;
            rq.banned_first = &banned_first;
            // the root re-prices under each spur's amount, so keep the whole
            // frontier and let make_path judge the composed path
            auto frontier = run_search(ctx, rq);
            for (int lid : frontier) {
                std::vector<EdgeRef> hops(prev.hops.begin(), prev.hops.begin() + i);
                auto suffix = chain_hops(ctx, lid);
                hops.insert(hops.end(), suffix.begin(), suffix.end());
                auto cand = make_path(g, client, wp, sender, recipient, amt, hops);
                if (!cand) continue;
                Sig sig = signature(*cand);
                if (seen.count(sig)) continue;
                seen.insert(std::move(sig));
                pool.push_back(std::move(*cand));
            }
        }
        if (pool.empty()) break;
        size_t bi = 0;
        for (size_t j = 1; j < pool.size(); ++j)
            if (path_order_less(g, pool[j], pool[bi])) bi = j;
        accepted.push_back(std::move(pool[bi]));
        pool.erase(pool.begin() + static_cast<long>(bi));
    }
    return accepted;
}

std::optional<std::vector<EdgeRef>> widest_capacity_path(const NetworkGraph& g, int sender,
                                                         int recipient) {
    if (sender < 0 || recipient < 0 || sender >= g.node_count() || recipient >= g.node_count() ||
        sender == recipient)
        return std::nullopt;
    std::vector<Msat> best(g.node_count(), 0);
    std::vector<EdgeRef> via(g.node_count());
    std::priority_queue<std::pair<Msat, int>> heap;
    best[sender] = std::numeric_limits<Msat>::max();
    heap.push({best[sender], sender});
    while (!heap.empty()) {
        auto [b, u] = heap.top();
        heap.pop();
        if (b < best[u]) continue;
        if (u == recipient) break;
        for (EdgeRef e : g.out_of(u)) {
            const Channel& c = g.channels[e.channel];
            if (private_blocked(c, sender, recipient)) continue;
            Msat nb = std::min(b, c.capacity_msat);
            int v = g.head(e);
            if (nb > best[v]) {
                best[v] = nb;
                via[v] = e;
                heap.push({nb, v});
            }
        }
    }
    if (best[recipient] == 0) return std::nullopt;
    std::vector<EdgeRef> hops;
    for (int at = recipient; at != sender; at = g.tail(via[at])) hops.push_back(via[at]);
    std::reverse(hops.begin(), hops.end());
    return hops;
}

Msat widest_capacity_bottleneck(const NetworkGraph& g, int sender, int recipient) {
    auto hops = widest_capacity_path(g, sender, recipient);
    if (!hops) return 0;
    Msat b = std::numeric_limits<Msat>::max();
    for (EdgeRef e : *hops) b = std::min(b, g.channels[e.channel].capacity_msat);
    return b;
}

} // namespace lnsim
