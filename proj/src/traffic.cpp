#include "lnsim/traffic.hpp"

#include <algorithm>
#include <fstream>
#include <limits>

namespace lnsim {

EndpointsMode endpoints_from_name(const std::string& name) {
    if (name == "uniform") return EndpointsMode::Uniform;
    if (name == "weighted") return EndpointsMode::Weighted;
    throw ConfigError("unknown endpoints mode: " + name);
}

ValuesMode ValuesMode::parse(const std::string& text) {
    ValuesMode m;
    if (text == "cheap") {
        m.kind = Cheap;
    } else if (text == "expensive") {
        m.kind = Expensive;
    } else if (text.rfind("fixed", 0) == 0) {
        m.kind = Fixed;
        auto open = text.find('(');
        auto close = text.find(')');
        if (open == std::string::npos || close == std::string::npos || close < open)
            throw ConfigError("bad values mode: " + text);
        auto parts = split(text.substr(open + 1, close - open - 1), ',');
        if (parts.size() != 2) throw ConfigError("bad values mode: " + text);
        m.mean_sat = std::stoll(parts[0]);
        m.jitter_sat = std::stoll(parts[1]);
        if (m.mean_sat < 1 || m.jitter_sat < 0 || m.jitter_sat > m.mean_sat)
            throw ConfigError("bad fixed value range: " + text);
    } else {
        throw ConfigError("unknown values mode: " + text);
    }
    return m;
}

namespace {

struct EndpointSampler {
    int n = 0;
    std::vector<int64_t> cum; // empty for uniform

    EndpointSampler(const NetworkGraph& g, EndpointsMode mode) : n(g.node_count()) {
        if (n < 2) throw ConfigError("endpoint sampling needs at least two nodes");
        if (mode == EndpointsMode::Weighted) {
            cum.resize(n);
            int64_t run = 0;
            int carriers = 0;
            for (int i = 0; i < n; ++i) {
                if (!g.out_of(i).empty()) ++carriers;
                run += static_cast<int64_t>(g.out_of(i).size());
                cum[i] = run;
            }
            if (carriers < 2) throw ConfigError("weighted endpoints need two connected nodes");
        }
    }

    int draw(Rng& rng) const {
        if (cum.empty()) return static_cast<int>(rng.below(n));
        int64_t x = rng.range(1, cum.back());
        return static_cast<int>(std::lower_bound(cum.begin(), cum.end(), x) - cum.begin());
    }

    std::pair<int, int> pair(Rng& rng) const {
        int s = draw(rng);
        int r;
        do {
            r = draw(rng);
        } while (r == s);
        return {s, r};
    }
};

} // namespace

std::pair<int, int> sample_endpoints(const NetworkGraph& g, EndpointsMode mode, Rng& rng) {
    return EndpointSampler(g, mode).pair(rng);
}

Msat payment_value(const NetworkGraph& g, int sender, int recipient, const ValuesMode& mode,
                   Msat cheap_floor_msat, Rng& rng) {
    switch (mode.kind) {
    case ValuesMode::Cheap:
        return cheap_floor_msat;
    case ValuesMode::Fixed: {
        Sat lo = std::max<Sat>(1, mode.mean_sat - mode.jitter_sat);
        return rng.range(lo, mode.mean_sat + mode.jitter_sat) * kMsatPerSat;
    }
    case ValuesMode::Expensive: {
        auto hops = widest_capacity_path(g, sender, recipient);
        if (!hops) return 0;
        Msat hi = std::numeric_limits<Msat>::max();
        for (EdgeRef e : *hops) hi = std::min(hi, g.balance(e));
        if (hi < 1) return 0;
        // largest amount the route's balances can deliver once fees pile on.
        // the payer still routes by fee, so paying this much usually strands
        // the payment on some thinner channel along the cheap route
        auto fits = [&](Msat amt) {
            auto p = make_path(g, Client::Lnd, {}, sender, recipient, amt, *hops);
            if (!p) return false;
            for (size_t i = 0; i < p->hops.size(); ++i)
                if (p->per_hop_amount[i] > g.balance(p->hops[i])) return false;
            return true;
        };
        if (!fits(1)) return 0;
        Msat lo = 1;
        while (lo < hi) {
            Msat mid = lo + (hi - lo + 1) / 2;
            if (fits(mid))
                lo = mid;
            else
                hi = mid - 1;
        }
        return lo;
    }
    }
    return 0;
}

PaymentEvent execute_payment(NetworkGraph& g, int sender, int recipient, Msat amount, int retries,
                             const WeightParams& wp, int64_t start_ms) {
    if (amount <= 0) throw std::invalid_argument("execute_payment: amount must be positive");
    if (retries < 1) throw std::invalid_argument("execute_payment: retries must be >= 1");
    PaymentEvent ev;
    ev.sender = sender;
    ev.recipient = recipient;
    ev.amount_msat = amount;
    ev.start_ms = start_ms;
    ev.end_ms = start_ms;

    Client client = g.node_attrs[sender].client.value_or(Client::Lnd);
    std::vector<Path> routes;
    if (auto first = find_path(g, sender, recipient, amount, client, wp))
        routes.push_back(std::move(*first));
    if (!routes.empty() && retries > 1) {
        auto ks = k_shortest_paths(g, sender, recipient, amount, retries, client, wp);
        for (size_t i = 1; i < ks.size(); ++i) routes.push_back(std::move(ks[i]));
    }

    for (Path& p : routes) {
        // the sender sees its own balance, so hopeless first hops are skipped for free
        if (g.balance(p.hops[0]) < p.per_hop_amount[0]) continue;
        int fail_at = 0;
        for (size_t i = 1; i < p.hops.size(); ++i) {
            if (g.balance(p.hops[i]) < p.per_hop_amount[i]) {
                fail_at = static_cast<int>(i) + 1;
                break;
            }
        }
        int traversed = fail_at == 0 ? static_cast<int>(p.hops.size()) : fail_at - 1;
        for (int i = 0; i < traversed; ++i)
            ev.end_ms += 2 * g.latency_ms(g.tail(p.hops[i]), g.head(p.hops[i]));
        if (fail_at == 0) {
            for (size_t i = 0; i < p.hops.size(); ++i)
                g.set_balance(p.hops[i], g.balance(p.hops[i]) - p.per_hop_amount[i]);
            ev.outcome = Outcome::Success;
            ev.failed_hop_index = 0;
            ev.attempts.push_back({std::move(p), 0});
            return ev;
        }
        ev.failed_hop_index = fail_at;
        ev.attempts.push_back({std::move(p), fail_at});
    }
    ev.outcome = Outcome::Fail;
    if (ev.attempts.empty()) ev.failed_hop_index = 0;
    return ev;
}

EventLog run_simulation(NetworkGraph& g, const SimConfig& cfg) {
    if (cfg.t_pay < 1) throw ConfigError("t_pay must be >= 1");
    if (cfg.duration_days < 0) throw ConfigError("duration must be >= 0");
    if (cfg.retries < 1) throw ConfigError("retries must be >= 1");
    EventLog log;
    log.duration_days = cfg.duration_days;
    int64_t n = cfg.t_pay * cfg.duration_days;
    if (n == 0) return log;

    Rng rng(cfg.seed);
    int64_t horizon = static_cast<int64_t>(cfg.duration_days) * 86'400'000;
    std::vector<int64_t> times(n);
    for (auto& t : times) t = rng.range(0, horizon - 1);
    std::sort(times.begin(), times.end());

    EndpointSampler sampler(g, cfg.endpoints);
    log.events.reserve(n);
    for (int64_t i = 0; i < n; ++i) {
        auto [s, r] = sampler.pair(rng);
        Msat amt = payment_value(g, s, r, cfg.values, cfg.cheap_floor_msat, rng);
        PaymentEvent ev;
        if (amt <= 0) {
            ev.sender = s;
            ev.recipient = r;
            ev.start_ms = ev.end_ms = times[i];
        } else {
            ev = execute_payment(g, s, r, amt, cfg.retries, cfg.weights, times[i]);
        }
        ev.id = i;
        log.events.push_back(std::move(ev));
    }
    return log;
}

std::map<int, double> path_length_distribution(const EventLog& log, LengthFilter filter) {
    std::map<int, int64_t> counts;
    int64_t total = 0;
    for (const PaymentEvent& ev : log.events) {
        if (filter == LengthFilter::Success) {
            if (ev.outcome != Outcome::Success) continue;
        } else {
            if (ev.outcome != Outcome::Fail || ev.failed_hop_index < 3) continue;
        }
        const Path* p = ev.final_path();
        if (!p) continue;
        counts[static_cast<int>(p->hops.size()) + 1]++;
        ++total;
    }
    if (total == 0) throw std::runtime_error("path_length_distribution: nothing after filtering");
    std::map<int, double> out;
    for (auto [len, c] : counts)
        out[len] = static_cast<double>(c) / static_cast<double>(total);
    return out;
}

std::vector<ThroughputBucket> throughput_report(const EventLog& log, const NetworkGraph& g) {
    if (log.duration_days < 1) throw ConfigError("throughput_report: log covers no full day");
    std::vector<int64_t> forwards(g.node_count(), 0);
    for (const PaymentEvent& ev : log.events) {
        if (ev.outcome != Outcome::Success) continue;
        auto seq = ev.final_path()->node_sequence(g);
        for (size_t i = 1; i + 1 < seq.size(); ++i) forwards[seq[i]]++;
    }
    std::vector<ThroughputBucket> buckets = {
        {1, 150, 0, 0.0}, {151, 300, 0, 0.0}, {301, 500, 0, 0.0}, {501, 0, 0, 0.0}};
    std::vector<double> sums(buckets.size(), 0.0);
    for (int v = 0; v < g.node_count(); ++v) {
        int ch = static_cast<int>(g.out_of(v).size());
        if (ch == 0) continue;
        for (size_t b = 0; b < buckets.size(); ++b) {
            if (ch < buckets[b].min_channels) continue;
            if (buckets[b].max_channels && ch > buckets[b].max_channels) continue;
            buckets[b].node_count++;
            sums[b] += static_cast<double>(forwards[v]) / log.duration_days;
            break;
        }
    }
    for (size_t b = 0; b < buckets.size(); ++b)
        if (buckets[b].node_count)
            buckets[b].mean_forwards_per_day = sums[b] / buckets[b].node_count;
    return buckets;
}

void write_event_log_csv(const EventLog& log, const NetworkGraph& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write event log: " + path);
    out << "payment,attempt,sender,recipient,amount_msat,path,outcome,failed_index,start_ms,end_ms\n";
    for (const PaymentEvent& ev : log.events) {
        if (ev.attempts.empty()) {
            out << ev.id << ",0," << g.node_ids[ev.sender] << ',' << g.node_ids[ev.recipient] << ','
                << ev.amount_msat << ",,fail,0," << ev.start_ms << ',' << ev.end_ms << "\n";
            continue;
        }
        for (size_t a = 0; a < ev.attempts.size(); ++a) {
            const AttemptRecord& at = ev.attempts[a];
            std::vector<std::string> names;
            for (int node : at.path.node_sequence(g)) names.push_back(g.node_ids[node]);
            bool ok = at.failed_hop == 0;
            out << ev.id << ',' << a + 1 << ',' << g.node_ids[ev.sender] << ','
                << g.node_ids[ev.recipient] << ',' << ev.amount_msat << ',' << join(names, ';')
                << ',' << (ok ? "success" : "fail") << ',' << at.failed_hop << ',' << ev.start_ms
                << ',' << ev.end_ms << "\n";
        }
    }
}

} // namespace lnsim
