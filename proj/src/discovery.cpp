#include "lnsim/discovery.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <thread>

namespace lnsim {

DiffGraph diff_snapshots(const BalanceSnapshot& s1, const BalanceSnapshot& s2,
                         const NetworkGraph& g) {
    if (s1.time_ms >= s2.time_ms) throw ConfigError("diff_snapshots: snapshots out of order");
    if (s1.entries.size() != g.channels.size() || s2.entries.size() != g.channels.size())
        throw ConfigError("diff_snapshots: snapshot does not match the graph");
    DiffGraph d;
    d.t1_ms = s1.time_ms;
    d.t2_ms = s2.time_ms;
    for (size_t i = 0; i < g.channels.size(); ++i) {
        const SnapshotEntry& a = s1.entries[i];
        const SnapshotEntry& b = s2.entries[i];
        int ch = static_cast<int>(i);
        if (a.state == ChannelKnowledge::Known && b.state == ChannelKnowledge::Known) {
            Sat delta = b.ab_sat - a.ab_sat;
            if (delta != 0) d.deltas[ch] = delta;
        } else if (a.state == ChannelKnowledge::Failed || b.state == ChannelKnowledge::Failed) {
            d.failed_channels.push_back(ch);
        } else {
            d.uncovered_channels.push_back(ch);
        }
    }
    return d;
}

namespace {

struct FlowEdge {
    int channel;
    int from;
    int to;
    Sat flow;
};

Sat fee_sat(const FeePolicy& p, Sat amt_sat) {
    return hop_fee(p, amt_sat * kMsatPerSat) / kMsatPerSat;
}

const FeePolicy& flow_policy(const NetworkGraph& g, const FlowEdge& e) {
    const Channel& c = g.channels[e.channel];
    return e.from == c.node_a ? c.policy_ab : c.policy_ba;
}

} // namespace

std::vector<InferredPayment> decompose_payments(const DiffGraph& diff, const NetworkGraph& g,
                                                const DecomposeOptions& opt) {
    if (opt.fee_slack_sat < 0 || opt.pair_filter_threshold_sat < 0)
        throw ConfigError("decompose_payments: negative option");

    // a negative ab delta is money that moved a -> b, and vice versa
    std::vector<FlowEdge> edges;
    for (auto [ch, delta] : diff.deltas) {
        if (delta == 0) continue;
        const Channel& c = g.channels[ch];
        if (delta < 0)
            edges.push_back({ch, c.node_a, c.node_b, -delta});
        else
            edges.push_back({ch, c.node_b, c.node_a, delta});
    }
    // biggest flow first: large amounts are the least fee-ambiguous anchors.
    // cid breaks ties so reruns decompose identically
    std::sort(edges.begin(), edges.end(), [&](const FlowEdge& a, const FlowEdge& b) {
        if (a.flow != b.flow) return a.flow > b.flow;
        return g.channels[a.channel].cid < g.channels[b.channel].cid;
    });

    std::vector<char> used(edges.size(), 0);
    std::vector<InferredPayment> out;
    for (size_t start = 0; start < edges.size(); ++start) {
        if (used[start]) continue;
        used[start] = 1;
        std::vector<size_t> chain = {start};
        std::vector<int> nodes = {edges[start].from, edges[start].to};
        auto in_path = [&](int v) { return std::find(nodes.begin(), nodes.end(), v) != nodes.end(); };

        const size_t max_hops = kMaxPathNodes - 1;
        bool grew = true;
        while (grew && chain.size() < max_hops) {
            grew = false;
            const FlowEdge& tail = edges[chain.back()];
            for (size_t j = 0; j < edges.size() && !grew; ++j) {
                if (used[j] || edges[j].from != tail.to || in_path(edges[j].to)) continue;
                Sat expect = edges[j].flow + fee_sat(flow_policy(g, edges[j]), edges[j].flow);
                if (std::abs(tail.flow - expect) > opt.fee_slack_sat) continue;
                used[j] = 1;
                chain.push_back(j);
                nodes.push_back(edges[j].to);
                grew = true;
            }
            if (grew || chain.size() >= max_hops) continue;
            const FlowEdge& head = edges[chain.front()];
            Sat expect = head.flow + fee_sat(flow_policy(g, head), head.flow);
            for (size_t j = 0; j < edges.size() && !grew; ++j) {
                if (used[j] || edges[j].to != head.from || in_path(edges[j].from)) continue;
                if (std::abs(edges[j].flow - expect) > opt.fee_slack_sat) continue;
                used[j] = 1;
                chain.insert(chain.begin(), j);
                nodes.insert(nodes.begin(), edges[j].from);
                grew = true;
            }
        }

        InferredPayment p;
        p.sender = edges[chain.front()].from;
        p.recipient = edges[chain.back()].to;
        p.amount_sat = edges[chain.back()].flow;
        p.path.push_back(edges[chain.front()].from);
        for (size_t idx : chain) p.path.push_back(edges[idx].to);
        out.push_back(std::move(p));
    }

    // a payment ending beside a blind probe is probably a fragment of a
    // longer path that continues where the attacker cannot see
    if (opt.failed_gap_endpoint_filter && !diff.failed_channels.empty() && !out.empty()) {
        std::vector<char> suspect(g.node_count(), 0);
        for (int ch : diff.failed_channels) {
            suspect[g.channels[ch].node_a] = 1;
            suspect[g.channels[ch].node_b] = 1;
        }
        out.erase(std::remove_if(out.begin(), out.end(),
                                 [&](const InferredPayment& p) {
                                     return suspect[p.sender] || suspect[p.recipient];
                                 }),
                  out.end());
    }

    // lookalike amounts cannot be told apart reliably, drop the whole pair
    if (out.size() > 1) {
        std::vector<char> drop(out.size(), 0);
        for (size_t i = 0; i < out.size(); ++i)
            for (size_t j = i + 1; j < out.size(); ++j)
                if (std::abs(out[i].amount_sat - out[j].amount_sat) <=
                    opt.pair_filter_threshold_sat)
                    drop[i] = drop[j] = 1;
        std::vector<InferredPayment> kept;
        for (size_t i = 0; i < out.size(); ++i)
            if (!drop[i]) kept.push_back(std::move(out[i]));
        out = std::move(kept);
    }
    return out;
}

Evaluation evaluate(const std::vector<InferredPayment>& inferred,
                    const std::vector<TruePayment>& truth, Sat amount_tolerance_sat) {
    if (amount_tolerance_sat < 0) throw ConfigError("evaluate: negative tolerance");
    Evaluation ev;
    ev.detected = static_cast<int64_t>(inferred.size());
    ev.actual = static_cast<int64_t>(truth.size());
    std::vector<char> taken(truth.size(), 0);
    for (const InferredPayment& p : inferred) {
        for (size_t t = 0; t < truth.size(); ++t) {
            if (taken[t] || truth[t].sender != p.sender || truth[t].recipient != p.recipient)
                continue;
            if (std::abs(truth[t].amount_sat - p.amount_sat) > amount_tolerance_sat) continue;
            taken[t] = 1;
            ev.correct++;
            break;
        }
    }
    if (ev.detected > 0)
        ev.precision = static_cast<double>(ev.correct) / static_cast<double>(ev.detected);
    ev.recall = ev.actual > 0 ? static_cast<double>(ev.correct) / static_cast<double>(ev.actual)
                              : 1.0;
    return ev;
}

bool channel_sick(uint64_t noise_seed, int channel, double prob) {
    if (prob <= 0.0) return false;
    if (prob >= 1.0) return true;
    uint64_t h =
        splitmix64(noise_seed ^ splitmix64(static_cast<uint64_t>(channel) + 0x6a09e667ULL));
    return static_cast<double>(h >> 11) * 0x1.0p-53 < prob;
}

IntervalAttackResult run_interval_attack(const NetworkGraph& initial, const EventLog& log,
                                         const IntervalAttackParams& p) {
    if (p.tau_ms < 1) throw ConfigError("run_interval_attack: tau must be positive");
    if (p.channel_failure_prob < 0.0 || p.channel_failure_prob > 1.0)
        throw ConfigError("run_interval_attack: failure probability out of [0,1]");

    std::vector<char> reached(initial.node_count(), p.attacker_connected.empty() ? 1 : 0);
    for (int node : p.attacker_connected) {
        if (node < 0 || node >= initial.node_count())
            throw ConfigError("run_interval_attack: attacker node out of range");
        reached[node] = 1;
    }

    // visibility is fixed for the whole run: probe failures model nodes that
    // are down, and those stay down on the scale of one observation session
    int nch = static_cast<int>(initial.channels.size());
    std::vector<char> visible(nch, 0);
    std::vector<int> failed, uncovered;
    for (int i = 0; i < nch; ++i) {
        const Channel& c = initial.channels[i];
        bool at_a = reached[c.node_a], at_b = reached[c.node_b];
        bool probeable = p.coverage == Coverage::Generic ? (at_a && at_b) : (at_a || at_b);
        if (!c.is_public || !probeable) {
            uncovered.push_back(i);
            continue;
        }
        if (channel_sick(p.noise_seed, i, p.channel_failure_prob)) {
            failed.push_back(i);
            continue;
        }
        visible[i] = 1;
    }

    std::vector<Msat> bal(nch);
    for (int i = 0; i < nch; ++i) bal[i] = initial.channels[i].balance_ab_msat;

    std::vector<const PaymentEvent*> settled;
    for (const PaymentEvent& ev : log.events)
        if (ev.outcome == Outcome::Success) settled.push_back(&ev);
    std::stable_sort(settled.begin(), settled.end(),
                     [](const PaymentEvent* a, const PaymentEvent* b) {
                         return a->end_ms < b->end_ms;
                     });

    IntervalAttackResult res;
    size_t i = 0;
    std::map<int, Sat> pre; // first-touch floor balances within the interval
    std::vector<TruePayment> truth;
    while (i < settled.size()) {
        int64_t k = settled[i]->end_ms / p.tau_ms;
        pre.clear();
        truth.clear();
        for (; i < settled.size() && settled[i]->end_ms / p.tau_ms == k; ++i) {
            const PaymentEvent& ev = *settled[i];
            const Path* path = ev.final_path();
            for (size_t h = 0; h < path->hops.size(); ++h) {
                EdgeRef e = path->hops[h];
                pre.emplace(e.channel, bal[e.channel] / kMsatPerSat);
                bal[e.channel] += e.rev ? path->per_hop_amount[h] : -path->per_hop_amount[h];
            }
            truth.push_back({ev.sender, ev.recipient, ev.amount_msat / kMsatPerSat});
        }

        DiffGraph diff;
        diff.t1_ms = k * p.tau_ms;
        diff.t2_ms = (k + 1) * p.tau_ms;
        for (auto [ch, before] : pre) {
            if (!visible[ch]) continue;
            Sat delta = bal[ch] / kMsatPerSat - before;
            if (delta != 0) diff.deltas[ch] = delta;
        }
        diff.failed_channels = failed;
        diff.uncovered_channels = uncovered;

        auto found = decompose_payments(diff, initial, p.decompose);
        auto score = evaluate(found, truth);
        res.intervals++;
        res.actual += score.actual;
        res.detected += score.detected;
        res.correct += score.correct;
    }

    if (res.detected > 0)
        res.precision = static_cast<double>(res.correct) / static_cast<double>(res.detected);
    res.recall = res.actual > 0
                     ? static_cast<double>(res.correct) / static_cast<double>(res.actual)
                     : 1.0;
    return res;
}

namespace {

void run_workers(int runs, int threads, const std::function<void(int)>& work) {
    if (threads <= 0) threads = runs;
    int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    threads = std::min({threads, runs, hw});
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (int r = next++; r < runs; r = next++) work(r);
        });
    for (auto& th : pool) th.join();
}

} // namespace

std::vector<SweepPoint> tau_sweep(const NetworkGraph& initial, const SweepParams& p) {
    if (p.runs < 1) throw ConfigError("tau_sweep: needs at least one run");
    if (p.tau_ms.empty()) throw ConfigError("tau_sweep: no tau values");

    size_t nt = p.tau_ms.size();
    std::vector<std::vector<double>> recall(nt, std::vector<double>(p.runs, 0.0));
    std::vector<std::vector<std::optional<double>>> prec(
        nt, std::vector<std::optional<double>>(p.runs));

    run_workers(p.runs, p.threads, [&](int r) {
        SimConfig cfg = p.sim;
        cfg.seed = derive_seed(p.base_seed, static_cast<uint64_t>(r));
        NetworkGraph g = initial;
        EventLog log = run_simulation(g, cfg);
        for (size_t ti = 0; ti < nt; ++ti) {
            IntervalAttackParams ip;
            ip.tau_ms = p.tau_ms[ti];
            ip.channel_failure_prob = p.channel_failure_prob;
            ip.coverage = p.coverage;
            ip.attacker_connected = p.attacker_connected;
            // one sick set per run, shared across the whole grid
            ip.noise_seed = derive_seed(p.base_seed, 5000 + static_cast<uint64_t>(r));
            ip.decompose = p.decompose;
            auto res = run_interval_attack(initial, log, ip);
            recall[ti][r] = res.recall;
            prec[ti][r] = res.precision;
        }
    });

    std::vector<SweepPoint> out;
    for (size_t ti = 0; ti < nt; ++ti) {
        SweepPoint pt;
        pt.tau_ms = p.tau_ms[ti];
        pt.recall = mean_ci95(recall[ti]);
        std::vector<double> defined;
        for (const auto& v : prec[ti])
            if (v) defined.push_back(*v);
        pt.precision = mean_ci95(defined);
        out.push_back(pt);
    }
    return out;
}

std::vector<BudgetPoint> recall_vs_budget(const NetworkGraph& initial, const BudgetParams& p) {
    if (p.runs < 1) throw ConfigError("recall_vs_budget: needs at least one run");
    if (p.budgets.empty()) throw ConfigError("recall_vs_budget: no budgets");
    for (size_t i = 0; i < p.budgets.size(); ++i) {
        if (p.budgets[i] < 1) throw ConfigError("recall_vs_budget: budgets must be positive");
        if (i && p.budgets[i] < p.budgets[i - 1])
            throw ConfigError("recall_vs_budget: budgets must be nondecreasing");
    }

    std::vector<std::vector<int>> attackers;
    for (int n : p.budgets) attackers.push_back(top_n_by_channel_count(initial, n));

    std::vector<std::vector<double>> recall(p.budgets.size(), std::vector<double>(p.runs, 0.0));
    run_workers(p.runs, p.threads, [&](int r) {
        SimConfig cfg = p.sim;
        cfg.seed = derive_seed(p.base_seed, static_cast<uint64_t>(r));
        NetworkGraph g = initial;
        EventLog log = run_simulation(g, cfg);
        for (size_t bi = 0; bi < p.budgets.size(); ++bi) {
            IntervalAttackParams ip;
            ip.tau_ms = p.tau_ms;
            ip.channel_failure_prob = p.channel_failure_prob;
            ip.coverage = p.coverage;
            ip.attacker_connected = attackers[bi];
            ip.noise_seed = derive_seed(p.base_seed, 5000 + static_cast<uint64_t>(r));
            ip.decompose = p.decompose;
            recall[bi][r] = run_interval_attack(initial, log, ip).recall;
        }
    });

    std::vector<BudgetPoint> out;
    for (size_t bi = 0; bi < p.budgets.size(); ++bi)
        out.push_back({p.budgets[bi], mean_ci95(recall[bi])});
    return out;
}

void write_inferred_csv(const std::vector<InferredPayment>& payments, const NetworkGraph& g,
                        int64_t interval_start_ms, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write inferred csv: " + path);
    out << "interval_start_ms,sender,recipient,amount_sat,path\n";
    for (const InferredPayment& p : payments) {
        std::vector<std::string> names;
        for (int v : p.path) names.push_back(g.node_ids[v]);
        out << interval_start_ms << ',' << g.node_ids[p.sender] << ',' << g.node_ids[p.recipient]
            << ',' << p.amount_sat << ',' << join(names, ';') << "\n";
    }
}

void write_tau_sweep_csv(const std::vector<SweepPoint>& points, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write sweep csv: " + path);
    out << "tau_s,precision,recall,ci_low,ci_high\n";
    char buf[160];
    for (const SweepPoint& pt : points) {
        std::snprintf(buf, sizeof buf, "%g,%.6f,%.6f,%.6f,%.6f",
                      static_cast<double>(pt.tau_ms) / 1000.0, pt.precision.mean, pt.recall.mean,
                      pt.recall.ci_low, pt.recall.ci_high);
        out << buf << "\n";
    }
}

void write_budget_csv(const std::vector<BudgetPoint>& generic,
                      const std::vector<BudgetPoint>& oracle_aided, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write budget csv: " + path);
    out << "n,coverage,recall,ci_low,ci_high\n";
    char buf[160];
    auto dump = [&](const std::vector<BudgetPoint>& pts, const char* label) {
        for (const BudgetPoint& pt : pts) {
            std::snprintf(buf, sizeof buf, "%d,%s,%.6f,%.6f,%.6f", pt.n, label, pt.recall.mean,
                          pt.recall.ci_low, pt.recall.ci_high);
            out << buf << "\n";
        }
    };
    dump(generic, "generic");
    dump(oracle_aided, "oracle_aided");
    out.flush();
}

} // namespace lnsim
