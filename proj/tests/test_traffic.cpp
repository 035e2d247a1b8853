#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "lnsim/traffic.hpp"
#include "oracles.hpp"

using namespace lnsim;

namespace {

FeePolicy flat(Msat base, int64_t ppm) {
    FeePolicy p;
    p.base_fee_msat = base;
    p.fee_rate_ppm = ppm;
    return p;
}

// channel with both directions priced the same and a chosen a->b balance
int mk(NetworkGraph& g, const std::string& cid, const std::string& a, const std::string& b,
       Msat cap, Msat bal_ab, const FeePolicy& pol = {}) {
    int idx = g.add_channel(cid, a, b, cap, pol, pol);
    g.channels[idx].balance_ab_msat = bal_ab;
    g.channels[idx].balance_ba_msat = cap - bal_ab;
    return idx;
}

std::string temp_file(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

} // namespace

TEST_CASE("traffic config parsing") {
    CHECK(endpoints_from_name("uniform") == EndpointsMode::Uniform);
    CHECK(endpoints_from_name("weighted") == EndpointsMode::Weighted);
    CHECK_THROWS_AS(endpoints_from_name("popular"), ConfigError);

    CHECK(ValuesMode::parse("cheap").kind == ValuesMode::Cheap);
    CHECK(ValuesMode::parse("expensive").kind == ValuesMode::Expensive);
    auto f = ValuesMode::parse("fixed(500, 25)");
    CHECK(f.kind == ValuesMode::Fixed);
    CHECK(f.mean_sat == 500);
    CHECK(f.jitter_sat == 25);
    CHECK_THROWS_AS(ValuesMode::parse("fixed(500)"), ConfigError);
    CHECK_THROWS_AS(ValuesMode::parse("fixed(0,0)"), ConfigError);
    CHECK_THROWS_AS(ValuesMode::parse("fixed(5,6)"), ConfigError);
    CHECK_THROWS_AS(ValuesMode::parse("median"), ConfigError);
}

TEST_CASE("endpoint sampling") {
    Rng rng(11);

    SUBCASE("uniform picks distinct nodes, both orders") {
        NetworkGraph g;
        mk(g, "c1", "a", "b", 1'000'000, 500'000);
        g.rebuild_adjacency();
        std::set<std::pair<int, int>> seen;
        for (int i = 0; i < 200; ++i) {
            auto [s, r] = sample_endpoints(g, EndpointsMode::Uniform, rng);
            CHECK(s != r);
            seen.insert({s, r});
        }
        CHECK(seen.size() == 2);
    }

    SUBCASE("weighted sender marginal follows channel counts") {
        // hub with ten spokes carries half the endpoint slots
        NetworkGraph g;
        for (int i = 0; i < 10; ++i)
            mk(g, "s" + std::to_string(i), "hub", "leaf" + std::to_string(i), 1'000'000, 500'000);
        g.rebuild_adjacency();
        int hub = g.find_node("hub");
        int hits = 0;
        const int draws = 20000;
        for (int i = 0; i < draws; ++i) {
            auto [s, r] = sample_endpoints(g, EndpointsMode::Weighted, rng);
            CHECK(s != r);
            if (s == hub) ++hits;
        }
        CHECK(hits > draws * 0.47);
        CHECK(hits < draws * 0.53);
    }

    SUBCASE("weighted never picks channel-less nodes") {
        NetworkGraph g;
        mk(g, "c1", "a", "b", 1'000'000, 500'000);
        int loner = g.add_node("loner");
        g.rebuild_adjacency();
        for (int i = 0; i < 100; ++i) {
            auto [s, r] = sample_endpoints(g, EndpointsMode::Weighted, rng);
            CHECK(s != loner);
            CHECK(r != loner);
        }
    }

    SUBCASE("weighted needs two carriers") {
        NetworkGraph g;
        g.add_node("a");
        g.add_node("b");
        g.rebuild_adjacency();
        CHECK_THROWS_AS(sample_endpoints(g, EndpointsMode::Weighted, rng), ConfigError);
        CHECK_NOTHROW(sample_endpoints(g, EndpointsMode::Uniform, rng));
    }
}

TEST_CASE("payment values") {
    Rng rng(3);
    NetworkGraph g;
    mk(g, "ab", "a", "b", 50'000'000, 25'000'000);
    mk(g, "bc", "b", "c", 100'000'000, 50'000'000, flat(1000, 1000));
    g.rebuild_adjacency();
    int a = g.find_node("a"), c = g.find_node("c");

    SUBCASE("cheap is the configured floor") {
        ValuesMode m;
        m.kind = ValuesMode::Cheap;
        CHECK(payment_value(g, a, c, m, 1000, rng) == 1000);
        CHECK(payment_value(g, a, c, m, 2500, rng) == 2500);
    }

    SUBCASE("fixed draws sat-granular values around the mean") {
        auto m = ValuesMode::parse("fixed(1000,10)");
        Msat lo = std::numeric_limits<Msat>::max(), hi = 0;
        for (int i = 0; i < 500; ++i) {
            Msat v = payment_value(g, a, c, m, 1000, rng);
            CHECK(v % kMsatPerSat == 0);
            CHECK(v >= 990 * kMsatPerSat);
            CHECK(v <= 1010 * kMsatPerSat);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        CHECK(lo < hi);
    }

    SUBCASE("expensive maxes out what the widest route's balances deliver") {
        ValuesMode m;
        m.kind = ValuesMode::Expensive;
        // the first hop's 25M balance binds, and fees for the second hop eat
        // into the deliverable value
        Msat v = payment_value(g, a, c, m, 1000, rng);
        CHECK(v > 0);
        CHECK(v < 25'000'000);
        Msat fee = hop_fee(flat(1000, 1000), v);
        CHECK(v + fee <= 25'000'000);
        CHECK(v + 1 + hop_fee(flat(1000, 1000), v + 1) > 25'000'000);

        // balance bottleneck on the last hop leaves nothing to subtract
        NetworkGraph h;
        mk(h, "ab", "a", "b", 100'000'000, 50'000'000);
        mk(h, "bc", "b", "c", 50'000'000, 25'000'000, flat(1000, 1000));
        h.rebuild_adjacency();
        CHECK(payment_value(h, h.find_node("a"), h.find_node("c"), m, 1000, rng) == 25'000'000);

        // a payment sized this way goes through when sent along that route
        NetworkGraph x = h;
        auto ev = execute_payment(x, x.find_node("a"), x.find_node("c"), 25'000'000, 1, {});
        CHECK(ev.outcome == Outcome::Success);
    }

    SUBCASE("expensive yields zero when nothing is routable") {
        NetworkGraph h;
        mk(h, "ab", "a", "b", 1'000'000, 500'000);
        mk(h, "cd", "c", "d", 1'000'000, 500'000);
        h.rebuild_adjacency();
        ValuesMode m;
        m.kind = ValuesMode::Expensive;
        CHECK(payment_value(h, h.find_node("a"), h.find_node("c"), m, 1000, rng) == 0);

        // fees alone can exceed a tiny first hop
        NetworkGraph t;
        mk(t, "ab", "a", "b", 1000, 1000);
        mk(t, "bc", "b", "c", 1'000'000, 500'000, flat(5000, 0));
        t.rebuild_adjacency();
        CHECK(payment_value(t, t.find_node("a"), t.find_node("c"), m, 1000, rng) == 0);
    }
}

TEST_CASE("execute_payment moves balances atomically") {
    SUBCASE("single hop success commits both directions") {
        NetworkGraph g;
        int ch = mk(g, "ab", "a", "b", 10'000'000, 6'000'000);
        g.rebuild_adjacency();
        auto ev = execute_payment(g, g.find_node("a"), g.find_node("b"), 5'000'000, 1, {}, 100);
        CHECK(ev.outcome == Outcome::Success);
        CHECK(ev.failed_hop_index == 0);
        REQUIRE(ev.attempts.size() == 1);
        CHECK(ev.attempts[0].path.per_hop_amount == std::vector<Msat>{5'000'000});
        CHECK(g.channels[ch].balance_ab_msat == 1'000'000);
        CHECK(g.channels[ch].balance_ba_msat == 9'000'000);
        CHECK(ev.start_ms == 100);
        CHECK(ev.end_ms == 100 + 2 * 30); // one round trip at intra-region latency
    }

    SUBCASE("senders skip routes their own balance cannot fund") {
        NetworkGraph g;
        int ch = mk(g, "ab", "a", "b", 10'000'000, 2'000'000);
        g.rebuild_adjacency();
        auto ev = execute_payment(g, g.find_node("a"), g.find_node("b"), 5'000'000, 1, {});
        CHECK(ev.outcome == Outcome::Fail);
        CHECK(ev.attempts.empty());
        CHECK(ev.failed_hop_index == 0);
        CHECK(g.channels[ch].balance_ab_msat == 2'000'000);
    }

    SUBCASE("downstream shortfall reports the failing hop and rolls back") {
        NetworkGraph g;
        int ab = mk(g, "ab", "a", "b", 10'000'000, 10'000'000);
        int bc = mk(g, "bc", "b", "c", 10'000'000, 1000);
        g.rebuild_adjacency();
        auto ev = execute_payment(g, g.find_node("a"), g.find_node("c"), 5'000'000, 1, {}, 0);
        CHECK(ev.outcome == Outcome::Fail);
        CHECK(ev.failed_hop_index == 2);
        REQUIRE(ev.attempts.size() == 1);
        CHECK(ev.attempts[0].failed_hop == 2);
        CHECK(g.channels[ab].balance_ab_msat == 10'000'000);
        CHECK(g.channels[bc].balance_ab_msat == 1000);
        CHECK(ev.end_ms == 2 * 30); // paid for the one hop that did forward
    }

    SUBCASE("retries fall through to the next cheapest route") {
        NetworkGraph g;
        mk(g, "ab", "a", "b", 10'000'000, 10'000'000);
        mk(g, "bc", "b", "c", 10'000'000, 1000); // cheapest route, dead balance
        mk(g, "ad", "a", "d", 10'000'000, 10'000'000, flat(2000, 0));
        mk(g, "dc", "d", "c", 10'000'000, 10'000'000, flat(2000, 0));
        g.rebuild_adjacency();

        auto one = execute_payment(g, g.find_node("a"), g.find_node("c"), 5'000'000, 1, {});
        CHECK(one.outcome == Outcome::Fail);

        auto ev = execute_payment(g, g.find_node("a"), g.find_node("c"), 5'000'000, 2, {}, 0);
        CHECK(ev.outcome == Outcome::Success);
        CHECK(ev.failed_hop_index == 0);
        REQUIRE(ev.attempts.size() == 2);
        CHECK(ev.attempts[0].failed_hop == 2);
        CHECK(ev.attempts[1].failed_hop == 0);
        auto seq = ev.attempts[1].path.node_sequence(g);
        CHECK(seq == std::vector<int>{g.find_node("a"), g.find_node("d"), g.find_node("c")});
        CHECK(ev.end_ms == 2 * 30 + 2 * (30 + 30)); // failed probe plus the full detour
    }

    SUBCASE("rejects degenerate arguments") {
        NetworkGraph g;
        mk(g, "ab", "a", "b", 10'000'000, 5'000'000);
        g.rebuild_adjacency();
        CHECK_THROWS_AS(execute_payment(g, 0, 1, 0, 1, {}), std::invalid_argument);
        CHECK_THROWS_AS(execute_payment(g, 0, 1, 1000, 0, {}), std::invalid_argument);
    }
}

TEST_CASE("simulation log replays onto the starting balances") {
    for (uint64_t seed : {21u, 22u, 23u}) {
        Rng gen(seed);
        NetworkGraph g = oracle::random_graph(gen);
        assign_balances(g, BalanceMode::parse("uniform"), gen);
        g.rebuild_adjacency();
        NetworkGraph initial = g;

        SimConfig cfg;
        cfg.t_pay = 150;
        cfg.duration_days = 1;
        cfg.values = ValuesMode::parse("fixed(300,299)");
        cfg.retries = 2;
        cfg.seed = seed;
        EventLog log = run_simulation(g, cfg);
        CHECK(log.events.size() == 150);

        NetworkGraph replayed = oracle::replay_log(initial, log);
        for (size_t i = 0; i < g.channels.size(); ++i) {
            CHECK(replayed.channels[i].balance_ab_msat == g.channels[i].balance_ab_msat);
            CHECK(replayed.channels[i].balance_ba_msat == g.channels[i].balance_ba_msat);
            CHECK(g.channels[i].balance_ab_msat + g.channels[i].balance_ba_msat ==
                  g.channels[i].capacity_msat);
            CHECK(g.channels[i].balance_ab_msat >= 0);
        }
    }
}

TEST_CASE("simulation shape and determinism") {
    auto build = [] {
        NetworkGraph g;
        mk(g, "ab", "a", "b", 50'000'000, 25'000'000);
        mk(g, "bc", "b", "c", 50'000'000, 25'000'000);
        mk(g, "cd", "c", "d", 50'000'000, 25'000'000);
        mk(g, "da", "d", "a", 50'000'000, 25'000'000);
        g.rebuild_adjacency();
        return g;
    };

    SUBCASE("same seed, same log") {
        SimConfig cfg;
        cfg.t_pay = 80;
        cfg.duration_days = 1;
        cfg.values = ValuesMode::parse("fixed(40,39)");
        cfg.seed = 9;
        NetworkGraph g1 = build(), g2 = build();
        EventLog a = run_simulation(g1, cfg);
        EventLog b = run_simulation(g2, cfg);
        REQUIRE(a.events.size() == b.events.size());
        for (size_t i = 0; i < a.events.size(); ++i) {
            CHECK(a.events[i].sender == b.events[i].sender);
            CHECK(a.events[i].recipient == b.events[i].recipient);
            CHECK(a.events[i].amount_msat == b.events[i].amount_msat);
            CHECK(a.events[i].outcome == b.events[i].outcome);
            CHECK(a.events[i].failed_hop_index == b.events[i].failed_hop_index);
            CHECK(a.events[i].start_ms == b.events[i].start_ms);
            CHECK(a.events[i].end_ms == b.events[i].end_ms);
            CHECK(a.events[i].attempts.size() == b.events[i].attempts.size());
        }
    }

    SUBCASE("event count is rate times days with ordered timestamps") {
        SimConfig cfg;
        cfg.t_pay = 25;
        cfg.duration_days = 4;
        cfg.seed = 5;
        NetworkGraph g = build();
        EventLog log = run_simulation(g, cfg);
        CHECK(log.events.size() == 100);
        CHECK(log.duration_days == 4);
        int64_t prev = 0;
        for (size_t i = 0; i < log.events.size(); ++i) {
            CHECK(log.events[i].id == static_cast<int64_t>(i));
            CHECK(log.events[i].start_ms >= prev);
            prev = log.events[i].start_ms;
        }
        CHECK(prev < 4 * 86'400'000);
    }

    SUBCASE("zero days runs nothing") {
        SimConfig cfg;
        cfg.duration_days = 0;
        NetworkGraph g = build();
        CHECK(run_simulation(g, cfg).events.empty());
    }

    SUBCASE("config validation") {
        NetworkGraph g = build();
        SimConfig cfg;
        cfg.t_pay = 0;
        CHECK_THROWS_AS(run_simulation(g, cfg), ConfigError);
        cfg = {};
        cfg.duration_days = -1;
        CHECK_THROWS_AS(run_simulation(g, cfg), ConfigError);
        cfg = {};
        cfg.retries = 0;
        CHECK_THROWS_AS(run_simulation(g, cfg), ConfigError);
    }

    SUBCASE("unroutable pairs still produce log entries") {
        NetworkGraph g;
        mk(g, "ab", "a", "b", 1'000'000, 500'000);
        mk(g, "cd", "c", "d", 1'000'000, 500'000);
        g.rebuild_adjacency();
        SimConfig cfg;
        cfg.t_pay = 60;
        cfg.duration_days = 1;
        cfg.seed = 2;
        EventLog log = run_simulation(g, cfg);
        CHECK(log.events.size() == 60);
        int unroutable = 0;
        for (const auto& ev : log.events) {
            if (!ev.attempts.empty()) continue;
            CHECK(ev.outcome == Outcome::Fail);
            CHECK(ev.failed_hop_index == 0);
            CHECK(ev.end_ms == ev.start_ms);
            ++unroutable;
        }
        CHECK(unroutable > 0);
        CHECK(unroutable < 60);

        // expensive mode marks those pairs by a zero value instead
        cfg.values = ValuesMode::parse("expensive");
        NetworkGraph g2;
        mk(g2, "ab", "a", "b", 1'000'000, 500'000);
        mk(g2, "cd", "c", "d", 1'000'000, 500'000);
        g2.rebuild_adjacency();
        EventLog log2 = run_simulation(g2, cfg);
        CHECK(log2.events.size() == 60);
        bool skipped = false;
        for (const auto& ev : log2.events)
            if (ev.amount_msat == 0 && ev.outcome == Outcome::Fail) skipped = true;
        CHECK(skipped);
    }
}

TEST_CASE("path length distributions") {
    auto fake = [](int hops, Outcome out, int failed) {
        PaymentEvent ev;
        AttemptRecord at;
        at.path.hops.resize(hops, EdgeRef{0, false});
        at.failed_hop = failed;
        ev.attempts.push_back(at);
        ev.outcome = out;
        ev.failed_hop_index = failed;
        return ev;
    };

    SUBCASE("success filter keeps delivered lengths only") {
        EventLog log;
        log.events.push_back(fake(2, Outcome::Success, 0));
        log.events.push_back(fake(2, Outcome::Success, 0));
        log.events.push_back(fake(2, Outcome::Success, 0));
        log.events.push_back(fake(3, Outcome::Success, 0));
        log.events.push_back(fake(3, Outcome::Fail, 3));
        log.events.push_back(fake(3, Outcome::Fail, 2));
        log.events.push_back(PaymentEvent{}); // no route found
        auto succ = path_length_distribution(log, LengthFilter::Success);
        CHECK(succ.size() == 2);
        CHECK(succ[3] == doctest::Approx(0.75));
        CHECK(succ[4] == doctest::Approx(0.25));

        // only the f=3 failure was seen by a forwarding intermediary
        auto fail = path_length_distribution(log, LengthFilter::FailObservable);
        CHECK(fail.size() == 1);
        CHECK(fail[4] == doctest::Approx(1.0));
    }

    SUBCASE("empty after filtering is an error") {
        EventLog log;
        log.events.push_back(fake(2, Outcome::Fail, 2));
        CHECK_THROWS_AS(path_length_distribution(log, LengthFilter::Success), std::runtime_error);
        CHECK_THROWS_AS(path_length_distribution(log, LengthFilter::FailObservable),
                        std::runtime_error);
    }

    SUBCASE("star traffic is two or three nodes long") {
        NetworkGraph g;
        for (int i = 0; i < 4; ++i)
            mk(g, "s" + std::to_string(i), "hub", "leaf" + std::to_string(i), 50'000'000,
               25'000'000);
        g.rebuild_adjacency();
        SimConfig cfg;
        cfg.t_pay = 400;
        cfg.duration_days = 1;
        cfg.seed = 4;
        EventLog log = run_simulation(g, cfg);
        auto dist = path_length_distribution(log, LengthFilter::Success);
        double sum = 0.0;
        for (auto [len, p] : dist) {
            CHECK(len >= 2);
            CHECK(len <= 3);
            sum += p;
        }
        CHECK(sum == doctest::Approx(1.0));
        CHECK(dist[3] > 0.0);
    }
}

TEST_CASE("throughput buckets") {
    SUBCASE("forwarding rate lands in the hub's bucket") {
        NetworkGraph g;
        for (int i = 0; i < 160; ++i)
            mk(g, "s" + std::to_string(i), "leaf" + std::to_string(i), "hub", 10'000'000,
               5'000'000);
        g.add_node("loner");
        g.rebuild_adjacency();

        EventLog log;
        log.duration_days = 2;
        for (int i = 0; i < 10; ++i) {
            auto ev = execute_payment(g, g.find_node("leaf" + std::to_string(2 * i)),
                                      g.find_node("leaf" + std::to_string(2 * i + 1)), 100'000, 1,
                                      {});
            REQUIRE(ev.outcome == Outcome::Success);
            log.events.push_back(std::move(ev));
        }

        auto buckets = throughput_report(log, g);
        REQUIRE(buckets.size() == 4);
        CHECK(buckets[0].node_count == 160); // spokes, zero forwards
        CHECK(buckets[0].mean_forwards_per_day == doctest::Approx(0.0));
        CHECK(buckets[1].node_count == 1); // the hub alone
        CHECK(buckets[1].mean_forwards_per_day == doctest::Approx(5.0));
        CHECK(buckets[2].node_count == 0);
        CHECK(buckets[3].node_count == 0);
    }

    SUBCASE("direct payments forward nothing") {
        NetworkGraph g;
        mk(g, "ab", "a", "b", 10'000'000, 5'000'000);
        g.rebuild_adjacency();
        EventLog log;
        log.duration_days = 1;
        log.events.push_back(execute_payment(g, 0, 1, 1000, 1, {}));
        auto buckets = throughput_report(log, g);
        for (const auto& b : buckets) CHECK(b.mean_forwards_per_day == doctest::Approx(0.0));
    }

    SUBCASE("needs at least one full day") {
        NetworkGraph g;
        mk(g, "ab", "a", "b", 10'000'000, 5'000'000);
        g.rebuild_adjacency();
        EventLog log;
        log.duration_days = 0;
        CHECK_THROWS_AS(throughput_report(log, g), ConfigError);
    }
}

TEST_CASE("event log csv") {
    NetworkGraph g;
    mk(g, "ab", "a", "b", 10'000'000, 5'000'000);
    g.rebuild_adjacency();
    EventLog log;
    log.duration_days = 1;
    log.events.push_back(execute_payment(g, 0, 1, 1000, 1, {}, 50));
    PaymentEvent noroute;
    noroute.id = 1;
    noroute.sender = 1;
    noroute.recipient = 0;
    noroute.amount_msat = 77;
    log.events.push_back(noroute);

    std::string path = temp_file("lnsim_eventlog.csv");
    write_event_log_csv(log, g, path);
    std::ifstream in(path);
    std::string header, row1, row2, extra;
    REQUIRE(std::getline(in, header));
    REQUIRE(std::getline(in, row1));
    REQUIRE(std::getline(in, row2));
    CHECK_FALSE(std::getline(in, extra));
    CHECK(header ==
          "payment,attempt,sender,recipient,amount_msat,path,outcome,failed_index,start_ms,end_ms");
    CHECK(row1 == "0,1,a,b,1000,a;b,success,0,50,110");
    CHECK(row2 == "1,0,b,a,77,,fail,0,0,0");
    std::filesystem::remove(path);
}
