#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "lnsim/probe.hpp"

using namespace lnsim;

namespace {

int probe_budget(Sat capacity) {
    return static_cast<int>(std::ceil(std::log2(static_cast<double>(capacity)))) + 1;
}

// what a patient attacker without binary search would conclude
Sat linear_scan(Sat true_balance, Sat capacity) {
    ProbeOracle o;
    o.true_balance_sat = true_balance;
    for (Sat amt = capacity; amt >= 1; --amt)
        if (o.probe(amt)) return amt;
    return 0;
}

int mk(NetworkGraph& g, const std::string& cid, const std::string& a, const std::string& b,
       Msat cap, Msat bal_ab, bool is_public = true) {
    int idx = g.add_channel(cid, a, b, cap, {}, {}, is_public);
    g.channels[idx].balance_ab_msat = bal_ab;
    g.channels[idx].balance_ba_msat = cap - bal_ab;
    return idx;
}

} // namespace

TEST_CASE("noiseless probing is exact binary search") {
    SUBCASE("worked examples") {
        ProbeOracle o;
        o.true_balance_sat = 512;
        auto r = probe_balance(o, 1024);
        REQUIRE(r);
        CHECK(r->estimate_sat == 512);
        CHECK(r->probes_used <= 11);

        ProbeOracle drained;
        drained.true_balance_sat = 0;
        auto z = probe_balance(drained, 1024);
        REQUIRE(z);
        CHECK(z->estimate_sat == 0);

        ProbeOracle full;
        full.true_balance_sat = 777;
        auto f = probe_balance(full, 777);
        REQUIRE(f);
        CHECK(f->estimate_sat == 777);
        CHECK(f->probes_used == 1); // the opening capacity probe already delivered
    }

    SUBCASE("agrees with a linear scan on random channels") {
        Rng rng(41);
        for (int trial = 0; trial < 1000; ++trial) {
            Sat cap = rng.range(1, 4096);
            Sat bal = rng.range(0, cap);
            ProbeOracle o;
            o.true_balance_sat = bal;
            auto r = probe_balance(o, cap);
            REQUIRE(r);
            CHECK(r->estimate_sat == linear_scan(bal, cap));
            CHECK(r->estimate_sat == bal);
            CHECK(r->probes_used <= probe_budget(cap));
        }
    }

    SUBCASE("rejects bad arguments and silent targets") {
        ProbeOracle o;
        CHECK_THROWS_AS(probe_balance(o, 0), ConfigError);
        CHECK_THROWS_AS(probe_balance(o, 100, -1), ConfigError);
        o.available = false;
        CHECK_FALSE(probe_balance(o, 100));

        ProbeOracle noisy;
        noisy.spurious_fail_prob = 0.1; // noise configured but no rng to draw from
        CHECK_THROWS_AS(probe_balance(noisy, 100), ConfigError);
    }
}

TEST_CASE("noisy probing stays sound and retries pay off") {
    const double noise = 0.3;
    const Sat cap = 1024;
    int exact_plain = 0, exact_retried = 0;
    for (int trial = 0; trial < 200; ++trial) {
        Rng key(derive_seed(7, trial));
        Sat bal = key.range(0, cap);
        for (int arm = 0; arm < 2; ++arm) {
            Rng noise_rng(derive_seed(1000 + arm, trial));
            ProbeOracle o;
            o.true_balance_sat = bal;
            o.spurious_fail_prob = noise;
            o.rng = &noise_rng;
            int retries = arm == 0 ? 0 : 6;
            auto r = probe_balance(o, cap, retries);
            REQUIRE(r);
            CHECK(r->estimate_sat <= bal); // failures can hide sats, never invent them
            CHECK(r->probes_used <= probe_budget(cap) * (retries + 1));
            if (r->estimate_sat == bal) (arm == 0 ? exact_plain : exact_retried)++;
        }
    }
    CHECK(exact_retried > exact_plain);
    CHECK(exact_retried > 190);
}

TEST_CASE("network snapshots") {
    NetworkGraph g;
    mk(g, "ab", "a", "b", 10'000'000, 6'000'500);
    mk(g, "bc", "b", "c", 10'000'000, 5'000'000);
    mk(g, "ca", "c", "a", 10'000'000, 5'000'000);
    mk(g, "cd", "c", "d", 10'000'000, 5'000'000);
    mk(g, "ae", "a", "e", 10'000'000, 5'000'000, false);
    g.rebuild_adjacency();
    std::vector<int> attacker = {g.find_node("a"), g.find_node("b")};

    SUBCASE("generic needs both ends, oracle-aided either") {
        Rng rng(1);
        SnapshotParams p;
        auto snap = snapshot_network(g, attacker, p, rng, 5000);
        CHECK(snap.time_ms == 5000);
        CHECK(snap.entries[0].state == ChannelKnowledge::Known);
        CHECK(snap.entries[1].state == ChannelKnowledge::Uncovered);
        CHECK(snap.entries[2].state == ChannelKnowledge::Uncovered);
        CHECK(snap.entries[3].state == ChannelKnowledge::Uncovered);
        CHECK(snap.entries[4].state == ChannelKnowledge::Private);
        // sub-sat balance rounds down, the reverse side keeps capacity intact
        CHECK(snap.entries[0].ab_sat == 6000);
        CHECK(snap.entries[0].ba_sat == 4000);
        CHECK(snap.duration_ms == 30'000); // one channel at the default pacing

        p.coverage = Coverage::OracleAided;
        Rng rng2(1);
        auto aided = snapshot_network(g, attacker, p, rng2);
        CHECK(aided.entries[0].state == ChannelKnowledge::Known);
        CHECK(aided.entries[1].state == ChannelKnowledge::Known);
        CHECK(aided.entries[2].state == ChannelKnowledge::Known);
        CHECK(aided.entries[3].state == ChannelKnowledge::Uncovered);
        CHECK(aided.entries[4].state == ChannelKnowledge::Private);
    }

    SUBCASE("bad inputs") {
        Rng rng(1);
        SnapshotParams p;
        CHECK_THROWS_AS(snapshot_network(g, {99}, p, rng), ConfigError);
        p.failure_probability = 1.5;
        CHECK_THROWS_AS(snapshot_network(g, attacker, p, rng), ConfigError);
    }

    SUBCASE("coverage names parse") {
        CHECK(coverage_from_name("generic") == Coverage::Generic);
        CHECK(coverage_from_name("oracle_aided") == Coverage::OracleAided);
        CHECK_THROWS_AS(coverage_from_name("psychic"), ConfigError);
    }
}

TEST_CASE("snapshot failures are channel-level coin flips") {
    NetworkGraph g;
    std::vector<int> all;
    for (int i = 0; i < 100; ++i) all.push_back(g.add_node("n" + std::to_string(i)));
    for (int i = 0; i < 10000; ++i) {
        int a = i % 100;
        int b = (a + 1 + i % 99) % 100;
        mk(g, "c" + std::to_string(i), "n" + std::to_string(a), "n" + std::to_string(b), 2'000'000,
           1'000'000);
    }
    g.rebuild_adjacency();

    SnapshotParams p;
    p.coverage = Coverage::OracleAided;
    p.failure_probability = 0.05;
    Rng rng(77);
    auto snap = snapshot_network(g, all, p, rng);
    int failed = 0, known = 0;
    for (const auto& e : snap.entries) {
        if (e.state == ChannelKnowledge::Failed) ++failed;
        if (e.state == ChannelKnowledge::Known) ++known;
    }
    CHECK(failed + known == 10000);
    CHECK(failed > 430); // 500 give or take three binomial sigmas
    CHECK(failed < 570);

    // same randomness, narrower coverage: the attacker can only know less
    std::vector<int> half(all.begin(), all.begin() + 50);
    Rng rng_a(123), rng_b(123);
    p.failure_probability = 0.1;
    p.coverage = Coverage::Generic;
    auto generic = snapshot_network(g, half, p, rng_a);
    p.coverage = Coverage::OracleAided;
    auto aided = snapshot_network(g, half, p, rng_b);
    int aided_known = 0, generic_known = 0;
    for (size_t i = 0; i < generic.entries.size(); ++i) {
        if (generic.entries[i].state == ChannelKnowledge::Known) {
            ++generic_known;
            CHECK(aided.entries[i].state == ChannelKnowledge::Known);
        }
        if (aided.entries[i].state == ChannelKnowledge::Known) ++aided_known;
    }
    CHECK(generic_known > 0);
    CHECK(aided_known > generic_known);
}

TEST_CASE("top nodes by channel count") {
    NetworkGraph g;
    mk(g, "c1", "hub", "a", 1'000'000, 500'000);
    mk(g, "c2", "hub", "b", 1'000'000, 500'000);
    mk(g, "c3", "hub", "c", 1'000'000, 500'000);
    mk(g, "c4", "a", "b", 1'000'000, 500'000);
    g.add_node("loner");
    g.rebuild_adjacency();

    auto top1 = top_n_by_channel_count(g, 1);
    REQUIRE(top1.size() == 1);
    CHECK(top1[0] == g.find_node("hub"));

    auto top3 = top_n_by_channel_count(g, 3);
    REQUIRE(top3.size() == 3);
    CHECK(top3[0] == g.find_node("hub"));
    CHECK(top3[1] == g.find_node("a")); // two channels, added before b
    CHECK(top3[2] == g.find_node("b"));

    // the channel-less node never makes the list no matter how large n gets
    auto all = top_n_by_channel_count(g, 10);
    CHECK(all.size() == 4);
    CHECK_THROWS_AS(top_n_by_channel_count(g, -1), ConfigError);
}

TEST_CASE("attack cost accounting") {
    NetworkGraph g;
    mk(g, "big", "a", "b", 10'000'000'000, 5'000'000'000); // 0.1 btc
    mk(g, "small", "b", "c", 1'000'000'000, 500'000'000);
    mk(g, "huge_private", "a", "c", 20'000'000'000, 10'000'000'000, false);
    g.rebuild_adjacency();

    SUBCASE("single channel, no liquidity") {
        auto r = attack_cost(g, 1, 0.00043, 0.005, {});
        CHECK(r.total_spent_btc == doctest::Approx(0.00086).epsilon(1e-12));
        CHECK(r.total_on_hold_btc == doctest::Approx(0.005).epsilon(1e-12));
        CHECK(r.reserve_btc == doctest::Approx(0.00005).epsilon(1e-12));
        CHECK(r.liquidity_purchase_btc == 0.0);
    }

    SUBCASE("full sweep of a big network") {
        auto r = attack_cost(g, 2191, 0.00025, 0.04998769, {});
        CHECK(r.total_spent_btc == doctest::Approx(1.097).epsilon(0.01));
        CHECK(r.total_on_hold_btc == doctest::Approx(109.53).epsilon(0.01));
        CHECK(r.total_spent_btc == doctest::Approx(2191 * 2 * 0.00025).epsilon(1e-12));
        CHECK(r.total_on_hold_btc == doctest::Approx(2191 * 0.04998769).epsilon(1e-12));
    }

    SUBCASE("liquidity batches cover the biggest public channel") {
        auto r = attack_cost(g, 5, 0.0001, 0.01, {0.002, 0.04});
        CHECK(r.liquidity_batches == 3); // 0.1 btc needed in 0.04 chunks
        CHECK(r.liquidity_purchase_btc == doctest::Approx(0.006).epsilon(1e-12));
        CHECK(r.total_spent_btc == doctest::Approx(5 * 2 * 0.0001 + 0.006).epsilon(1e-12));
        CHECK(r.total_on_hold_btc == doctest::Approx(0.05).epsilon(1e-12));

        NetworkGraph empty;
        empty.add_node("x");
        empty.rebuild_adjacency();
        auto e = attack_cost(empty, 5, 0.0001, 0.01, {0.002, 0.04});
        CHECK(e.liquidity_batches == 0);
    }

    SUBCASE("zero channels means an all-zero report") {
        auto r = attack_cost(g, 0, 0.00043, 0.005, {0.002, 0.04});
        CHECK(r.total_spent_btc == 0.0);
        CHECK(r.total_on_hold_btc == 0.0);
        CHECK(r.reserve_btc == 0.0);
        CHECK(r.liquidity_purchase_btc == 0.0);
    }

    SUBCASE("negative inputs are rejected") {
        CHECK_THROWS_AS(attack_cost(g, -1, 0.1, 0.1, {}), ConfigError);
        CHECK_THROWS_AS(attack_cost(g, 1, -0.1, 0.1, {}), ConfigError);
        CHECK_THROWS_AS(attack_cost(g, 1, 0.1, 0.1, {-0.1, 0.1}), ConfigError);
    }
}

TEST_CASE("snapshot csv") {
    NetworkGraph g;
    mk(g, "ab", "a", "b", 10'000'000, 6'000'000);
    mk(g, "bc", "b", "c", 10'000'000, 5'000'000);
    g.rebuild_adjacency();
    SnapshotParams p;
    Rng rng(1);
    auto snap = snapshot_network(g, {g.find_node("a"), g.find_node("b")}, p, rng, 42);

    auto path = (std::filesystem::temp_directory_path() / "lnsim_snapshot.csv").string();
    write_snapshot_csv(snap, g, path);
    std::ifstream in(path);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "time_ms,cid,direction,balance_sat");
    REQUIRE(std::getline(in, line));
    CHECK(line == "42,ab,ab,6000");
    REQUIRE(std::getline(in, line));
    CHECK(line == "42,ab,ba,4000");
    REQUIRE(std::getline(in, line));
    CHECK(line == "42,bc,ab,unknown");
    REQUIRE(std::getline(in, line));
    CHECK(line == "42,bc,ba,unknown");
    CHECK_FALSE(std::getline(in, line));
    std::filesystem::remove(path);
}
