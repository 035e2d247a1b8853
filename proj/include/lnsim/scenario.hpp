#pragma once

#include <string>
#include <vector>

#include "lnsim/discovery.hpp"

namespace lnsim {

// Scenario runner: one JSON config describes a graph source plus the
// analyses to run on it, and run_scenario turns that into CSV artifacts and
// a summary.json under the output root. Everything is seeded off the single
// scenario seed, so a config reruns byte-identical.

struct SimSection {
    bool present = false;
    bool write_events = true;
    SimConfig cfg; // cfg.seed is derived from the scenario seed, not configured
};

struct DiscoverySection {
    bool present = false;
    std::vector<int64_t> tau_ms; // non-empty = snapshot-interval sweep
    std::vector<int> budgets;    // non-empty = attacker-budget curves, both coverages
    int64_t budget_tau_ms = 30'000;
    int runs = 5;
    double channel_failure_prob = 0.05;
    Coverage coverage = Coverage::OracleAided; // tau sweep only
    int threads = 0;
};

struct CostCase {
    std::string label;
    int channels = 0; // 0 = one per public channel
    double open_close_fee_btc = 0.0;
    double per_channel_capacity_btc = 0.0;
    double liquidity_cost_btc = 0.0;
    double liquidity_capacity_btc = 0.0;
    double reserve_rate = 0.01;
};

struct ProbeSection {
    bool present = false;
    int top_n = 100; // attacker connects to the busiest n nodes
    Coverage coverage = Coverage::OracleAided;
    double failure_probability = 0.0;
    double per_channel_seconds = 30.0;
    std::vector<CostCase> cost;
};

struct ChainSection {
    bool present = false;
    int total_txs = 10'000;
    int private_channels = 500;
    int public_channels = 300;
    int decoys = 200;
    int chains = 40;
};

struct Scenario {
    std::string name;
    uint64_t seed = 1;
    std::string snapshot_path; // exactly one of path / preset when a graph is needed
    std::string preset;
    uint64_t graph_seed = 0; // 0 = derive from seed
    BalanceMode balances;
    std::string output_dir; // defaults to the name; relative = under the root
    SimSection sim;
    bool onpath = false;
    bool throughput = false;
    DiscoverySection discovery;
    ProbeSection probe;
    ChainSection chain;
};

// accepts one scenario object or {"scenarios": [...]}; source names the
// config in diagnostics. Throws ConfigError pointing at the bad field
std::vector<Scenario> parse_scenarios(const std::string& text, const std::string& source);
std::vector<Scenario> load_scenario_file(const std::string& path);

// checks beyond parsing: snapshot file exists, preset name is known,
// section dependencies hold (onpath and discovery need a sim section, ...)
void validate_scenario(const Scenario& s);

const std::vector<std::string>& bundled_scenario_names();
std::string bundled_scenario_text(const std::string& name);

const std::vector<std::string>& preset_names();
NetworkGraph build_preset_graph(const std::string& name, uint64_t seed);

// loads or generates the graph and fills in balances and node attributes
NetworkGraph materialize_graph(const Scenario& s);

struct RunReport {
    std::string scenario;
    std::string output_dir;                  // absolute, after root resolution
    std::vector<std::string> artifacts;      // file names inside output_dir
    bool ok = true;
    std::string error; // mirrored in error_manifest.json when not ok
};

// runs every configured section; a mid-run failure still leaves the
// artifacts written so far plus an error manifest, and reports ok = false
RunReport run_scenario(const Scenario& s, const std::string& output_root);

} // namespace lnsim
