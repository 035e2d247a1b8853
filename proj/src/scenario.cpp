#include "lnsim/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>

#include "json.hpp"

#include "lnsim/onpath.hpp"
#include "lnsim/synth.hpp"

namespace lnsim {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw ConfigError(where + ": " + what);
}

std::string type_name(const json& v) {
    if (v.is_null()) return "null";
    if (v.is_boolean()) return "bool";
    if (v.is_string()) return "string";
    if (v.is_array()) return "array";
    if (v.is_object()) return "object";
    return "number";
}

void expect_keys(const json& obj, const std::string& where,
                 std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) ok = true;
        if (!ok) fail(where + "." + it.key(), "unknown field");
    }
}

int64_t get_int(const json& obj, const std::string& where, const char* key, int64_t def,
                int64_t lo, int64_t hi) {
    if (!obj.contains(key)) return def;
    const json& v = obj.at(key);
    if (!v.is_number_integer()) fail(where + "." + key, "expected integer, got " + type_name(v));
    int64_t x = v.get<int64_t>();
    if (x < lo || x > hi)
        fail(where + "." + key,
             "value " + std::to_string(x) + " outside [" + std::to_string(lo) + ", " +
                 std::to_string(hi) + "]");
    return x;
}

double get_num(const json& obj, const std::string& where, const char* key, double def, double lo,
               double hi) {
    if (!obj.contains(key)) return def;
    const json& v = obj.at(key);
    if (!v.is_number()) fail(where + "." + key, "expected number, got " + type_name(v));
    double x = v.get<double>();
    if (!(x >= lo && x <= hi))
        fail(where + "." + key, "value outside [" + std::to_string(lo) + ", " +
                                    std::to_string(hi) + "]");
    return x;
}

bool get_bool(const json& obj, const std::string& where, const char* key, bool def) {
    if (!obj.contains(key)) return def;
    const json& v = obj.at(key);
    if (!v.is_boolean()) fail(where + "." + key, "expected bool, got " + type_name(v));
    return v.get<bool>();
}

std::string get_str(const json& obj, const std::string& where, const char* key,
                    const std::string& def) {
    if (!obj.contains(key)) return def;
    const json& v = obj.at(key);
    if (!v.is_string()) fail(where + "." + key, "expected string, got " + type_name(v));
    return v.get<std::string>();
}

bool safe_name(const std::string& s) {
    if (s.empty() || s == "." || s == "..") return false;
    for (char c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-' && c != '.')
            return false;
    return true;
}

SimSection parse_sim(const json& v, const std::string& where) {
    if (!v.is_object()) fail(where, "expected object, got " + type_name(v));
    expect_keys(v, where,
                {"t_pay", "duration_days", "endpoints", "values", "retries", "cheap_floor_msat",
                 "write_events"});
    SimSection s;
    s.present = true;
    s.cfg.t_pay = get_int(v, where, "t_pay", s.cfg.t_pay, 1, 10'000'000);
    s.cfg.duration_days =
        static_cast<int>(get_int(v, where, "duration_days", s.cfg.duration_days, 1, 10'000));
    try {
        s.cfg.endpoints = endpoints_from_name(get_str(v, where, "endpoints", "uniform"));
        s.cfg.values = ValuesMode::parse(get_str(v, where, "values", "cheap"));
    } catch (const ConfigError& e) {
        fail(where, e.what());
    }
    s.cfg.retries = static_cast<int>(get_int(v, where, "retries", s.cfg.retries, 0, 100));
    s.cfg.cheap_floor_msat =
        get_int(v, where, "cheap_floor_msat", s.cfg.cheap_floor_msat, 1, 1'000'000'000);
    s.write_events = get_bool(v, where, "write_events", true);
    return s;
}

DiscoverySection parse_discovery(const json& v, const std::string& where) {
    if (!v.is_object()) fail(where, "expected object, got " + type_name(v));
    expect_keys(v, where,
                {"tau_seconds", "budgets", "budget_tau_seconds", "runs", "channel_failure_prob",
                 "coverage", "threads"});
    DiscoverySection d;
    d.present = true;
    if (v.contains("tau_seconds")) {
        const json& a = v.at("tau_seconds");
        if (!a.is_array() || a.empty())
            fail(where + ".tau_seconds", "expected non-empty array");
        for (const json& e : a) {
            if (!e.is_number_integer() || e.get<int64_t>() < 1)
                fail(where + ".tau_seconds", "entries must be positive integers");
            d.tau_ms.push_back(e.get<int64_t>() * 1000);
        }
    }
    if (v.contains("budgets")) {
        const json& a = v.at("budgets");
        if (!a.is_array() || a.empty()) fail(where + ".budgets", "expected non-empty array");
        for (const json& e : a) {
            if (!e.is_number_integer() || e.get<int64_t>() < 1)
                fail(where + ".budgets", "entries must be positive integers");
            d.budgets.push_back(static_cast<int>(e.get<int64_t>()));
        }
    }
    if (d.tau_ms.empty() && d.budgets.empty())
        fail(where, "needs tau_seconds or budgets");
    d.budget_tau_ms = get_int(v, where, "budget_tau_seconds", 30, 1, 86'400) * 1000;
    d.runs = static_cast<int>(get_int(v, where, "runs", d.runs, 1, 1000));
    d.channel_failure_prob =
        get_num(v, where, "channel_failure_prob", d.channel_failure_prob, 0.0, 1.0);
    try {
        d.coverage = coverage_from_name(get_str(v, where, "coverage", "oracle_aided"));
    } catch (const ConfigError& e) {
        fail(where + ".coverage", e.what());
    }
    d.threads = static_cast<int>(get_int(v, where, "threads", 0, 0, 4096));
    return d;
}

ProbeSection parse_probe(const json& v, const std::string& where) {
    if (!v.is_object()) fail(where, "expected object, got " + type_name(v));
    expect_keys(v, where,
                {"top_n", "coverage", "failure_probability", "per_channel_seconds", "cost"});
    ProbeSection p;
    p.present = true;
    p.top_n = static_cast<int>(get_int(v, where, "top_n", p.top_n, 1, 1'000'000));
    try {
        p.coverage = coverage_from_name(get_str(v, where, "coverage", "oracle_aided"));
    } catch (const ConfigError& e) {
        fail(where + ".coverage", e.what());
    }
    p.failure_probability = get_num(v, where, "failure_probability", 0.0, 0.0, 1.0);
    p.per_channel_seconds = get_num(v, where, "per_channel_seconds", 30.0, 0.0, 1e6);
    if (v.contains("cost")) {
        const json& a = v.at("cost");
        if (!a.is_array()) fail(where + ".cost", "expected array");
        std::set<std::string> labels;
        for (size_t i = 0; i < a.size(); ++i) {
            std::string cw = where + ".cost[" + std::to_string(i) + "]";
            const json& e = a[i];
            if (!e.is_object()) fail(cw, "expected object");
            expect_keys(e, cw,
                        {"label", "channels", "open_close_fee_btc", "per_channel_capacity_btc",
                         "liquidity_cost_btc", "liquidity_capacity_btc", "reserve_rate"});
            CostCase c;
            c.label = get_str(e, cw, "label", "");
            if (!safe_name(c.label)) fail(cw + ".label", "required, letters/digits/_-. only");
            if (!labels.insert(c.label).second) fail(cw + ".label", "duplicate label");
            c.channels = static_cast<int>(get_int(e, cw, "channels", 0, 0, 10'000'000));
            c.open_close_fee_btc = get_num(e, cw, "open_close_fee_btc", 0.0, 0.0, 21e6);
            c.per_channel_capacity_btc =
                get_num(e, cw, "per_channel_capacity_btc", 0.0, 0.0, 21e6);
            c.liquidity_cost_btc = get_num(e, cw, "liquidity_cost_btc", 0.0, 0.0, 21e6);
            c.liquidity_capacity_btc = get_num(e, cw, "liquidity_capacity_btc", 0.0, 0.0, 21e6);
            c.reserve_rate = get_num(e, cw, "reserve_rate", 0.01, 0.0, 1.0);
            p.cost.push_back(c);
        }
    }
    return p;
}

ChainSection parse_chain(const json& v, const std::string& where) {
    if (!v.is_object()) fail(where, "expected object, got " + type_name(v));
    expect_keys(v, where,
                {"total_txs", "private_channels", "public_channels", "decoys", "chains"});
    ChainSection c;
    c.present = true;
    c.total_txs = static_cast<int>(get_int(v, where, "total_txs", c.total_txs, 1, 10'000'000));
    c.private_channels =
        static_cast<int>(get_int(v, where, "private_channels", c.private_channels, 1, 1'000'000));
    c.public_channels =
        static_cast<int>(get_int(v, where, "public_channels", c.public_channels, 2, 1'000'000));
    c.decoys = static_cast<int>(get_int(v, where, "decoys", c.decoys, 0, 1'000'000));
    c.chains = static_cast<int>(get_int(v, where, "chains", c.chains, 1, 1'000'000));
    return c;
}

Scenario parse_one(const json& obj, const std::string& source) {
    if (!obj.is_object()) fail(source, "scenario must be an object, got " + type_name(obj));
    Scenario s;
    s.name = get_str(obj, source, "name", "");
    if (!safe_name(s.name)) fail(source + ".name", "required, letters/digits/_-. only");
    const std::string& w = s.name;
    expect_keys(obj, w,
                {"name", "seed", "snapshot", "balances", "output_dir", "sim", "onpath",
                 "throughput", "discovery", "probe", "chain"});
    s.seed = static_cast<uint64_t>(
        get_int(obj, w, "seed", 1, 0, std::numeric_limits<int64_t>::max()));
    if (obj.contains("snapshot")) {
        const json& v = obj.at("snapshot");
        if (v.is_string()) {
            s.snapshot_path = v.get<std::string>();
            if (s.snapshot_path.empty()) fail(w + ".snapshot", "empty path");
        } else if (v.is_object()) {
            expect_keys(v, w + ".snapshot", {"preset", "seed"});
            s.preset = get_str(v, w + ".snapshot", "preset", "");
            const auto& known = preset_names();
            if (std::find(known.begin(), known.end(), s.preset) == known.end())
                fail(w + ".snapshot.preset",
                     "unknown preset '" + s.preset + "', have: " + join(known, ' '));
            s.graph_seed = static_cast<uint64_t>(get_int(v, w + ".snapshot", "seed", 0, 0,
                                                         std::numeric_limits<int64_t>::max()));
        } else {
            fail(w + ".snapshot", "expected path string or {\"preset\": ...}");
        }
    }
    try {
        s.balances = BalanceMode::parse(get_str(obj, w, "balances", "uniform"));
    } catch (const ConfigError& e) {
        fail(w + ".balances", e.what());
    }
    s.output_dir = get_str(obj, w, "output_dir", s.name);
    if (obj.contains("sim")) s.sim = parse_sim(obj.at("sim"), w + ".sim");
    s.onpath = get_bool(obj, w, "onpath", false);
    s.throughput = get_bool(obj, w, "throughput", false);
    if (obj.contains("discovery"))
        s.discovery = parse_discovery(obj.at("discovery"), w + ".discovery");
    if (obj.contains("probe")) s.probe = parse_probe(obj.at("probe"), w + ".probe");
    if (obj.contains("chain")) s.chain = parse_chain(obj.at("chain"), w + ".chain");
    return s;
}

} // namespace

std::vector<Scenario> parse_scenarios(const std::string& text, const std::string& source) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(source + ": " + e.what());
    }
    std::vector<Scenario> out;
    if (root.is_object() && root.contains("scenarios")) {
        expect_keys(root, source, {"scenarios"});
        const json& a = root.at("scenarios");
        if (!a.is_array()) fail(source + ".scenarios", "expected array");
        for (const json& e : a) out.push_back(parse_one(e, source));
    } else {
        out.push_back(parse_one(root, source));
    }
    std::set<std::string> names;
    for (const Scenario& s : out)
        if (!names.insert(s.name).second)
            fail(source, "duplicate scenario name '" + s.name + "'");
    return out;
}

std::vector<Scenario> load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_scenarios(text, path);
}

void validate_scenario(const Scenario& s) {
    bool needs_graph = s.sim.present || s.onpath || s.throughput || s.discovery.present ||
                       s.probe.present;
    if (!needs_graph && !s.chain.present) fail(s.name, "nothing to run");
    if ((s.onpath || s.throughput) && !s.sim.present)
        fail(s.name, "onpath/throughput need a sim section");
    if (s.discovery.present && !s.sim.present) fail(s.name, "discovery needs a sim section");
    if (needs_graph) {
        if (s.snapshot_path.empty() && s.preset.empty())
            fail(s.name, "snapshot (path or preset) required");
        if (!s.snapshot_path.empty() && !fs::exists(s.snapshot_path))
            fail(s.name + ".snapshot", "no such file: " + s.snapshot_path);
    }
}

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = {"lengths", "discovery", "skewed3000",
                                                   "throughput_big", "throughput_small"};
    return names;
}

// sizes are picked so the five presets cover the analyses' needs: "lengths"
// is mid-size with distinct hub tiers, "discovery" keeps leaves at degree
// 2-3 so inferred paths stay separable, "skewed3000" concentrates most leaf
// channels on its top hundred hubs, and the throughput pair places hub
// degrees in all four reporting buckets with safety margin
NetworkGraph build_preset_graph(const std::string& name, uint64_t seed) {
    TieredGraphParams p;
    if (name == "lengths") {
        // near-complete hub mesh and one flat fee schedule: routing then
        // favors few hops, which parks leaf-to-leaf routes at four nodes and
        // concentrates observable failures on the shortest observable length
        p.tiers = {{33, 52, 60'000'000'000}};
        p.leaf_channels_min = 1;
        p.leaf_channels_max = 3;
        p.leaf_cap_msat = 6'000'000'000;
        p.hub_mesh_links = 24;
        NetworkGraph g = make_tiered_graph(p, seed);
        for (Channel& c : g.channels) c.policy_ab = c.policy_ba = FeePolicy{};
        return g;
    }
    if (name == "discovery") {
        // sparse hub mesh so decompositions stay unambiguous at wide
        // snapshot intervals, leaves at 2-3 channels
        p.tiers = {{56, 80, 50'000'000'000}};
        p.leaf_channels_min = 2;
        p.leaf_channels_max = 3;
        p.leaf_cap_msat = 8'000'000'000;
        p.hub_mesh_links = 4;
    } else if (name == "skewed3000") {
        // the hundred busiest nodes sit on ~95% of all leaf channels, and a
        // denser mesh keeps hub-to-hub stretches short
        p.tiers = {{40, 75, 50'000'000'000}, {70, 24, 20'000'000'000}};
        p.leaf_channels_min = 1;
        p.leaf_channels_max = 2;
        p.leaf_cap_msat = 6'000'000'000;
        p.hub_mesh_links = 12;
    } else if (name == "throughput_big") {
        p.tiers = {{1, 560, 80'000'000'000},
                   {2, 420, 60'000'000'000},
                   {4, 230, 40'000'000'000},
                   {10, 90, 20'000'000'000}};
        p.leaf_channels_min = 1;
        p.leaf_channels_max = 2;
        p.leaf_cap_msat = 6'000'000'000;
        p.hub_mesh_links = 2;
    } else if (name == "throughput_small") {
        p.tiers = {{1, 520, 80'000'000'000},
                   {2, 330, 60'000'000'000},
                   {3, 180, 40'000'000'000},
                   {8, 60, 20'000'000'000}};
        p.leaf_channels_min = 1;
        p.leaf_channels_max = 2;
        p.leaf_cap_msat = 6'000'000'000;
        p.hub_mesh_links = 2;
    } else {
        throw ConfigError("unknown preset: " + name);
    }
    return make_tiered_graph(p, seed);
}

NetworkGraph materialize_graph(const Scenario& s) {
    NetworkGraph g;
    if (!s.preset.empty()) {
        uint64_t gseed = s.graph_seed ? s.graph_seed : derive_seed(s.seed, 1);
        g = build_preset_graph(s.preset, gseed);
    } else {
        g = load_snapshot(s.snapshot_path);
    }
    Rng brng(derive_seed(s.seed, 2));
    assign_balances(g, s.balances, brng);
    Rng arng(derive_seed(s.seed, 3));
    assign_attributes(g, ClientDistribution{}, 0.15, {"eu", "us", "apac"}, arng);
    return g;
}

const std::vector<std::string>& bundled_scenario_names() {
    static const std::vector<std::string> names = {
        "lengths_long",   "lengths_short",    "discovery_tau_sweep", "discovery_budget",
        "throughput_big", "throughput_small", "probe_cost",          "chain_corpus"};
    return names;
}

std::string bundled_scenario_text(const std::string& name) {
    if (name == "lengths_long") return R"json({
  "name": "lengths_long",
  "seed": 11,
  "snapshot": {"preset": "lengths"},
  "balances": "uniform",
  "sim": {"t_pay": 1000, "duration_days": 30, "endpoints": "uniform", "values": "cheap"},
  "onpath": true
})json";
    if (name == "lengths_short") return R"json({
  "name": "lengths_short",
  "seed": 11,
  "snapshot": {"preset": "lengths"},
  "balances": "uniform",
  "sim": {"t_pay": 1000, "duration_days": 30, "endpoints": "weighted", "values": "expensive"},
  "onpath": true
})json";
    if (name == "discovery_tau_sweep") return R"json({
  "name": "discovery_tau_sweep",
  "seed": 21,
  "snapshot": {"preset": "discovery"},
  "balances": "uniform",
  "sim": {"t_pay": 2000, "duration_days": 30, "endpoints": "uniform", "values": "fixed(1000, 10)", "write_events": false},
  "discovery": {"tau_seconds": [1, 2, 4, 8, 16, 32, 64, 128, 256], "runs": 5, "channel_failure_prob": 0.05, "coverage": "oracle_aided"}
})json";
    if (name == "discovery_budget") return R"json({
  "name": "discovery_budget",
  "seed": 31,
  "snapshot": {"preset": "skewed3000"},
  "balances": "uniform",
  "sim": {"t_pay": 2000, "duration_days": 1, "endpoints": "uniform", "values": "fixed(1000, 10)", "write_events": false},
  "discovery": {"budgets": [1, 5, 20, 50, 100], "budget_tau_seconds": 30, "runs": 5, "channel_failure_prob": 0.02}
})json";
    if (name == "throughput_big") return R"json({
  "name": "throughput_big",
  "seed": 41,
  "snapshot": {"preset": "throughput_big"},
  "balances": "uniform",
  "sim": {"t_pay": 3000, "duration_days": 3, "endpoints": "uniform", "values": "cheap", "write_events": false},
  "throughput": true
})json";
    if (name == "throughput_small") return R"json({
  "name": "throughput_small",
  "seed": 41,
  "snapshot": {"preset": "throughput_small"},
  "balances": "uniform",
  "sim": {"t_pay": 3000, "duration_days": 3, "endpoints": "uniform", "values": "cheap", "write_events": false},
  "throughput": true
})json";
    if (name == "probe_cost") return R"json({
  "name": "probe_cost",
  "seed": 51,
  "snapshot": {"preset": "discovery"},
  "balances": "uniform",
  "probe": {
    "top_n": 100,
    "coverage": "oracle_aided",
    "failure_probability": 0.05,
    "cost": [
      {"label": "per_channel_pair", "channels": 1, "open_close_fee_btc": 0.00043, "per_channel_capacity_btc": 0.005},
      {"label": "full_network", "channels": 0, "open_close_fee_btc": 0.00025, "per_channel_capacity_btc": 0.04998769}
    ]
  }
})json";
    if (name == "chain_corpus") return R"json({
  "name": "chain_corpus",
  "seed": 61,
  "chain": {"total_txs": 10000, "private_channels": 500, "public_channels": 300, "decoys": 200, "chains": 40}
})json";
    throw ConfigError("no bundled scenario named '" + name + "'");
}

namespace {

json ci_json(const MeanCi& m) {
    return json{{"mean", m.mean}, {"ci_low", m.ci_low}, {"ci_high", m.ci_high}, {"n", m.n}};
}

json lengths_json(const std::map<int, double>& dist) {
    json out = json::object();
    for (auto& [len, p] : dist) out[std::to_string(len)] = p;
    return out;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    if (!out) throw ConfigError("cannot write " + p.string());
    out << text;
}

int count_public(const NetworkGraph& g) {
    int n = 0;
    for (const Channel& c : g.channels)
        if (c.is_public) ++n;
    return n;
}

void run_onpath(const Scenario& s, const EventLog& log, const fs::path& dir, json& summary,
                RunReport& rep) {
    json jo;
    std::vector<OnpathRow> rows;
    auto add = [&](const char* target, const char* outcome, const LengthDistribution& d,
                   double (*fn)(const LengthDistribution&, TopologyMode)) {
        rows.push_back({s.name, target, outcome, "lower_bound", fn(d, TopologyMode::LowerBound)});
        rows.push_back({s.name, target, outcome, "clique", fn(d, TopologyMode::Clique)});
    };
    // either side of the log can be degenerate (an all-success run has no
    // observable failures); that loses the rows, not the scenario
    try {
        auto succ = path_length_distribution(log, LengthFilter::Success);
        jo["success_lengths"] = lengths_json(succ);
        auto d = LengthDistribution::from_lengths(succ, Outcome::Success);
        add("sender", "success", d, sender_success_probability);
        add("recipient", "success", d, recipient_probability);
    } catch (const std::exception& e) {
        jo["success_note"] = e.what();
    }
    try {
        auto fail_obs = path_length_distribution(log, LengthFilter::FailObservable);
        jo["fail_lengths"] = lengths_json(fail_obs);
        auto d = LengthDistribution::from_lengths(fail_obs, Outcome::Fail);
        add("sender", "fail", d, sender_fail_probability);
    } catch (const std::exception& e) {
        jo["fail_note"] = e.what();
    }
    json jrows = json::array();
    for (const OnpathRow& r : rows)
        jrows.push_back(json{{"target", r.target},
                             {"outcome", r.outcome},
                             {"mode", r.mode},
                             {"probability", r.probability}});
    jo["probabilities"] = jrows;
    AdversaryCheck chk = empirical_adversary_check(log);
    jo["empirical"] = json{{"sender_success", chk.sender_success},
                           {"recipient_success", chk.recipient_success},
                           {"sender_fail", chk.sender_fail},
                           {"recipient_fail", chk.recipient_fail},
                           {"success_payments", chk.success_payments},
                           {"fail_payments", chk.fail_payments}};
    write_onpath_csv(rows, (dir / "onpath.csv").string());
    rep.artifacts.push_back("onpath.csv");
    summary["onpath"] = jo;
}

void run_throughput(const EventLog& log, const NetworkGraph& g, const fs::path& dir,
                    json& summary, RunReport& rep) {
    auto buckets = throughput_report(log, g);
    std::ofstream out(dir / "throughput.csv");
    if (!out) throw ConfigError("cannot write throughput csv");
    out << "min_channels,max_channels,node_count,mean_forwards_per_day\n";
    json jb = json::array();
    char buf[96];
    for (const ThroughputBucket& b : buckets) {
        std::snprintf(buf, sizeof buf, "%d,%d,%d,%.6f", b.min_channels, b.max_channels,
                      b.node_count, b.mean_forwards_per_day);
        out << buf << "\n";
        jb.push_back(json{{"min_channels", b.min_channels},
                          {"max_channels", b.max_channels},
                          {"node_count", b.node_count},
                          {"mean_forwards_per_day", b.mean_forwards_per_day}});
    }
    rep.artifacts.push_back("throughput.csv");
    summary["throughput"] = jb;
}

void run_discovery(const Scenario& s, const NetworkGraph& initial, const fs::path& dir,
                   json& summary, RunReport& rep, std::string& section) {
    const DiscoverySection& d = s.discovery;
    json jd;
    if (!d.tau_ms.empty()) {
        section = "discovery.tau_sweep";
        SweepParams sp;
        sp.sim = s.sim.cfg;
        sp.tau_ms = d.tau_ms;
        sp.runs = d.runs;
        sp.base_seed = derive_seed(s.seed, 7);
        sp.channel_failure_prob = d.channel_failure_prob;
        sp.coverage = d.coverage;
        sp.threads = d.threads;
        auto pts = tau_sweep(initial, sp);
        write_tau_sweep_csv(pts, (dir / "tau_sweep.csv").string());
        rep.artifacts.push_back("tau_sweep.csv");
        json ja = json::array();
        for (const SweepPoint& pt : pts)
            ja.push_back(json{{"tau_ms", pt.tau_ms},
                              {"recall", ci_json(pt.recall)},
                              {"precision", ci_json(pt.precision)}});
        jd["tau_sweep"] = ja;
    }
    if (!d.budgets.empty()) {
        section = "discovery.budget";
        BudgetParams bp;
        bp.sim = s.sim.cfg;
        bp.tau_ms = d.budget_tau_ms;
        bp.budgets = d.budgets;
        bp.runs = d.runs;
        bp.base_seed = derive_seed(s.seed, 8); // shared: both coverages see the same traffic
        bp.channel_failure_prob = d.channel_failure_prob;
        bp.threads = d.threads;
        bp.coverage = Coverage::Generic;
        auto generic = recall_vs_budget(initial, bp);
        bp.coverage = Coverage::OracleAided;
        auto oracle = recall_vs_budget(initial, bp);
        write_budget_csv(generic, oracle, (dir / "budget.csv").string());
        rep.artifacts.push_back("budget.csv");
        auto dump = [](const std::vector<BudgetPoint>& pts) {
            json a = json::array();
            for (const BudgetPoint& pt : pts)
                a.push_back(json{{"n", pt.n}, {"recall", ci_json(pt.recall)}});
            return a;
        };
        jd["budget"] = json{{"tau_ms", d.budget_tau_ms},
                            {"generic", dump(generic)},
                            {"oracle_aided", dump(oracle)}};
    }
    summary["discovery"] = jd;
}

void run_probe(const Scenario& s, const NetworkGraph& g, const fs::path& dir, json& summary,
               RunReport& rep) {
    const ProbeSection& p = s.probe;
    auto attacker = top_n_by_channel_count(g, p.top_n);
    SnapshotParams sp;
    sp.coverage = p.coverage;
    sp.failure_probability = p.failure_probability;
    sp.per_channel_seconds = p.per_channel_seconds;
    Rng rng(derive_seed(s.seed, 5));
    BalanceSnapshot snap = snapshot_network(g, attacker, sp, rng);
    write_snapshot_csv(snap, g, (dir / "snapshot.csv").string());
    rep.artifacts.push_back("snapshot.csv");
    int known = 0, failed = 0, uncovered = 0, priv = 0;
    for (const SnapshotEntry& e : snap.entries) {
        switch (e.state) {
        case ChannelKnowledge::Known: ++known; break;
        case ChannelKnowledge::Failed: ++failed; break;
        case ChannelKnowledge::Uncovered: ++uncovered; break;
        case ChannelKnowledge::Private: ++priv; break;
        }
    }
    json jp;
    jp["snapshot"] = json{{"top_n", p.top_n},       {"known", known},
                          {"failed", failed},       {"uncovered", uncovered},
                          {"private", priv},        {"duration_ms", snap.duration_ms}};
    if (!p.cost.empty()) {
        std::ofstream out(dir / "cost.csv");
        if (!out) throw ConfigError("cannot write cost csv");
        out << "label,channels,open_close_fee_btc,liquidity_purchase_btc,liquidity_batches,"
               "reserve_btc,total_spent_btc,total_on_hold_btc\n";
        json jc = json::object();
        char buf[256];
        int public_channels = count_public(g);
        for (const CostCase& c : p.cost) {
            int channels = c.channels ? c.channels : public_channels;
            CostReport r = attack_cost(g, channels, c.open_close_fee_btc,
                                       c.per_channel_capacity_btc,
                                       {c.liquidity_cost_btc, c.liquidity_capacity_btc},
                                       c.reserve_rate);
            std::snprintf(buf, sizeof buf, "%s,%d,%.8f,%.8f,%d,%.8f,%.8f,%.8f", c.label.c_str(),
                          r.channels, r.open_close_fee_btc, r.liquidity_purchase_btc,
                          r.liquidity_batches, r.reserve_btc, r.total_spent_btc,
                          r.total_on_hold_btc);
            out << buf << "\n";
            jc[c.label] = json{{"channels", r.channels},
                               {"total_spent_btc", r.total_spent_btc},
                               {"total_on_hold_btc", r.total_on_hold_btc},
                               {"reserve_btc", r.reserve_btc},
                               {"liquidity_purchase_btc", r.liquidity_purchase_btc},
                               {"liquidity_batches", r.liquidity_batches}};
        }
        rep.artifacts.push_back("cost.csv");
        jp["cost"] = jc;
    }
    summary["probe"] = jp;
}

void run_chain(const Scenario& s, const fs::path& dir, json& summary, RunReport& rep) {
    const ChainSection& c = s.chain;
    ChainCorpus corpus = make_chain_corpus(c.total_txs, c.private_channels, c.public_channels,
                                           c.decoys, c.chains, derive_seed(s.seed, 6));
    save_transactions(corpus.txs, (dir / "corpus.jsonl").string());
    rep.artifacts.push_back("corpus.jsonl");
    TxDataset ds;
    ds.txs = corpus.txs;
    ds.index_and_validate();
    auto classified_opens = [&](const std::vector<std::string>& ids) {
        int n = 0;
        for (const std::string& id : ids)
            if (classify_opening(*ds.find(id), corpus.window)) ++n;
        return n;
    };
    int open_hits = classified_opens(corpus.private_opens) + classified_opens(corpus.public_opens);
    int close_hits = 0;
    for (const auto* list : {&corpus.private_closes, &corpus.public_closes})
        for (const std::string& id : *list)
            if (classify_closing(*ds.find(id))) ++close_hits;
    int planted_opens = static_cast<int>(corpus.private_opens.size() + corpus.public_opens.size());
    int planted_closes =
        static_cast<int>(corpus.private_closes.size() + corpus.public_closes.size());
    int decoys_rejected = 0;
    for (const std::string& id : corpus.decoys) {
        const TransactionRecord& tx = *ds.find(id);
        if (!classify_opening(tx, corpus.window) && !classify_closing(tx)) ++decoys_rejected;
    }
    std::set<std::string> public_set(corpus.public_opens.begin(), corpus.public_opens.end());
    auto links = match_open_close(ds, corpus.window, public_set);
    PeelingChains chains = trace_peeling_chains(ds, corpus.seeds, corpus.window);
    std::set<std::vector<std::string>> traced;
    for (const auto& ch : chains.chains) {
        std::vector<std::string> v = ch;
        std::sort(v.begin(), v.end());
        traced.insert(std::move(v));
    }
    int recovered = 0;
    for (const auto& planted : corpus.planted_chains)
        if (traced.count(planted)) ++recovered;
    links = cluster_and_identify(ds, chains, std::move(links), corpus.public_endpoints);
    write_chain_links_csv(links, (dir / "chain_links.csv").string());
    rep.artifacts.push_back("chain_links.csv");
    AttributionCounts at = count_attributions(links);
    summary["chain"] =
        json{{"transactions", corpus.txs.size()},
             {"planted_opens", planted_opens},
             {"planted_closes", planted_closes},
             {"opens_classified", open_hits},
             {"closes_classified", close_hits},
             {"decoys", corpus.decoys.size()},
             {"decoys_rejected", decoys_rejected},
             {"chains_planted", corpus.planted_chains.size()},
             {"chains_recovered", recovered},
             {"traced_chains", chains.chains.size()},
             {"private_links", links.size()},
             {"attribution", json{{"both", at.both}, {"one", at.one}, {"none", at.none}}}};
}

} // namespace

RunReport run_scenario(const Scenario& s, const std::string& output_root) {
    validate_scenario(s);
    RunReport rep;
    rep.scenario = s.name;
    fs::path dir(s.output_dir.empty() ? s.name : s.output_dir);
    if (dir.is_relative()) dir = fs::path(output_root) / dir;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError(s.name + ": cannot create output dir " + dir.string());
    rep.output_dir = fs::absolute(dir).string();

    json summary;
    summary["scenario"] = s.name;
    summary["seed"] = s.seed;
    std::string section = "setup";
    try {
        bool needs_graph = s.sim.present || s.onpath || s.throughput || s.discovery.present ||
                           s.probe.present;
        NetworkGraph initial;
        if (needs_graph) {
            section = "graph";
            initial = materialize_graph(s);
            summary["graph"] = json{{"source", s.preset.empty() ? s.snapshot_path : s.preset},
                                    {"nodes", initial.node_count()},
                                    {"channels", initial.channels.size()},
                                    {"public_channels", count_public(initial)}};
        }
        EventLog log;
        if (s.sim.present) {
            section = "sim";
            SimConfig cfg = s.sim.cfg;
            cfg.seed = derive_seed(s.seed, 4);
            NetworkGraph work = initial; // the sim commits balances, keep the original
            log = run_simulation(work, cfg);
            int64_t ok = 0;
            for (const PaymentEvent& ev : log.events)
                if (ev.outcome == Outcome::Success) ++ok;
            summary["sim"] = json{{"payments", log.events.size()},
                                  {"success", ok},
                                  {"fail", static_cast<int64_t>(log.events.size()) - ok}};
            if (s.sim.write_events) {
                write_event_log_csv(log, initial, (dir / "events.csv").string());
                rep.artifacts.push_back("events.csv");
            }
        }
        if (s.onpath) {
            section = "onpath";
            run_onpath(s, log, dir, summary, rep);
        }
        if (s.throughput) {
            section = "throughput";
            run_throughput(log, initial, dir, summary, rep);
        }
        if (s.discovery.present) run_discovery(s, initial, dir, summary, rep, section);
        if (s.probe.present) {
            section = "probe";
            run_probe(s, initial, dir, summary, rep);
        }
        if (s.chain.present) {
            section = "chain";
            run_chain(s, dir, summary, rep);
        }
        section = "summary";
        write_text(dir / "summary.json", summary.dump(2) + "\n");
        rep.artifacts.push_back("summary.json");
    } catch (const std::exception& e) {
        rep.ok = false;
        rep.error = section + ": " + e.what();
        json man;
        man["scenario"] = s.name;
        man["failed_section"] = section;
        man["error"] = e.what();
        man["artifacts"] = rep.artifacts;
        std::ofstream out(dir / "error_manifest.json");
        if (out) {
            out << man.dump(2) << "\n";
            rep.artifacts.push_back("error_manifest.json");
        }
    }
    return rep;
}

} // namespace lnsim
