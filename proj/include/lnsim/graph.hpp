#pragma once

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "lnsim/util.hpp"

namespace lnsim {

enum class Client { Lnd, CLightning, Eclair };

enum class AddressClass { Ipv4, Ipv6, Onion };

const char* client_name(Client c);
std::optional<Client> client_from_name(const std::string& name);

struct FeePolicy {
    Msat base_fee_msat = 1000;
    int64_t fee_rate_ppm = 1;
    int cltv_delta = 40;
};

struct NodeAttributes {
    std::optional<Client> client;
    AddressClass address_class = AddressClass::Ipv4;
    std::string location; // empty for onion-only nodes
};

// policy_ab is set by node_a and priced on traffic a -> b
struct Channel {
    std::string cid;
    int node_a = -1;
    int node_b = -1;
    Msat capacity_msat = 0;
    Msat balance_ab_msat = -1; // -1 = unknown / not yet assigned
    Msat balance_ba_msat = -1;
    FeePolicy policy_ab;
    FeePolicy policy_ba;
    bool is_public = true;
};

// rev=false traverses a->b
struct EdgeRef {
    int channel = -1;
    bool rev = false;
};

struct LatencyModel {
    int64_t intra_ms = 30;
    int64_t cross_ms = 100;
    int64_t onion_ms = 400;
    std::map<std::pair<std::string, std::string>, int64_t> pair_ms;

    int64_t between(const NodeAttributes& a, const NodeAttributes& b) const;
    void load_csv(const std::string& path);
};

class NetworkGraph {
public:
    std::vector<std::string> node_ids;
    std::vector<NodeAttributes> node_attrs;
    std::vector<Channel> channels;
    LatencyModel latency;

    int add_node(const std::string& id);
    int add_node(const std::string& id, const NodeAttributes& attrs);
    // returns channel index; balances may stay unset (-1)
    int add_channel(const std::string& cid, const std::string& node1, const std::string& node2,
                    Msat capacity_msat, const FeePolicy& p_ab, const FeePolicy& p_ba,
                    bool is_public = true);
    void rebuild_adjacency();

    int node_count() const { return static_cast<int>(node_ids.size()); }
    int find_node(const std::string& id) const;
    int find_channel(const std::string& cid) const;

    const std::vector<EdgeRef>& out_of(int node) const { return out_edges_.at(node); }
    const std::vector<EdgeRef>& into(int node) const { return in_edges_.at(node); }

    int tail(EdgeRef e) const;
    int head(EdgeRef e) const;
    const FeePolicy& policy(EdgeRef e) const;
    Msat balance(EdgeRef e) const;
    void set_balance(EdgeRef e, Msat value);

    Msat max_capacity_msat() const { return max_capacity_msat_; }
    int64_t latency_ms(int u, int v) const;

private:
    std::unordered_map<std::string, int> node_index_;
    std::unordered_map<std::string, int> channel_index_;
    std::vector<std::vector<EdgeRef>> out_edges_;
    std::vector<std::vector<EdgeRef>> in_edges_;
    Msat max_capacity_msat_ = 0;
};

NetworkGraph load_snapshot(const std::string& path);
void write_snapshot(const NetworkGraph& g, const std::string& path);

struct BalanceMode {
    enum Kind { Uniform, OneSided, Skewed };
    Kind kind = Uniform;
    double skew = 0.7;       // dominant-side floor fraction for Skewed
    double skew_prob = 0.65; // chance a channel is skewed at all

    static BalanceMode parse(const std::string& text);
};

// fills only channels whose balances are still unset; whole-sat granularity
void assign_balances(NetworkGraph& g, const BalanceMode& mode, Rng& rng);

struct ClientDistribution {
    int lnd = 292;
    int clightning = 54;
    int eclair = 24;
};

// labels nodes that have no client yet, draws address class and location
void assign_attributes(NetworkGraph& g, const ClientDistribution& dist, double onion_share,
                       const std::vector<std::string>& locations, Rng& rng);

} // namespace lnsim
