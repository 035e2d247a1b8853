#pragma once

#include <optional>

#include "lnsim/graph.hpp"

namespace lnsim {

// every constant is a knob so weighting sensitivity can be studied
struct WeightParams {
    double lnd_risk_factor = 15e-9;
    double cl_risk_factor = 10.0;
    double cl_bias_msat = 1.0;
    double eclair_cltv_factor = 0.15;
    double eclair_capacity_factor = 0.5;
};

inline constexpr int kMaxPathNodes = 20;

Msat hop_fee(const FeePolicy& policy, Msat amt);

double edge_weight(Client client, const FeePolicy& policy, Msat capacity_msat,
                   Msat max_capacity_msat, Msat amt, const WeightParams& wp);

struct Path {
    int sender = -1;
    int recipient = -1;
    Msat amount_msat = 0;
    std::vector<EdgeRef> hops;        // ordered sender to recipient
    std::vector<Msat> per_hop_amount; // amount entering each hop, non-increasing
    double total_weight = 0.0;

    Msat sender_outlay() const { return per_hop_amount.empty() ? 0 : per_hop_amount.front(); }
    std::vector<int> node_sequence(const NetworkGraph& g) const;
};

// evaluates amounts and weight right to left; rejects capacity violations,
// broken continuity, the 20-node cap, and private channels away from the endpoints
std::optional<Path> make_path(const NetworkGraph& g, Client client, const WeightParams& wp,
                              int sender, int recipient, Msat amt,
                              const std::vector<EdgeRef>& hops);

// total order used everywhere ties matter: weight, then hop count, then cid sequence
bool path_order_less(const NetworkGraph& g, const Path& a, const Path& b);

std::optional<Path> find_path(const NetworkGraph& g, int sender, int recipient, Msat amt,
                              Client client, const WeightParams& wp = {});

std::vector<Path> k_shortest_paths(const NetworkGraph& g, int sender, int recipient, Msat amt,
                                   int k, Client client, const WeightParams& wp = {});

// maximin-capacity route, for picking large payment values
std::optional<std::vector<EdgeRef>> widest_capacity_path(const NetworkGraph& g, int sender,
                                                         int recipient);

// bottleneck capacity of that route; 0 = unreachable
Msat widest_capacity_bottleneck(const NetworkGraph& g, int sender, int recipient);

} // namespace lnsim
