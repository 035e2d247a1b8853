#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lnsim/chain.hpp"
#include "lnsim/graph.hpp"
#include "lnsim/util.hpp"

namespace lnsim {

// Synthetic inputs: hub-and-spoke network snapshots sized to order of the
// real network's shape, and an on-chain transaction corpus with planted
// channels, peeling chains and single-rule decoys.

struct HubTier {
    int count = 0;           // hubs in this tier
    int spokes = 0;          // leaf channels each hub collects
    Msat mesh_cap_msat = 0;  // capacity used for this tier's hub links
};

struct TieredGraphParams {
    std::vector<HubTier> tiers;
    int leaf_channels_min = 1;
    int leaf_channels_max = 3;
    Msat leaf_cap_msat = 8'000'000'000;
    int hub_mesh_links = 3; // random hub links per hub on top of the hub ring
};

// hubs form a connected mesh, leaves attach to hubs weighted by unfilled
// quota. Balances stay unassigned so callers pick a BalanceMode themselves.
NetworkGraph make_tiered_graph(const TieredGraphParams& p, uint64_t seed);

// complete graph on n nodes; with drop_matching the pairs (0,1),(2,3),...
// lose their direct channel, forcing some traffic through an intermediary
NetworkGraph make_clique(int n, Msat capacity_msat, bool drop_matching);

struct ChainCorpus {
    std::vector<TransactionRecord> txs; // shuffled
    BlockWindow window;
    std::vector<std::string> private_opens;
    std::vector<std::string> private_closes;
    std::vector<std::string> public_opens;
    std::vector<std::string> public_closes;
    std::map<std::string, std::pair<std::string, std::string>> public_endpoints;
    std::vector<std::string> decoys; // each breaks exactly one classifier rule
    std::vector<std::vector<std::string>> planted_chains; // sorted txid lists
    std::vector<std::string> seeds; // every public open and close
};

// private/public channel counts are exact; chains are wired through change
// outputs with occasional refund co-spends, and some closes hand a refund
// output to the next chain's owner (the second-participant pattern)
ChainCorpus make_chain_corpus(int total_txs, int private_channels, int public_channels,
                              int decoy_count, int chain_count, uint64_t seed);

} // namespace lnsim
