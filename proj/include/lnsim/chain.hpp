#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "lnsim/util.hpp"

namespace lnsim {

// On-chain footprint analysis. Works on pre-parsed transaction records
// (script classes are fields, not scripts), finds transactions shaped like
// channel opens and closes, and stitches them into peeling chains to guess
// who opened what.

enum class InputScript { P2wpkh, P2sh, P2wshMultisig2of2, Other };
enum class OutputScript { P2wsh, Other };

InputScript input_script_from_name(const std::string& name);
OutputScript output_script_from_name(const std::string& name);
const char* to_name(InputScript s);
const char* to_name(OutputScript s);

struct SpendRef {
    std::string txid;
    int input_index = 0;
};

struct TxInput {
    std::string prev_txid;
    int prev_index = 0;
    InputScript script_class = InputScript::Other;
    Sat value_sat = 0;
    uint32_t sequence = 0xffffffff;
};

struct TxOutput {
    int index = 0;
    OutputScript script_class = OutputScript::Other;
    Sat value_sat = 0;
    std::optional<SpendRef> spent_by;
};

struct TransactionRecord {
    std::string txid;
    int64_t block_height = 0;
    std::vector<TxInput> inputs;
    std::vector<TxOutput> outputs;
};

struct TxDataset {
    std::vector<TransactionRecord> txs;
    std::unordered_map<std::string, int> by_txid;

    const TransactionRecord* find(const std::string& txid) const;
    // rebuilds the txid index and cross-checks every spend link that has
    // both ends in the dataset; throws ParseError on any mismatch
    void index_and_validate();
};

// one record per line; throws ParseError with the offending line number
TxDataset load_transactions(const std::string& path);
void save_transactions(const std::vector<TransactionRecord>& txs, const std::string& path);

struct BlockWindow {
    int64_t first = 0;
    int64_t last = std::numeric_limits<int64_t>::max();
    bool contains(int64_t height) const { return height >= first && height <= last; }
};

// the opening classifier is a conjunction of observed features; each can be
// switched off on its own to study how the candidate set inflates
struct HeuristicRules {
    bool max_two_outputs = true;
    bool single_p2wsh_output = true;
    bool value_cap = true;
    bool single_spend = true; // spend refs are single-valued, kept for symmetry
    bool funding_script_classes = true;
    Sat value_cap_sat = 16'777'215;
};

// index of the channel output: the first P2WSH output, if any
std::optional<int> channel_output(const TransactionRecord& tx);
// in a two-output opening the non-channel output is the funder's change
std::optional<int> change_output(const TransactionRecord& tx);

bool classify_opening(const TransactionRecord& tx, const BlockWindow& window,
                      const HeuristicRules& rules = {});
bool classify_closing(const TransactionRecord& tx);

struct ChannelLink {
    std::string open_txid;
    std::optional<std::string> close_txid;
    bool is_public = false;
    std::optional<int> cluster_id;
    std::vector<std::string> participants; // 0, 1 or 2 node ids, opener first
};

// candidate private channels: classified opens outside the public set whose
// channel output is unspent or spent by a classified close. An open whose
// output went to something that does not look like a close is dropped.
std::vector<ChannelLink> match_open_close(const TxDataset& ds, const BlockWindow& window,
                                          const std::set<std::string>& public_txids,
                                          const HeuristicRules& rules = {});

struct PeelingChains {
    std::vector<std::vector<std::string>> chains; // txids, discovery order
    std::unordered_map<std::string, int> chain_of;
    std::vector<std::string> new_opens; // traced opens that were not seeds
};

// grows chains out of the seed transactions. Backward, an opening's inputs
// are the funder's coins, so the funding transaction joins the chain while
// it still looks like an open or close. Forward, the change output of an
// open and every output of a close are followed into their spenders.
// A close's own input is never walked backward: that is the shared channel
// point, and crossing it would fuse the two participants' wallets.
PeelingChains trace_peeling_chains(const TxDataset& ds, const std::vector<std::string>& seeds,
                                   const BlockWindow& window, const HeuristicRules& rules = {});

// Chains become clusters. A cluster whose public channels share exactly one
// endpoint gets that node as its opener; each private link then inherits the
// opener of its open's cluster, and picks up a second participant when one
// of its close's outputs funds an open sitting in a different attributed
// cluster.
std::vector<ChannelLink> cluster_and_identify(
    const TxDataset& ds, const PeelingChains& chains, std::vector<ChannelLink> links,
    const std::map<std::string, std::pair<std::string, std::string>>& public_endpoints);

struct AttributionCounts {
    int both = 0;
    int one = 0;
    int none = 0;
};
AttributionCounts count_attributions(const std::vector<ChannelLink>& links);

void write_chain_links_csv(const std::vector<ChannelLink>& links, const std::string& path);

} // namespace lnsim
