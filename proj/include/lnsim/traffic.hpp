#pragma once

#include <map>

#include "lnsim/pathfind.hpp"

namespace lnsim {

enum class EndpointsMode { Uniform, Weighted };
EndpointsMode endpoints_from_name(const std::string& name);

struct ValuesMode {
    enum Kind { Cheap, Expensive, Fixed };
    Kind kind = Cheap;
    Sat mean_sat = 1000;
    Sat jitter_sat = 10;

    // "cheap" | "expensive" | "fixed(mean_sat, jitter_sat)"
    static ValuesMode parse(const std::string& text);
};

struct SimConfig {
    int64_t t_pay = 1000; // payments per day
    int duration_days = 1;
    EndpointsMode endpoints = EndpointsMode::Uniform;
    ValuesMode values;
    int retries = 1; // alternative routes tried per payment
    uint64_t seed = 1;
    Msat cheap_floor_msat = 1000;
    WeightParams weights;
};

enum class Outcome { Success, Fail };

struct AttemptRecord {
    Path path;
    int failed_hop = 0; // 1-based hop that lacked balance; 0 = this attempt delivered
};

struct PaymentEvent {
    int64_t id = 0;
    int sender = -1;
    int recipient = -1;
    Msat amount_msat = 0;
    std::vector<AttemptRecord> attempts;
    Outcome outcome = Outcome::Fail;
    int failed_hop_index = 0; // from the last attempt; 0 = never found a viable route
    int64_t start_ms = 0;
    int64_t end_ms = 0;

    const Path* final_path() const { return attempts.empty() ? nullptr : &attempts.back().path; }
};

struct EventLog {
    std::vector<PaymentEvent> events;
    int duration_days = 0;
};

std::pair<int, int> sample_endpoints(const NetworkGraph& g, EndpointsMode mode, Rng& rng);

// 0 means no routable value exists for this pair, the payment is skipped
Msat payment_value(const NetworkGraph& g, int sender, int recipient, const ValuesMode& mode,
                   Msat cheap_floor_msat, Rng& rng);

// balance-checked forwarding with atomic commit; failures leave no trace
PaymentEvent execute_payment(NetworkGraph& g, int sender, int recipient, Msat amount, int retries,
                             const WeightParams& wp, int64_t start_ms = 0);

EventLog run_simulation(NetworkGraph& g, const SimConfig& cfg);

// FailObservable keeps failures some forwarding intermediary actually saw,
// which is only possible from the third hop on
enum class LengthFilter { Success, FailObservable };
std::map<int, double> path_length_distribution(const EventLog& log, LengthFilter filter);

struct ThroughputBucket {
    int min_channels = 0;
    int max_channels = 0; // 0 = open ended
    int node_count = 0;
    double mean_forwards_per_day = 0.0;
};
std::vector<ThroughputBucket> throughput_report(const EventLog& log, const NetworkGraph& g);

void write_event_log_csv(const EventLog& log, const NetworkGraph& g, const std::string& path);

} // namespace lnsim
