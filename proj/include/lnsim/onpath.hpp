#pragma once

#include <array>

#include "lnsim/traffic.hpp"

namespace lnsim {

enum class TopologyMode { LowerBound, Clique };

// path-length probabilities conditioned on outcome, lengths counted in nodes.
// direct payments (two nodes) have no intermediary and are excluded here.
struct LengthDistribution {
    Outcome outcome = Outcome::Success;
    std::array<double, kMaxPathNodes + 1> probs{}; // probs[l] for l in 3..20

    static LengthDistribution from_lengths(const std::map<int, double>& lengths, Outcome outcome);
    void validate() const; // throws std::invalid_argument
};

// chance the adversary's predecessor-is-sender guess is right
double sender_success_probability(const LengthDistribution& dist, TopologyMode mode);
double sender_fail_probability(const LengthDistribution& dist, TopologyMode mode);
// successor-is-recipient guess, numerically the mirror of the sender case
double recipient_probability(const LengthDistribution& dist, TopologyMode mode);

struct AdversaryCheck {
    double sender_success = 0.0;
    double recipient_success = 0.0;
    double sender_fail = 0.0;
    double recipient_fail = 0.0; // a failed payment never pinpoints the recipient
    int64_t success_payments = 0;
    int64_t fail_payments = 0; // failures some intermediary observed
};

// scores the always-guess-the-neighbor adversary on a simulated log,
// averaging per payment so the result is comparable to the clique formula
AdversaryCheck empirical_adversary_check(const EventLog& log);

struct OnpathRow {
    std::string scenario;
    std::string target;  // sender | recipient
    std::string outcome; // success | fail
    std::string mode;    // lower_bound | clique
    double probability = 0.0;
};
void write_onpath_csv(const std::vector<OnpathRow>& rows, const std::string& path);

} // namespace lnsim
