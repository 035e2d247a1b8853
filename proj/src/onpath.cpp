#include "lnsim/onpath.hpp"

#include <cmath>
#include <fstream>

namespace lnsim {

LengthDistribution LengthDistribution::from_lengths(const std::map<int, double>& lengths,
                                                    Outcome outcome) {
    LengthDistribution d;
    d.outcome = outcome;
    double kept = 0.0;
    for (auto [len, p] : lengths) {
        if (len == 2) continue; // no intermediary, invisible to this adversary
        if (len < 2 || len > kMaxPathNodes)
            throw std::invalid_argument("length distribution: length out of range");
        d.probs[len] = p;
        kept += p;
    }
    if (kept <= 0.0)
        throw std::invalid_argument("length distribution: no multi-hop mass");
    for (int l = 3; l <= kMaxPathNodes; ++l) d.probs[l] /= kept;
    d.validate();
    return d;
}

void LengthDistribution::validate() const {
    double sum = 0.0;
    for (int l = 3; l <= kMaxPathNodes; ++l) {
        double p = probs[l];
        if (p < 0.0 || p > 1.0)
            throw std::invalid_argument("length distribution: probability out of [0,1]");
        sum += p;
    }
    if (std::fabs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("length distribution: probabilities do not sum to 1");
    if (outcome == Outcome::Fail && probs[3] != 0.0)
        throw std::invalid_argument("length distribution: observable failure needs four nodes");
}

static double success_probability(const LengthDistribution& dist, TopologyMode mode) {
    dist.validate();
    if (dist.outcome != Outcome::Success)
        throw std::invalid_argument("expected a success-conditioned distribution");
    if (mode == TopologyMode::LowerBound) return dist.probs[3];
    double p = 0.0;
    for (int l = 3; l <= kMaxPathNodes; ++l) p += dist.probs[l] / (l - 2);
    return p;
}

static double fail_probability(const LengthDistribution& dist, TopologyMode mode) {
    dist.validate();
    if (dist.outcome != Outcome::Fail)
        throw std::invalid_argument("expected a fail-conditioned distribution");
    if (mode == TopologyMode::LowerBound) return dist.probs[4];
    double p = dist.probs[4];
    for (int l = 5; l <= kMaxPathNodes; ++l) p += dist.probs[l] / (l - 3);
    return p;
}

double sender_success_probability(const LengthDistribution& dist, TopologyMode mode) {
    return success_probability(dist, mode);
}

double sender_fail_probability(const LengthDistribution& dist, TopologyMode mode) {
    return fail_probability(dist, mode);
}

double recipient_probability(const LengthDistribution& dist, TopologyMode mode) {
    return dist.outcome == Outcome::Success ? success_probability(dist, mode)
                                            : fail_probability(dist, mode);
}

AdversaryCheck empirical_adversary_check(const EventLog& log) {
    AdversaryCheck c;
    double s_succ = 0.0, r_succ = 0.0, s_fail = 0.0;
    for (const PaymentEvent& ev : log.events) {
        const Path* p = ev.final_path();
        if (!p) continue;
        int len = static_cast<int>(p->hops.size()) + 1;
        if (ev.outcome == Outcome::Success && len >= 3) {
            // one intermediary sits right after the sender, one right before
            // the recipient; score each payment by its fraction of right guesses
            s_succ += 1.0 / (len - 2);
            r_succ += 1.0 / (len - 2);
            c.success_payments++;
        } else if (ev.outcome == Outcome::Fail && ev.failed_hop_index >= 3) {
            // observers are the intermediaries that forwarded before the break
            s_fail += 1.0 / (ev.failed_hop_index - 2);
            c.fail_payments++;
        }
    }
    if (c.success_payments == 0 && c.fail_payments == 0)
        throw std::runtime_error("empirical_adversary_check: no observable multi-hop payments");
    if (c.success_payments) {
        c.sender_success = s_succ / c.success_payments;
        c.recipient_success = r_succ / c.success_payments;
    }
    if (c.fail_payments) c.sender_fail = s_fail / c.fail_payments;
    return c;
}

void write_onpath_csv(const std::vector<OnpathRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write onpath csv: " + path);
    out << "scenario,target,outcome,mode,probability\n";
    char buf[32];
    for (const OnpathRow& r : rows) {
        std::snprintf(buf, sizeof buf, "%.6f", r.probability);
        out << r.scenario << ',' << r.target << ',' << r.outcome << ',' << r.mode << ',' << buf
            << "\n";
    }
}

} // namespace lnsim
