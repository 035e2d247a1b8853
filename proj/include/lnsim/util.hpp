#pragma once

#include <cstdint>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace lnsim {

// all amounts are carried in millisatoshi internally; sat only at the edges
using Msat = int64_t;
using Sat = int64_t;

inline constexpr Msat kMsatPerSat = 1000;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// stable per-index stream seeds for parallel sweeps
inline uint64_t derive_seed(uint64_t base, uint64_t index) {
    return splitmix64(base ^ splitmix64(index + 0x51aULL));
}

class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t next() { return eng_(); }

    // unbiased draw in [0, n) via rejection
    uint64_t below(uint64_t n) {
        if (n == 0) throw std::invalid_argument("Rng::below(0)");
        uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t v;
        do {
            v = eng_();
        } while (v >= limit);
        return v % n;
    }

    // inclusive integer range
    int64_t range(int64_t lo, int64_t hi) {
        if (lo > hi) throw std::invalid_argument("Rng::range: lo > hi");
        return lo + static_cast<int64_t>(below(static_cast<uint64_t>(hi - lo) + 1));
    }

    // uniform in [0, 1) with 53 random bits
    double real() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    bool chance(double p) {
        if (p <= 0.0) return false;
        if (p >= 1.0) return true;
        return real() < p;
    }

private:
    std::mt19937_64 eng_;
};

struct MeanCi {
    double mean = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    size_t n = 0;
};

// 95% interval on the mean, small-sample t table for the dfs we use
inline MeanCi mean_ci95(const std::vector<double>& xs) {
    MeanCi out;
    out.n = xs.size();
    if (xs.empty()) return out;
    double sum = 0.0;
    for (double x : xs) sum += x;
    out.mean = sum / static_cast<double>(xs.size());
    if (xs.size() < 2) {
        out.ci_low = out.ci_high = out.mean;
        return out;
    }
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    static const double t95[] = {0,     0,     12.706, 4.303, 3.182, 2.776,
                                 2.571, 2.447, 2.365,  2.306, 2.262, 2.228};
    size_t n = xs.size();
    double t = n <= 11 ? t95[n - 1] : 1.96;
    double half = t * sd / std::sqrt(static_cast<double>(n));
    out.ci_low = out.mean - half;
    out.ci_high = out.mean + half;
    return out;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        size_t pos = s.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(s.substr(start));
            break;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline std::string join(const std::vector<std::string>& parts, char sep) {
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i) out.push_back(sep);
        out += parts[i];
    }
    return out;
}

} // namespace lnsim
