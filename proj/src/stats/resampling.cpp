#include <algorithm>
#include <cmath>
#include <thread>

#include "vadb/errors.hpp"
#include "vadb/metrics.hpp"
#include "vadb/nn/rng.hpp"

namespace vadb::stats {

namespace {

// linear-interpolation quantile over a sorted vector
double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw UndefinedStatError("quantile of empty set");
    if (sorted.size() == 1) return sorted[0];
    const double h = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

}  // namespace

std::pair<double, double> error_bars(double estimate, double lo, double hi) {
    return {estimate - lo, hi - estimate};
}

CiResult bootstrap_ci(const MetricFn& metric, const PairedSample& s, int B,
                      double level, std::uint64_t seed, int threads) {
    if (s.size() < 2) throw UndefinedStatError("bootstrap: need at least 2 samples");
    if (B < 1) throw ConfigError("bootstrap: B must be positive");
    if (!(level > 0.0 && level < 1.0)) throw ConfigError("bootstrap: bad level");

    CiResult out;
    out.estimate = metric(s);

    const std::size_t n = s.size();
    std::vector<double> values(static_cast<std::size_t>(B));
    std::vector<std::uint8_t> ok(static_cast<std::size_t>(B), 0);

    auto run_range = [&](int b0, int b1) {
        PairedSample r;
        r.predictions.resize(n);
        r.ground_truth.resize(n);
        for (int b = b0; b < b1; ++b) {
            nn::Rng rng = nn::Rng::from_tag(seed, "bootstrap", static_cast<std::uint64_t>(b));
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t k = static_cast<std::size_t>(rng.below(n));
                r.predictions[i] = s.predictions[k];
                r.ground_truth[i] = s.ground_truth[k];
            }
            try {
                values[static_cast<std::size_t>(b)] = metric(r);
                ok[static_cast<std::size_t>(b)] = 1;
            } catch (const UndefinedStatError&) {
                // degenerate resample (e.g. constant vector), skipped
            }
        }
    };

    if (threads <= 1) {
        run_range(0, B);
    } else {
        std::vector<std::thread> pool;
        const int chunk = (B + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const int b0 = t * chunk;
            const int b1 = std::min(B, b0 + chunk);
            if (b0 >= b1) break;
            pool.emplace_back(run_range, b0, b1);
        }
        for (auto& th : pool) th.join();
    }

    std::vector<double> kept;
    kept.reserve(static_cast<std::size_t>(B));
    for (int b = 0; b < B; ++b)
        if (ok[static_cast<std::size_t>(b)]) kept.push_back(values[static_cast<std::size_t>(b)]);
    out.degenerate_resamples = B - static_cast<int>(kept.size());
    if (out.degenerate_resamples * 2 > B)
        throw UnstableStatError("bootstrap: more than half of the resamples were degenerate");

    std::sort(kept.begin(), kept.end());
    const double a = (1.0 - level) / 2.0;
    out.lo = quantile_sorted(kept, a);
    out.hi = quantile_sorted(kept, 1.0 - a);
    const auto bars = error_bars(out.estimate, out.lo, out.hi);
    out.err_lo = bars.first;
    out.err_hi = bars.second;
    out.ordering_flagged = !(out.lo <= out.estimate && out.estimate <= out.hi);
    return out;
}

namespace {

// n! capped so it stays comparable with P
long long factorial_capped(std::size_t n, long long cap) {
    long long f = 1;
    for (std::size_t i = 2; i <= n; ++i) {
        f *= static_cast<long long>(i);
        if (f > cap) return cap + 1;
    }
    return f;
}

}  // namespace

double permutation_pvalue(const MetricFn& metric, const PairedSample& s, int P,
                          std::uint64_t seed) {
    if (s.size() < 2) throw UndefinedStatError("permutation test: need at least 2 samples");
    if (P < 1) throw ConfigError("permutation test: P must be positive");

    const double observed = std::fabs(metric(s));

    PairedSample r = s;
    if (factorial_capped(s.size(), P) <= static_cast<long long>(P)) {
        // small-sample mode: every distinct permutation exactly once
        std::sort(r.ground_truth.begin(), r.ground_truth.end());
        long long count = 0, hits = 0;
        do {
            ++count;
            if (std::fabs(metric(r)) >= observed) ++hits;
        } while (std::next_permutation(r.ground_truth.begin(), r.ground_truth.end()));
        return static_cast<double>(1 + hits) / static_cast<double>(1 + count);
    }

    long long hits = 0;
    for (int t = 0; t < P; ++t) {
        nn::Rng rng = nn::Rng::from_tag(seed, "perm", static_cast<std::uint64_t>(t));
        r.ground_truth = s.ground_truth;
        rng.shuffle(r.ground_truth);
        if (std::fabs(metric(r)) >= observed) ++hits;
    }
    return static_cast<double>(1 + hits) / static_cast<double>(1 + P);
}

}  // namespace vadb::stats
