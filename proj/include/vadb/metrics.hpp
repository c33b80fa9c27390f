#ifndef VADB_METRICS_HPP
#define VADB_METRICS_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace vadb::stats {

struct PairedSample {
    std::vector<double> predictions;
    std::vector<double> ground_truth;
    std::string dimension;

    std::size_t size() const { return predictions.size(); }
};

// average ranks; ties share the mean of their rank run
std::vector<double> average_ranks(const std::vector<double>& v);

// Spearman rank correlation (Pearson over average ranks). Throws
// UndefinedStatError for n < 2 or a constant vector.
double srcc(const PairedSample& s);
// Pearson linear correlation.
double plcc(const PairedSample& s);
// Root mean squared error, n >= 1.
double rmse(const PairedSample& s);
// Kendall tau-b by explicit concordant/discordant pair counting.
double krcc(const PairedSample& s);
// Both vectors binarized at the threshold (>= is positive), fraction equal.
double binary_accuracy(const PairedSample& s, double threshold = 5.0);
double mse(const PairedSample& s);

using MetricFn = std::function<double(const PairedSample&)>;

struct CiResult {
    double estimate = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    double err_lo = 0.0;  // estimate - lo
    double err_hi = 0.0;  // hi - estimate
    int degenerate_resamples = 0;
    bool ordering_flagged = false;  // lo <= estimate <= hi violated (never clamped)
};

// Paired nonparametric bootstrap with a percentile interval. Resample b draws
// its indices from the stream (seed, "bootstrap", b), so results do not
// depend on the number of worker threads. Resamples on which the metric is
// undefined are skipped and counted; more than 50% degenerate raises
// UnstableStatError.
CiResult bootstrap_ci(const MetricFn& metric, const PairedSample& s, int B = 1000,
                      double level = 0.95, std::uint64_t seed = 0, int threads = 1);

// error-bar arithmetic used by the report: (estimate - lo, hi - estimate)
std::pair<double, double> error_bars(double estimate, double lo, double hi);

// Two-sided permutation p-value with +1 smoothing. When n! <= P the
// permutations of the ground truth are enumerated exhaustively (p = (1+k) /
// (n!+1)); otherwise P shuffles are sampled from (seed, "perm", t).
double permutation_pvalue(const MetricFn& metric, const PairedSample& s,
                          int P = 10000, std::uint64_t seed = 0);

}  // namespace vadb::stats

#endif
