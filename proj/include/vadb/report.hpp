#ifndef VADB_REPORT_HPP
#define VADB_REPORT_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vadb/metrics.hpp"

namespace vadb::stats {

struct MetricEntry {
    double estimate = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    double err_lo = 0.0;
    double err_hi = 0.0;
    std::optional<double> p_value;
    int degenerate_resamples = 0;
    bool ordering_flagged = false;

    bool operator==(const MetricEntry&) const = default;
};

struct MetricsReport {
    std::vector<std::string> dimensions;  // display column order
    std::map<std::string, std::map<std::string, MetricEntry>> cells;
    std::string config_hash;
    std::uint64_t seed = 0;

    bool operator==(const MetricsReport&) const = default;

    nlohmann::json to_json() const;
    static MetricsReport from_json(const nlohmann::json& j);
    std::string render_table() const;
};

struct EvalConfig {
    int bootstrap_samples = 1000;
    double bootstrap_level = 0.95;
    int permutations = 10000;
    double binary_threshold = 5.0;
    std::uint64_t seed = 0;
    int threads = 1;
};

// Known dimensions in the paper's column order, unknown ones appended
// alphabetically.
std::vector<std::string> canonical_dimension_order(std::vector<std::string> dims);

// Point estimate + bootstrap CI per metric and dimension; permutation
// p-values for the correlation metrics and binary accuracy.
MetricsReport build_report(const std::vector<PairedSample>& samples,
                           const EvalConfig& cfg);

}  // namespace vadb::stats

#endif
