#include "vadb/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "vadb/annotations.hpp"
#include "vadb/errors.hpp"

namespace vadb::stats {

using nlohmann::json;

namespace {

struct MetricSpec {
    std::string name;
    MetricFn fn;
    bool with_p;
};

std::vector<MetricSpec> metric_suite(double binary_threshold) {
    return {
        {"SRCC", [](const PairedSample& s) { return srcc(s); }, true},
        {"PLCC", [](const PairedSample& s) { return plcc(s); }, true},
        {"RMSE", [](const PairedSample& s) { return rmse(s); }, false},
        {"KRCC", [](const PairedSample& s) { return krcc(s); }, true},
        {"MSE", [](const PairedSample& s) { return mse(s); }, false},
        {"BinaryACC",
         [binary_threshold](const PairedSample& s) {
             return binary_accuracy(s, binary_threshold);
         },
         true},
    };
}

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

std::string fmt_p(double p) {
    return p < 0.001 ? "<0.001" : fmt("%.3f", p);
}

}  // namespace

std::vector<std::string> canonical_dimension_order(std::vector<std::string> dims) {
    std::vector<std::string> out;
    std::set<std::string> present(dims.begin(), dims.end());
    for (const auto& d : data::report_dimension_order()) {
        if (present.erase(d)) out.push_back(d);
    }
    std::vector<std::string> rest(present.begin(), present.end());
    std::sort(rest.begin(), rest.end());
    out.insert(out.end(), rest.begin(), rest.end());
    return out;
}

MetricsReport build_report(const std::vector<PairedSample>& samples,
                           const EvalConfig& cfg) {
    if (samples.empty()) throw Error("build_report: no dimensions supplied");

    MetricsReport report;
    report.seed = cfg.seed;
    std::vector<std::string> dims;
    for (const auto& s : samples) dims.push_back(s.dimension);
    report.dimensions = canonical_dimension_order(dims);

    for (const auto& s : samples) {
        auto& row = report.cells[s.dimension];
        for (const auto& m : metric_suite(cfg.binary_threshold)) {
            MetricEntry e;
            const CiResult ci = bootstrap_ci(m.fn, s, cfg.bootstrap_samples,
                                             cfg.bootstrap_level, cfg.seed, cfg.threads);
            e.estimate = ci.estimate;
            e.lo = ci.lo;
            e.hi = ci.hi;
            e.err_lo = ci.err_lo;
            e.err_hi = ci.err_hi;
            e.degenerate_resamples = ci.degenerate_resamples;
            e.ordering_flagged = ci.ordering_flagged;
            if (m.with_p)
                e.p_value = permutation_pvalue(m.fn, s, cfg.permutations, cfg.seed);
            row[m.name] = e;
        }
    }
    return report;
}

json MetricsReport::to_json() const {
    json j;
    j["config_hash"] = config_hash;
    j["seed"] = seed;
    j["dimensions"] = dimensions;
    json cells_j = json::object();
    for (const auto& [dim, row] : cells) {
        json row_j = json::object();
        for (const auto& [metric, e] : row) {
            json e_j;
            e_j["estimate"] = e.estimate;
            e_j["ci"] = {e.lo, e.hi};
            e_j["err"] = {e.err_lo, e.err_hi};
            if (e.p_value) e_j["p"] = *e.p_value;
            e_j["degenerate"] = e.degenerate_resamples;
            e_j["flagged"] = e.ordering_flagged;
            row_j[metric] = e_j;
        }
        cells_j[dim] = row_j;
    }
    j["metrics"] = cells_j;
    return j;
}

MetricsReport MetricsReport::from_json(const json& j) {
    MetricsReport r;
    r.config_hash = j.at("config_hash").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.dimensions = j.at("dimensions").get<std::vector<std::string>>();
    for (auto it = j.at("metrics").begin(); it != j.at("metrics").end(); ++it) {
        auto& row = r.cells[it.key()];
        for (auto mit = it.value().begin(); mit != it.value().end(); ++mit) {
            const json& e_j = mit.value();
            MetricEntry e;
            e.estimate = e_j.at("estimate").get<double>();
            e.lo = e_j.at("ci")[0].get<double>();
            e.hi = e_j.at("ci")[1].get<double>();
            e.err_lo = e_j.at("err")[0].get<double>();
            e.err_hi = e_j.at("err")[1].get<double>();
            if (e_j.contains("p")) e.p_value = e_j.at("p").get<double>();
            e.degenerate_resamples = e_j.at("degenerate").get<int>();
            e.ordering_flagged = e_j.at("flagged").get<bool>();
            row[mit.key()] = e;
        }
    }
    return r;
}

std::string MetricsReport::render_table() const {
    std::ostringstream os;
    static const std::vector<std::string> order = {"SRCC", "PLCC", "RMSE",
                                                   "KRCC", "MSE",  "BinaryACC"};
    os << "Metric";
    for (const auto& d : dimensions) {
        os << "\t" << d;
    }
    os << "\n";
    for (const auto& m : order) {
        bool any = false;
        for (const auto& d : dimensions)
            any = any || (cells.count(d) && cells.at(d).count(m));
        if (!any) continue;
        os << m;
        for (const auto& d : dimensions) {
            os << "\t";
            auto dit = cells.find(d);
            if (dit != cells.end()) {
                auto mit = dit->second.find(m);
                if (mit != dit->second.end()) {
                    os << fmt("%.2f", mit->second.estimate);
                    continue;
                }
            }
            os << "-";
        }
        os << "\n";
    }

    // per-dimension statistics in the appendix layout
    for (const auto& d : dimensions) {
        auto dit = cells.find(d);
        if (dit == cells.end()) continue;
        os << "\n[" << d << "]\n";
        os << "Index\tValue\tP-value\t95% Confidence Interval\tError Bars (Lower/Upper)\n";
        for (const auto& m : order) {
            auto mit = dit->second.find(m);
            if (mit == dit->second.end()) continue;
            const MetricEntry& e = mit->second;
            os << m << "\t" << fmt("%.4f", e.estimate) << "\t"
               << (e.p_value ? fmt_p(*e.p_value) : "-") << "\t["
               << fmt("%.4f", e.lo) << ", " << fmt("%.4f", e.hi) << "]\t("
               << fmt("%.4f", e.err_lo) << ", " << fmt("%.4f", e.err_hi) << ")";
            if (e.ordering_flagged) os << "\t[CI-ORDERING-FLAGGED]";
            os << "\n";
        }
    }
    return os.str();
}

}  // namespace vadb::stats
